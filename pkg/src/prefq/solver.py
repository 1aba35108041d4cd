"""Satisfiability and validity for equality / rational-order formulas.

Conjunctions of literals are decided in polynomial time:

* equalities are merged with union-find (distinct constants never merge);
* ``<`` / ``<=`` become edges of an order graph over the merged classes,
  with strict edges chaining all mentioned rational constants;
* the conjunction is unsatisfiable iff a strongly connected component of that
  graph contains a strict edge or two distinct constants, or a disequality
  joins two terms of one component.

Q is dense, so a consistent graph always has a model in which every component
gets its own value; that settles every disequality between components.

Arbitrary formulas are handled by lazy case splitting, or by plain DNF
expansion.  Case splitting is a small CDCL search (watched literals, 1UIP
learning) over the canonical literals of :func:`prefq.formula.literal_key`;
the conjunction check is the theory oracle, and every theory conflict is
shrunk to a small core and learned as a clause.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .formula import (
    DEFAULT_DNF_BUDGET,
    FALSE,
    TRUE,
    And,
    Atom,
    AttrRef,
    Const,
    Domain,
    Formula,
    Or,
    Schema,
    Term,
    Truth,
    eval_ground,
    literal_atom,
    literal_key,
    negate_to_nnf,
    simplify,
    term_domain,
    to_dnf,
    trivial_truth,
)

Model = dict[str, dict[str, object]]


@dataclass(frozen=True)
class SatResult:
    sat: bool
    model: Model | None = None

    def __bool__(self) -> bool:
        return self.sat


UNSAT = SatResult(False)


class SolverError(Exception):
    pass


# ---------------------------------------------------------------------------
# Conjunctions


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        self.add(x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
        return ra


def _sccs(nodes: Sequence, succ: Mapping) -> dict:
    """Tarjan's algorithm, iterative; returns node -> component index."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    comp: dict = {}
    counter = 0
    ncomp = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(succ.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


class TheoryState:
    """Closure of a conjunction of atoms; the workhorse behind :func:`conj_sat`.

    ``component(t)`` identifies terms forced equal.  Components are built in
    two stages: union-find over ``=``, then strongly connected components of
    the order graph over the merged classes.
    """

    def __init__(self, atoms: Iterable[Atom]):
        self.atoms = list(atoms)
        self.consistent = True
        uf = _UnionFind()
        order: list[tuple[Term, Term, bool]] = []  # (x, y, strict) meaning x < y or x <= y
        diseq: list[tuple[Term, Term]] = []
        terms: list[Term] = []
        seen = set()
        for a in self.atoms:
            for t in (a.left, a.right):
                if t not in seen:
                    seen.add(t)
                    terms.append(t)
                    uf.add(t)
            v = trivial_truth(a)
            if v is False:
                self.consistent = False
            if v is not None:
                continue
            op, l, r = a.op, a.left, a.right
            if op == "=":
                uf.union(l, r)
            elif op == "!=":
                diseq.append((l, r))
            elif op in ("<", "<="):
                order.append((l, r, op == "<"))
            else:
                order.append((r, l, op == ">"))
        self.terms = terms
        self.uf = uf

        # Constants of each union-find class; two distinct ones is a conflict.
        cls_const: dict = {}
        for t in terms:
            if isinstance(t, Const):
                root = uf.find(t)
                prev = cls_const.get(root)
                if prev is not None and prev != t:
                    self.consistent = False
                cls_const[root] = t
        rationals = sorted({t.value for t in terms
                            if isinstance(t, Const) and not isinstance(t.value, str)})
        for lo, hi in zip(rationals, rationals[1:]):
            order.append((Const(lo), Const(hi), True))
        for c in rationals:
            uf.add(Const(c))

        roots = []
        rseen = set()
        for t in list(uf.parent):
            root = uf.find(t)
            if root not in rseen:
                rseen.add(root)
                roots.append(root)
        succ: dict = {}
        for x, y, _ in order:
            succ.setdefault(uf.find(x), []).append(uf.find(y))
        comp_of_root = _sccs(roots, succ)
        self.comp_of_root = comp_of_root
        self.ncomp = max(comp_of_root.values(), default=-1) + 1

        comp_const: dict[int, Const] = {}
        for root, c in cls_const.items():
            k = comp_of_root[root]
            prev = comp_const.get(k)
            if prev is not None and prev != c:
                self.consistent = False
            comp_const[k] = c
        for c in rationals:
            k = comp_of_root[uf.find(Const(c))]
            prev = comp_const.get(k)
            if prev is not None and prev != Const(c):
                self.consistent = False
            comp_const[k] = Const(c)
        self.comp_const = comp_const

        self.comp_edges: dict[int, set[int]] = {}
        for x, y, strict in order:
            cx, cy = self.component(x), self.component(y)
            if cx == cy:
                if strict:
                    self.consistent = False
            else:
                self.comp_edges.setdefault(cx, set()).add(cy)
        self.diseq_comps = set()
        for l, r in diseq:
            cl, cr = self.component(l), self.component(r)
            if cl == cr:
                self.consistent = False
            self.diseq_comps.add((min(cl, cr), max(cl, cr)))

    def component(self, t: Term) -> int | None:
        root = self.uf.find(t) if t in self.uf.parent else None
        return None if root is None else self.comp_of_root[root]

    def implied_truth(self, a: Atom) -> bool | None:
        """Cheap sound entailment check for ``a`` (used for propagation)."""
        cl, cr = self.component(a.left), self.component(a.right)
        if cl is None or cr is None:
            return None
        if a.op in ("=", "!="):
            if cl == cr:
                eq = True
            elif (min(cl, cr), max(cl, cr)) in self.diseq_comps:
                eq = False
            elif cl in self.comp_const and cr in self.comp_const:
                eq = False
            else:
                return None
            return eq if a.op == "=" else not eq
        if cl == cr:
            return a.op in ("<=", ">=")
        return None

    def values(self, env: Mapping[str, Schema]) -> dict[int, object]:
        """Concrete value per component: constants keep theirs; D gets fresh
        atoms, Q gets pairwise-distinct rationals respecting the order graph."""
        assert self.consistent
        comp_domain: dict[int, Domain] = {}
        first_seen: list[int] = []
        for t in self.terms:
            k = self.component(t)
            if k not in comp_domain:
                comp_domain[k] = term_domain(t, env)
                first_seen.append(k)
        out: dict[int, object] = {k: c.value for k, c in self.comp_const.items()}

        used_atoms = {v for v in out.values() if isinstance(v, str)}
        n = 0
        for k in first_seen:
            if comp_domain[k] is Domain.D and k not in out:
                while f"_a{n}" in used_atoms:
                    n += 1
                out[k] = f"_a{n}"
                used_atoms.add(out[k])
                n += 1

        q_comps = [k for k in range(self.ncomp)
                   if comp_domain.get(k, Domain.Q) is Domain.Q]
        qset = set(q_comps)
        preds: dict[int, set[int]] = {k: set() for k in q_comps}
        for x, ys in self.comp_edges.items():
            for y in ys:
                if x in qset and y in qset:
                    preds[y].add(x)
        topo = _toposort(q_comps, self.comp_edges, qset)
        # Smallest constant reachable downstream bounds each component above.
        hi: dict[int, Fraction | None] = {}
        for k in reversed(topo):
            best = out[k] if k in self.comp_const else None
            for y in self.comp_edges.get(k, ()):
                if y in qset and hi[y] is not None and (best is None or hi[y] < best):
                    best = hi[y]
            hi[k] = best
        used = sorted(v for k, v in out.items() if k in qset)
        for k in topo:
            if k in out:
                continue
            lows = [out[p] for p in preds[k]]
            lo = max(lows) if lows else None
            ceiling = None
            for y in self.comp_edges.get(k, ()):
                if y in qset and hi[y] is not None and (ceiling is None or hi[y] < ceiling):
                    ceiling = hi[y]
            above = [v for v in used if lo is None or v > lo]
            up = min(above) if above else None
            if ceiling is not None and (up is None or ceiling < up):
                up = ceiling
            if lo is None and up is None:
                v = Fraction(0)
            elif lo is None:
                v = up - 1
            elif up is None:
                v = lo + 1
            else:
                v = (lo + up) / 2
            out[k] = v
            used.append(v)
            used.sort()
        return out


def _toposort(nodes: Sequence[int], edges: Mapping[int, set[int]], keep: set[int]) -> list[int]:
    indeg = {k: 0 for k in nodes}
    for x, ys in edges.items():
        if x not in keep:
            continue
        for y in ys:
            if y in keep:
                indeg[y] += 1
    ready = sorted(k for k in nodes if indeg[k] == 0)
    out = []
    while ready:
        k = ready.pop(0)
        out.append(k)
        for y in sorted(edges.get(k, ())):
            if y in keep:
                indeg[y] -= 1
                if indeg[y] == 0:
                    ready.append(y)
    assert len(out) == len(nodes), "order graph over components must be acyclic"
    return out


def _model_from_state(state: TheoryState, env: Mapping[str, Schema]) -> Model:
    values = state.values(env)
    model: Model = {}
    fresh = 0
    taken = {v for v in values.values() if isinstance(v, str)}
    for var, schema in env.items():
        row: dict[str, object] = {}
        for attr, dom in schema.attributes:
            k = state.component(AttrRef(var, attr))
            if k is not None:
                row[attr] = values[k]
            elif dom is Domain.D:
                while f"_u{fresh}" in taken:
                    fresh += 1
                row[attr] = f"_u{fresh}"
                fresh += 1
            else:
                row[attr] = Fraction(0)
        model[var] = row
    return model


def conj_sat(atoms: Iterable[Atom], env: Mapping[str, Schema]) -> SatResult:
    """Decide a conjunction of atoms; on success return a model over ``env``."""
    atoms = list(atoms)
    state = TheoryState(atoms)
    if not state.consistent:
        return UNSAT
    model = _model_from_state(state, env)
    for a in atoms:
        if not eval_ground(a, model):
            raise SolverError(f"internal: model violates {a}")
    return SatResult(True, model)


# ---------------------------------------------------------------------------
# Arbitrary formulas


class _Cnf:
    """Plaisted-Greenbaum clausification of an NNF formula.

    Positive integers are variables; ``-v`` is the negation.  Theory variables
    carry a canonical literal ``(kind, x, y)``; the rest are auxiliary.
    """

    def __init__(self):
        self.clauses: list[list[int]] = []
        self.theory: dict[int, tuple] = {}
        self._lit_var: dict[tuple, int] = {}
        self.nvars = 0

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def atom_lit(self, a: Atom) -> int:
        kind, x, y, pos = literal_key(a)
        key = (kind, x, y)
        v = self._lit_var.get(key)
        if v is None:
            v = self.new_var()
            self._lit_var[key] = v
            self.theory[v] = key
        return v if pos else -v

    def encode(self, f: Formula) -> int | bool:
        if isinstance(f, Truth):
            return f.value
        if isinstance(f, Atom):
            return self.atom_lit(f)
        if isinstance(f, Or):
            lits = []
            for a in f.args:
                x = self.encode(a)
                if x is True:
                    return True
                if x is not False:
                    lits.append(x)
            if not lits:
                return False
            if len(lits) == 1:
                return lits[0]
            g = self.new_var()
            self.clauses.append([-g] + lits)
            return g
        assert isinstance(f, And)
        lits = []
        for a in f.args:
            x = self.encode(a)
            if x is False:
                return False
            if x is not True:
                lits.append(x)
        if not lits:
            return True
        if len(lits) == 1:
            return lits[0]
        g = self.new_var()
        for x in lits:
            self.clauses.append([-g, x])
        return g

    def assert_top(self, f: Formula) -> bool:
        """Add ``f`` as hard constraint; False if trivially unsatisfiable."""
        if isinstance(f, And):
            return all(self.assert_top(a) for a in f.args)
        if isinstance(f, Or):
            lits = []
            for a in f.args:
                x = self.encode(a)
                if x is True:
                    return True
                if x is not False:
                    lits.append(x)
            if not lits:
                return False
            self.clauses.append(lits)
            return True
        x = self.encode(f)
        if x is False:
            return False
        if x is not True:
            self.clauses.append([x])
        return True


class _Search:
    """CDCL over the clausified formula with the conjunction check as theory.

    Theory conflicts are shrunk to a small inconsistent core of assigned
    literals, whose negation is learned like any other conflict clause.
    """

    def __init__(self, cnf: _Cnf, conflict_limit: int | None):
        self.cnf = cnf
        self.n = cnf.nvars
        self.clauses: list[list[int]] = []
        self.value: list[bool | None] = [None] * (self.n + 1)
        self.level = [0] * (self.n + 1)
        self.reason: list[int | None] = [None] * (self.n + 1)
        self.activity = [0.0] * (self.n + 1)
        self.phase = [False] * (self.n + 1)
        self.bump = 1.0
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.watches: list[list[int]] = [[] for _ in range(2 * self.n + 2)]
        self.theory_checked = 0
        self.theory_trail: list[int] = []
        self.conflicts = 0
        self.conflict_limit = conflict_limit
        self.empty = False
        self.pending_units: list[int] = []
        for c in cnf.clauses:
            self.add_clause(sorted(set(c), key=c.index))

    @staticmethod
    def _w(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def lit_value(self, lit: int) -> bool | None:
        v = self.value[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def add_clause(self, c: list[int]):
        if any(-l in c for l in c):
            return
        if not c:
            self.empty = True
            return
        if len(c) == 1:
            self.pending_units.append(c[0])
            return
        idx = len(self.clauses)
        self.clauses.append(c)
        self.watches[self._w(c[0])].append(idx)
        self.watches[self._w(c[1])].append(idx)

    def enqueue(self, lit: int, reason: int | None) -> bool:
        val = self.lit_value(lit)
        if val is not None:
            return val
        v = abs(lit)
        self.value[v] = lit > 0
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        if v in self.cnf.theory:
            self.theory_trail.append(lit)
        return True

    def propagate(self) -> int | None:
        """Boolean unit propagation; returns a conflicting clause index."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -lit
            wl = self.watches[self._w(false_lit)]
            i = 0
            while i < len(wl):
                ci = wl[i]
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self.lit_value(c[0]) is True:
                    i += 1
                    continue
                for k in range(2, len(c)):
                    if self.lit_value(c[k]) is not False:
                        c[1], c[k] = c[k], c[1]
                        self.watches[self._w(c[1])].append(ci)
                        wl[i] = wl[-1]
                        wl.pop()
                        break
                else:
                    if self.lit_value(c[0]) is False:
                        self.qhead = len(self.trail)
                        return ci
                    self.enqueue(c[0], ci)
                    i += 1
        return None

    def theory_atoms(self, lits: Sequence[int]) -> list[Atom]:
        return [literal_atom(*self.cnf.theory[abs(l)], l > 0) for l in lits]

    def _consistent(self, lits: Sequence[int]) -> bool:
        return TheoryState(self.theory_atoms(lits)).consistent

    def theory_core(self, lits: list[int]) -> list[int]:
        """Small inconsistent subset of ``lits`` (which must be inconsistent).

        Repeatedly finds, by bisection, the shortest prefix that is
        inconsistent together with the core so far; its last literal belongs
        to the core.
        """
        core: list[int] = []
        rest = list(lits)
        while not (core and not self._consistent(core)):
            lo, hi = 1, len(rest)
            while lo < hi:
                mid = (lo + hi) // 2
                if self._consistent(core + rest[:mid]):
                    lo = mid + 1
                else:
                    hi = mid
            core.append(rest[lo - 1])
            rest = rest[:lo - 1]
        return core

    def theory_check(self) -> list[int] | None:
        """Conflict clause (all literals false) if the theory literals clash."""
        if self.theory_checked == len(self.theory_trail):
            return None
        self.theory_checked = len(self.theory_trail)
        if self._consistent(self.theory_trail):
            return None
        return [-l for l in self.theory_core(self.theory_trail)]

    def analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        current = len(self.trail_lim)
        seen = set()
        learnt: list[int] = []
        counter = 0
        clause = conflict
        p_var = None
        idx = len(self.trail) - 1
        while True:
            for q in clause:
                v = abs(q)
                if v == p_var or v in seen or self.level[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == current:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            p_var = abs(p)
            seen.discard(p_var)
            counter -= 1
            if counter <= 0:
                break
            clause = self.clauses[self.reason[p_var]]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            return learnt, 0
        j = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[j] = learnt[j], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _bump(self, v: int):
        self.activity[v] += self.bump
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.bump *= 1e-100

    def backjump(self, level: int):
        if len(self.trail_lim) <= level:
            return
        mark = self.trail_lim[level]
        for lit in self.trail[mark:]:
            v = abs(lit)
            self.phase[v] = lit > 0
            self.value[v] = None
            self.reason[v] = None
        del self.trail[mark:]
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, len(self.trail))
        self.theory_trail = [l for l in self.theory_trail if self.value[abs(l)] is not None]
        self.theory_checked = min(self.theory_checked, len(self.theory_trail))

    def decide(self) -> int | None:
        best, best_act = None, -1.0
        for v in range(1, self.n + 1):
            if self.value[v] is None and self.activity[v] > best_act:
                best, best_act = v, self.activity[v]
        if best is None:
            return None
        return best if self.phase[best] else -best

    def solve(self) -> bool:
        if self.empty:
            return False
        for u in self.pending_units:
            if not self.enqueue(u, None):
                return False
        while True:
            ci = self.propagate()
            conflict = self.clauses[ci] if ci is not None else self.theory_check()
            if conflict is not None:
                self.conflicts += 1
                if self.conflict_limit is not None and self.conflicts > self.conflict_limit:
                    raise SolverError(f"search exceeded {self.conflict_limit} conflicts")
                if not self.trail_lim:
                    return False
                learnt, back = self.analyze(conflict)
                self.backjump(back)
                if len(learnt) == 1:
                    self.enqueue(learnt[0], None)
                else:
                    idx = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches[self._w(learnt[0])].append(idx)
                    self.watches[self._w(learnt[1])].append(idx)
                    self.enqueue(learnt[0], idx)
                self.bump *= 1.05
                continue
            lit = self.decide()
            if lit is None:
                return True
            self.trail_lim.append(len(self.trail))
            self.enqueue(lit, None)

    def assigned_theory_atoms(self) -> list[Atom]:
        return self.theory_atoms(self.theory_trail)


def formula_sat(f: Formula, env: Mapping[str, Schema], *, strategy: str = "split",
                budget: int = DEFAULT_DNF_BUDGET, conflict_limit: int | None = None) -> SatResult:
    """Satisfiability of ``f`` over the variables in ``env``.

    ``strategy="split"`` runs lazy case splitting; ``strategy="dnf"`` expands
    to DNF (bounded by ``budget`` disjuncts) and checks each disjunct in order.
    """
    if strategy == "dnf":
        for d in to_dnf(f, budget).disjuncts:
            res = conj_sat(d, env)
            if res:
                return res
        return UNSAT
    if strategy != "split":
        raise ValueError(f"unknown strategy {strategy!r}")
    g = simplify(f)
    if g == FALSE:
        return UNSAT
    cnf = _Cnf()
    if not cnf.assert_top(g):
        return UNSAT
    search = _Search(cnf, conflict_limit)
    if not search.solve():
        return UNSAT
    res = conj_sat(search.assigned_theory_atoms(), env)
    if not res or not eval_ground(f, res.model):
        raise SolverError("internal: search produced an inconsistent model")
    return res


def is_valid(f: Formula, env: Mapping[str, Schema], **kw) -> tuple[bool, Model | None]:
    """``(True, None)`` when valid, else ``(False, countermodel)``."""
    res = formula_sat(negate_to_nnf(f), env, **kw)
    return (not res.sat, res.model)
