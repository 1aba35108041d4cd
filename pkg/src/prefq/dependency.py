"""Constraint-generating dependencies and their entailment.

A CGD over k tuple variables reads ``R(t1) ∧ ... ∧ R(tk) ∧ body ⇒ head``.
Entailment ``F ⊨ f0`` is decided by symmetrization: every dependency is
instantiated under all maps of its tuple variables into ``u1..uk``, where k
is the number of tuple variables of ``f0``, and the resulting
quantifier-free formula is handed to the solver.  CGDs are closed under
sub-instances, so a counterexample never needs more than k tuples.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .formula import (
    DEFAULT_DNF_BUDGET,
    FALSE,
    TRUE,
    And,
    Atom,
    AttrRef,
    Const,
    Formula,
    Or,
    Schema,
    Truth,
    all_maps,
    compile_formula,
    conj,
    free_vars,
    implies,
    negate_to_nnf,
    nnf,
    substitute,
    trivial_truth,
    tuple_vars,
    typecheck,
)
from .relation import Relation, Row, relation_from_model
from . import solver


class DependencyError(Exception):
    pass


class InputClassError(DependencyError):
    """Input falls outside the class a specialised procedure handles."""


@dataclass(frozen=True)
class Cgd:
    schema: Schema
    variables: tuple[str, ...]
    body: Formula
    head: Formula
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.variables:
            raise DependencyError("a CGD needs at least one tuple variable")
        if len(set(self.variables)) != len(self.variables):
            raise DependencyError("duplicate tuple variables")
        extra = (free_vars(self.body) | free_vars(self.head)) - set(self.variables)
        if extra:
            raise DependencyError(f"unbound tuple variables {sorted(extra)}")
        typecheck(self.body, self.env)
        typecheck(self.head, self.env)

    @property
    def k(self) -> int:
        return len(self.variables)

    @property
    def env(self) -> dict[str, Schema]:
        return {v: self.schema for v in self.variables}

    @property
    def matrix(self) -> Formula:
        """``body ⇒ head`` as a single NNF formula."""
        return implies(self.body, nnf(self.head))

    @property
    def is_clausal(self) -> bool:
        return _is_conj_of_atoms(self.body) and _is_disj_of_atoms(self.head)

    def __str__(self) -> str:
        vs = ",".join(self.variables)
        return f"CGD {self.schema.name}[{vs}]: {self.body} => {self.head}"


def _is_conj_of_atoms(f: Formula) -> bool:
    if f == TRUE or isinstance(f, Atom):
        return True
    return isinstance(f, And) and all(isinstance(a, Atom) for a in f.args)


def _is_disj_of_atoms(f: Formula) -> bool:
    if f == FALSE or isinstance(f, Atom):
        return True
    return isinstance(f, Or) and all(isinstance(a, Atom) for a in f.args)


@dataclass(frozen=True)
class Fd:
    schema: Schema
    lhs: tuple[str, ...]
    rhs: tuple[str, ...]

    def __post_init__(self):
        for a in self.lhs + self.rhs:
            self.schema.index(a)

    def __str__(self) -> str:
        return f"FD {self.schema.name}: {','.join(self.lhs)} -> {','.join(self.rhs)}"


def fd_to_cgd(fd: Fd) -> Cgd:
    def eqs(attrs):
        return conj(*(Atom(AttrRef("t1", a), "=", AttrRef("t2", a)) for a in attrs))

    return Cgd(fd.schema, ("t1", "t2"), eqs(fd.lhs), eqs(fd.rhs), name=str(fd))


def as_cgd(d: Cgd | Fd) -> Cgd:
    return fd_to_cgd(d) if isinstance(d, Fd) else d


# ---------------------------------------------------------------------------
# Symmetrization


def instances(f: Cgd, k: int, prefix: str = "u") -> Iterator[Formula]:
    """The matrix of ``f`` under every map of its variables into ``u1..uk``."""
    if k < 1:
        raise DependencyError("k must be at least 1")
    target = tuple_vars(k, prefix)
    m = f.matrix
    for mapping in all_maps(f.variables, target):
        yield substitute(m, mapping)


def symmetrize(f: Cgd, k: int, prefix: str = "u") -> Formula:
    """Conjunction of the ``k ** len(f.variables)`` instances of ``f``.

    Instances are kept as an ``And`` even when trivial so the structure stays
    inspectable; the solver folds tautologies itself.
    """
    parts = tuple(instances(f, k, prefix))
    return parts[0] if len(parts) == 1 else And(parts)


# ---------------------------------------------------------------------------
# Instance checking


def find_violation(f: Cgd, r: Relation) -> tuple[Row, ...] | None:
    """First k-tuple of rows (with repetition) violating ``f``, if any."""
    if r.schema != f.schema:
        raise DependencyError(f"schema mismatch: {r.schema.name} vs {f.schema.name}")
    schemas = [f.schema] * f.k
    body = compile_formula(f.body, f.variables, schemas)
    head = compile_formula(f.head, f.variables, schemas)
    for rows in itertools.product(r.rows, repeat=f.k):
        if body(*rows) and not head(*rows):
            return rows
    return None


def check_on_instance(f: Cgd | Fd, r: Relation) -> bool:
    return find_violation(as_cgd(f), r) is None


# ---------------------------------------------------------------------------
# Entailment


@dataclass(frozen=True)
class EntailmentResult:
    entailed: bool
    witness: Relation | None = None

    def __bool__(self) -> bool:
        return self.entailed


ENTAILED = EntailmentResult(True)


def entailment_formula(F: Iterable[Cgd | Fd], f0: Cgd | Fd) -> tuple[Formula, dict[str, Schema], int]:
    """``⋀ cf_k(F) ∧ ¬cf_k(f0)`` together with its environment and k."""
    f0 = as_cgd(f0)
    k = f0.k
    parts = []
    for f in F:
        f = as_cgd(f)
        if f.schema != f0.schema:
            raise DependencyError(f"dependencies over different schemas: {f.schema.name}, {f0.schema.name}")
        parts.extend(instances(f, k))
    parts.append(negate_to_nnf(conj(*instances(f0, k))))
    env = {u: f0.schema for u in tuple_vars(k, "u")}
    return conj(*parts), env, k


def entails(F: Iterable[Cgd | Fd], f0: Cgd | Fd, *, strategy: str = "split",
            budget: int = DEFAULT_DNF_BUDGET) -> EntailmentResult:
    """Decide ``F ⊨ f0``; refutations carry a verified witness of ≤ k tuples."""
    F = [as_cgd(f) for f in F]
    f0 = as_cgd(f0)
    formula, env, k = entailment_formula(F, f0)
    res = solver.formula_sat(formula, env, strategy=strategy, budget=budget)
    if not res:
        return ENTAILED
    witness = relation_from_model(f0.schema, res.model, tuple_vars(k, "u"))
    for f in F:
        if not check_on_instance(f, witness):
            raise solver.SolverError(f"internal: witness violates {f}")
    if check_on_instance(f0, witness):
        raise solver.SolverError(f"internal: witness satisfies {f0}")
    return EntailmentResult(False, witness)


# ---------------------------------------------------------------------------
# FDs entailing equality CGDs: union-find closure instead of search


def _atom_list(f: Formula, kind: type) -> list[Atom]:
    if isinstance(f, Truth):
        return []
    if isinstance(f, Atom):
        return [f]
    return list(f.args)


def entails_fd_equality(F: Sequence[Fd], f0: Cgd) -> bool:
    """PTIME entailment of a clausal equality CGD by a set of FDs.

    For every instance of ``f0`` in ``u1..uk`` the negated instance is a set
    of equalities plus disequalities.  Equalities are closed under the FD
    implications of all variable pairs (a Horn fixpoint, realised with
    union-find); the instance is refuted iff the closure contradicts a
    disequality or merges two distinct constants.
    """
    for fd in F:
        if not isinstance(fd, Fd):
            raise InputClassError(f"not an FD: {fd}")
        if fd.schema != f0.schema:
            raise DependencyError("schema mismatch")
    if not f0.is_clausal:
        raise InputClassError("f0 must be clausal (conjunctive body, disjunctive head)")
    body = _atom_list(f0.body, And)
    head = _atom_list(f0.head, Or)
    for a in body + head:
        if a.op not in ("=", "!="):
            raise InputClassError(f"non-equality atom {a}")
    k = f0.k
    us = tuple_vars(k, "u")
    for mapping in all_maps(f0.variables, us):
        # Negated instance: body atoms hold, every head atom fails.
        lits = [substitute(a, mapping) for a in body]
        lits += [substitute(a, mapping).negated() for a in head]
        if _equality_closure_consistent(lits, F, us):
            return False
    return True


def _equality_closure_consistent(lits: Sequence[Atom], F: Sequence[Fd], us: Sequence[str]) -> bool:
    uf = solver._UnionFind()
    diseq = []
    for a in lits:
        v = trivial_truth(a)
        if v is False:
            return False
        if v is True:
            continue
        if a.op == "=":
            uf.union(a.left, a.right)
        else:
            diseq.append((a.left, a.right))
    changed = True
    while changed:
        changed = False
        for fd in F:
            for ui, uj in itertools.permutations(us, 2):
                if all(uf.find(AttrRef(ui, x)) == uf.find(AttrRef(uj, x)) for x in fd.lhs):
                    for y in fd.rhs:
                        a, b = AttrRef(ui, y), AttrRef(uj, y)
                        if uf.find(a) != uf.find(b):
                            uf.union(a, b)
                            changed = True
    consts: dict = {}
    for t in list(uf.parent):
        if isinstance(t, Const):
            root = uf.find(t)
            if root in consts and consts[root] != t:
                return False
            consts[root] = t
    return all(uf.find(l) != uf.find(r) for l, r in diseq)
