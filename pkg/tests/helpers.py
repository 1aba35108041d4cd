"""Shared fixtures data, random generators and brute-force oracles.

The oracles here deliberately avoid the package's own evaluation code
(``eval_ground``, ``find_violation``, the solver) so that agreement with
them means something.
"""
from __future__ import annotations

import itertools
import operator
import random
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from prefq.dependency import Cgd, Fd, as_cgd
from prefq.formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    AttrRef,
    Const,
    Domain,
    Formula,
    Not,
    Or,
    Schema,
    Truth,
    conj,
    disj,
    parse_formula,
)
from prefq.preference import PAIR, PreferenceRelation
from prefq.relation import Relation

BOOK = Schema.of("Book", isbn="D", vendor="D", price="Q")
BOOK_ENV = {v: BOOK for v in PAIR}
C1 = PreferenceRelation("C1", BOOK, parse_formula("t1.isbn = t2.isbn AND t1.price < t2.price", BOOK_ENV))

BOOK_ROWS = Relation.of(BOOK, [
    ("0679726691", "BooksForLess", "14.75"),
    ("0679726691", "LowestPrices", "13.50"),
    ("0679726691", "QualityBooks", "18.80"),
    ("0062059041", "BooksForLess", "7.30"),
    ("0374164770", "LowestPrices", "21.88"),
])
BEST_ROWS = Relation.of(BOOK, [
    ("0679726691", "LowestPrices", "13.50"),
    ("0062059041", "BooksForLess", "7.30"),
    ("0374164770", "LowestPrices", "21.88"),
])
ISBN_PRICE = Fd(BOOK, ("isbn",), ("price",))
SINGLE_ISBN = Fd(BOOK, (), ("isbn",))

Q_VALUES = tuple(Fraction(x) for x in (0, 1, 2, 3)) + (Fraction(1, 2), Fraction(5, 2))
D_VALUES = ("a", "b", "c")

# ---------------------------------------------------------------------------
# Independent formula evaluation

_OPS: dict[str, Callable] = {
    "=": operator.eq, "!=": operator.ne, "<": operator.lt,
    "<=": operator.le, ">": operator.gt, ">=": operator.ge,
}


def holds(f: Formula, env: dict[str, dict]) -> bool:
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Atom):
        return _OPS[f.op](_val(f.left, env), _val(f.right, env))
    if isinstance(f, Not):
        return not holds(f.arg, env)
    if isinstance(f, And):
        return all(holds(a, env) for a in f.args)
    if isinstance(f, Or):
        return any(holds(a, env) for a in f.args)
    raise TypeError(f)


def _val(t, env):
    return t.value if isinstance(t, Const) else env[t.var][t.attr]


def row_env(schema: Schema, variables: Sequence[str], rows: Sequence[tuple]) -> dict:
    return {v: dict(zip(schema.names, r)) for v, r in zip(variables, rows)}


def dominates(C: PreferenceRelation, a: tuple, b: tuple) -> bool:
    return holds(C.formula, row_env(C.schema, PAIR, (a, b)))


def brute_winnow(C: PreferenceRelation, r: Relation) -> Relation:
    return r.with_rows([t for t in r.rows if not any(dominates(C, s, t) for s in r.rows)])


def satisfies(d: Cgd | Fd, rows: Sequence[tuple]) -> bool:
    d = as_cgd(d)
    for combo in itertools.product(rows, repeat=d.k):
        env = row_env(d.schema, d.variables, combo)
        if holds(d.body, env) and not holds(d.head, env):
            return False
    return True


def satisfies_all(F: Iterable[Cgd | Fd], rows: Sequence[tuple]) -> bool:
    return all(satisfies(d, rows) for d in F)


def mutually_indifferent(C: PreferenceRelation, rows: Sequence[tuple]) -> bool:
    return not any(dominates(C, a, b) for a in rows for b in rows)


# ---------------------------------------------------------------------------
# Order properties on a concrete instance


def is_spo_on(C: PreferenceRelation, rows: Sequence[tuple]) -> bool:
    dom = C.dominates
    if any(dom(t, t) for t in rows):
        return False
    succ = {i: [j for j, s in enumerate(rows) if dom(t, s)] for i, t in enumerate(rows)}
    return all(dom(rows[i], rows[k]) for i in succ for j in succ[i] for k in succ[j])


def is_wo_on(C: PreferenceRelation, rows: Sequence[tuple]) -> bool:
    if not is_spo_on(C, rows):
        return False
    dom = C.dominates
    for a, b, c in itertools.product(rows, repeat=3):
        if not dom(a, b) and not dom(b, c) and dom(a, c):
            return False
    return True


# ---------------------------------------------------------------------------
# Random data


def schema_with(name: str, doms: str) -> Schema:
    """``schema_with("R", "DDQ")`` gives attributes a0: D, a1: D, a2: Q."""
    return Schema(name, tuple((f"a{i}", Domain(d)) for i, d in enumerate(doms)))


def random_value(rng: random.Random, dom: Domain, spread: int = 3):
    if dom is Domain.D:
        return rng.choice(D_VALUES[:spread])
    return rng.choice(Q_VALUES[: spread + 1])


def random_row(rng: random.Random, schema: Schema, spread: int = 3) -> tuple:
    return tuple(random_value(rng, d, spread) for _, d in schema.attributes)


def random_relation(rng: random.Random, schema: Schema, n: int, spread: int = 3) -> Relation:
    return Relation(schema, tuple(random_row(rng, schema, spread) for _ in range(n)))


def sat_instance(rng: random.Random, schema: Schema, F: Sequence[Cgd | Fd], n: int,
                 spread: int = 3, tries: int = 4) -> Relation:
    """Grow a relation tuple by tuple, keeping only additions that leave F satisfied."""
    F = [as_cgd(f) for f in F]
    rows: list[tuple] = []
    for _ in range(n * tries):
        if len(rows) >= n:
            break
        t = random_row(rng, schema, spread)
        if all(_ok_with(f, rows, t) for f in F):
            rows.append(t)
    return Relation(schema, tuple(rows))


def _ok_with(f: Cgd, rows: list[tuple], new: tuple) -> bool:
    pool = rows + [new]
    for combo in itertools.product(pool, repeat=f.k):
        if not any(c is new for c in combo):
            continue
        env = row_env(f.schema, f.variables, combo)
        if holds(f.body, env) and not holds(f.head, env):
            return False
    return True


# ---------------------------------------------------------------------------
# Random formulas


def random_term(rng: random.Random, schema: Schema, variables: Sequence[str], dom: Domain,
                const_p: float = 0.25):
    if rng.random() < const_p:
        return Const(random_value(rng, dom))
    attrs = [a for a, d in schema.attributes if d is dom]
    return AttrRef(rng.choice(variables), rng.choice(attrs))


def random_atom(rng: random.Random, schema: Schema, variables: Sequence[str],
                ops: Sequence[str] | None = None, const_p: float = 0.25) -> Atom:
    attr, dom = rng.choice(schema.attributes)
    left = AttrRef(rng.choice(variables), attr)
    right = random_term(rng, schema, variables, dom, const_p)
    if ops is None:
        ops = ("=", "!=") if dom is Domain.D else ("=", "!=", "<", "<=", ">", ">=")
    elif dom is Domain.D:
        ops = [o for o in ops if o in ("=", "!=")] or ["="]
    return Atom(left, rng.choice(list(ops)), right)


def random_formula(rng: random.Random, schema: Schema, variables: Sequence[str], depth: int = 2,
                   ops: Sequence[str] | None = None) -> Formula:
    if depth == 0 or rng.random() < 0.3:
        return random_atom(rng, schema, variables, ops)
    kids = [random_formula(rng, schema, variables, depth - 1, ops) for _ in range(rng.randint(2, 3))]
    r = rng.random()
    if r < 0.45:
        return And(tuple(kids))
    if r < 0.9:
        return Or(tuple(kids))
    return Not(kids[0])


def random_clause_cgd(rng: random.Random, schema: Schema, k: int, ops: Sequence[str] | None = None,
                      max_body: int = 2, max_head: int = 2) -> Cgd:
    variables = tuple(f"t{i}" for i in range(1, k + 1))
    body = conj(*(random_atom(rng, schema, variables, ops) for _ in range(rng.randint(0, max_body))))
    head = disj(*(random_atom(rng, schema, variables, ops) for _ in range(rng.randint(0, max_head))))
    if head == TRUE:
        head = FALSE
    return Cgd(schema, variables, body, head)


def random_fd(rng: random.Random, schema: Schema) -> Fd:
    names = list(schema.names)
    lhs = tuple(sorted(rng.sample(names, rng.randint(0, min(2, len(names))))))
    rhs = (rng.choice(names),)
    return Fd(schema, lhs, rhs)


# ---------------------------------------------------------------------------
# Brute-force entailment for equality-only (D) schemas


def _canonical_extensions(slots: int, consts: Sequence[str], fresh: int):
    """Values for ``slots`` more positions, fresh atoms named up to renaming.

    Yields ``(values, fresh_count)``; ``fresh`` atoms ``#0..`` are already in use.
    """
    def rec(prefix: list, fresh: int):
        if len(prefix) == slots:
            yield tuple(prefix), fresh
            return
        for c in consts:
            prefix.append(c)
            yield from rec(prefix, fresh)
            prefix.pop()
        for i in range(fresh + 1):
            prefix.append(f"#{i}")
            yield from rec(prefix, max(fresh, i + 1))
            prefix.pop()
    yield from rec([], fresh)


def formula_constants(f: Formula) -> set:
    if isinstance(f, Atom):
        return {t.value for t in (f.left, f.right) if isinstance(t, Const)}
    if isinstance(f, (And, Or)):
        return set().union(*(formula_constants(a) for a in f.args))
    if isinstance(f, Not):
        return formula_constants(f.arg)
    return set()


def brute_entails(F: Sequence[Cgd | Fd], f0: Cgd | Fd) -> bool:
    """True iff every relation of at most ``k`` tuples satisfying F satisfies f0."""
    F = [as_cgd(f) for f in F]
    f0 = as_cgd(f0)
    schema = f0.schema
    if any(d is not Domain.D for _, d in schema.attributes):
        raise ValueError("brute_entails handles equality-only schemas")
    consts = sorted(set().union(*(formula_constants(d.body) | formula_constants(d.head) for d in F + [f0])))
    m = len(schema.attributes)

    # F is closed under sub-instances, so every prefix of a model of F is one too
    def search(rows: list, fresh: int) -> bool:
        if len(rows) == f0.k:
            return not satisfies(f0, rows)
        for values, used in _canonical_extensions(m, consts, fresh):
            rows.append(values)
            if satisfies_all(F, rows) and search(rows, used):
                return True
            rows.pop()
        return False

    return not search([], 0)


# ---------------------------------------------------------------------------
# Preference families with known order class


def _attr(schema: Schema, dom: Domain, rng: random.Random) -> str:
    return rng.choice([a for a, d in schema.attributes if d is dom])


def pref(schema: Schema, text: str, name: str = "P") -> PreferenceRelation:
    return PreferenceRelation(name, schema, parse_formula(text, {v: schema for v in PAIR}))


def weak_order_pref(rng: random.Random, schema: Schema) -> PreferenceRelation:
    """A weak order by construction: score comparison, lexicographic or stratified."""
    q = _attr(schema, Domain.Q, rng)
    q2 = _attr(schema, Domain.Q, rng)
    d = _attr(schema, Domain.D, rng)
    lt = rng.choice(("<", ">"))
    gt = rng.choice(("<", ">"))
    c = rng.choice(D_VALUES)
    v = rng.choice(Q_VALUES)
    choices = [
        f"t1.{q} {lt} t2.{q}",
        f"t1.{q} {lt} t2.{q} OR (t1.{q} = t2.{q} AND t1.{q2} {gt} t2.{q2})",
        f"t1.{d} = '{c}' AND t2.{d} != '{c}'",
        f"(t1.{d} = '{c}' AND t2.{d} != '{c}') OR "
        f"(t1.{d} = '{c}' AND t2.{d} = '{c}' AND t1.{q} {lt} t2.{q}) OR "
        f"(t1.{d} != '{c}' AND t2.{d} != '{c}' AND t1.{q} {lt} t2.{q})",
        f"t1.{q} {lt} {v} AND t2.{q} {'>=' if lt == '<' else '<='} {v}",
    ]
    return pref(schema, rng.choice(choices), "W")


def spo_pref(rng: random.Random, schema: Schema) -> PreferenceRelation:
    """A strict partial order by construction (not necessarily weak)."""
    q = _attr(schema, Domain.Q, rng)
    q2 = _attr(schema, Domain.Q, rng)
    d = _attr(schema, Domain.D, rng)
    lt = rng.choice(("<", ">"))
    gt = rng.choice(("<", ">"))
    le = "<=" if lt == "<" else ">="
    ge = "<=" if gt == "<" else ">="
    choices = [
        f"t1.{d} = t2.{d} AND t1.{q} {lt} t2.{q}",
        f"t1.{q} {le} t2.{q} AND t1.{q2} {ge} t2.{q2} AND (t1.{q} {lt} t2.{q} OR t1.{q2} {gt} t2.{q2})",
        f"t1.{q} {lt} t2.{q} AND t1.{q2} {gt} t2.{q2}",
        f"t1.{d} = t2.{d} AND t1.{q} {le} t2.{q} AND t1.{q2} {ge} t2.{q2} "
        f"AND (t1.{q} {lt} t2.{q} OR t1.{q2} {gt} t2.{q2})",
    ]
    if rng.random() < 0.3:
        return weak_order_pref(rng, schema)
    return pref(schema, rng.choice(choices), "S")


MIXED = schema_with("R", "DQQ")
