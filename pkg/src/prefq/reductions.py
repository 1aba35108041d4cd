"""Stress-test generators from the co-NP-hardness reductions.

``m3sat``: a monotone 3-CNF formula is unsatisfiable iff winnow under
``t1.z > t2.z`` is redundant relative to the gadget 2-CGDs.

``3color``: a graph is 3-colourable iff ``t1.c = 1 AND t2.c = 2`` is *not* a
weak order relative to the colouring 3-CGDs.

Every bundle carries the verdict of an exhaustive oracle (truth-table SAT,
colouring enumeration) computed independently of the entailment checker.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

from .catalog import Catalog
from .dependency import Cgd, Fd
from .formula import TRUE, Atom, AttrRef, Const, Domain, Schema, conj, disj
from .preference import PreferenceRelation, is_redundant_rel, is_wo_rel

MAX_M3SAT_VARS = 12
MAX_3COLOR_VERTICES = 8


class ReductionError(Exception):
    pass


Clause = tuple[int, int, int]  # 1-based variable indices


@dataclass
class Bundle:
    kind: str
    seed: int | None
    catalog: Catalog
    prop: str  # "redundant" | "wo"
    pref: str
    expected_holds: bool
    payload: dict = field(default_factory=dict)

    def check(self) -> bool:
        """Run the entailment checker; True iff the property holds."""
        C = self.catalog.pref(self.pref)
        F = self.catalog.deps
        if self.prop == "redundant":
            return is_redundant_rel(C, F).entailed
        return is_wo_rel(C, F).holds

    def to_text(self) -> str:
        verdict = "holds" if self.expected_holds else "refuted"
        head = [
            f"# kind: {self.kind}",
            f"# seed: {self.seed}",
            f"# payload: {self.payload}",
            f"# check: {self.prop} {self.pref}",
            f"# expected: {verdict}",
        ]
        return "\n".join(head) + "\n" + self.catalog.to_text()


def _eq(v1: str, v2: str, attr: str) -> Atom:
    return Atom(AttrRef(v1, attr), "=", AttrRef(v2, attr))


def _ne(v1: str, v2: str, attr: str) -> Atom:
    return Atom(AttrRef(v1, attr), "!=", AttrRef(v2, attr))


# ---------------------------------------------------------------------------
# Monotone 3-SAT


def sat_oracle(n: int, positive: Sequence[Clause], negative: Sequence[Clause]) -> bool:
    for bits in itertools.product((False, True), repeat=n):
        if all(any(bits[i - 1] for i in c) for c in positive) and \
                all(any(not bits[i - 1] for i in c) for c in negative):
            return True
    return False


def m3sat_bundle(n: int, positive: Sequence[Clause], negative: Sequence[Clause],
                 seed: int | None = None) -> Bundle:
    if not 3 <= n <= MAX_M3SAT_VARS:
        raise ReductionError(f"m3sat size must be within 3..{MAX_M3SAT_VARS}")
    k = len(negative)
    names = [f"p{i}" for i in range(1, n + 1)] + [f"q{h}" for h in range(1, k + 1)] + ["z"]
    schema = Schema("R", tuple((a, Domain.Q) for a in names))
    p = lambda i: f"p{i}"
    deps: list = []
    for i, j, m in positive:
        deps.append(Cgd(schema, ("t1", "t2"),
                        conj(_ne("t1", "t2", p(i)), _ne("t1", "t2", p(j))),
                        _eq("t1", "t2", p(m)), name=f"pos({i},{j},{m})"))
    for h, (i, j, m) in enumerate(negative, start=1):
        deps.append(Fd(schema, (p(i), f"q{h}"), ("z",)))
        deps.append(Fd(schema, (p(j), p(m)), (f"q{h}",)))
    pref = PreferenceRelation("C", schema, Atom(AttrRef("t1", "z"), ">", AttrRef("t2", "z")))
    cat = Catalog({"R": schema}, deps, {"C": pref})
    satisfiable = sat_oracle(n, positive, negative)
    return Bundle("m3sat", seed, cat, "redundant", "C", expected_holds=not satisfiable,
                  payload={"n": n, "positive": [list(c) for c in positive],
                           "negative": [list(c) for c in negative]})


def random_m3sat(n: int, seed: int) -> Bundle:
    """Up to ``4n`` clauses of 1..3 distinct variables, padded to three literals
    by repetition.  Short clauses keep unsatisfiable instances common at small n."""
    rng = random.Random(seed)
    m = rng.randint(n, 4 * n)
    positive, negative = [], []
    for _ in range(m):
        width = rng.choices((1, 2, 3), weights=(1, 3, 6))[0]
        vs = rng.sample(range(1, n + 1), width)
        vs += [vs[-1]] * (3 - width)
        (positive if rng.random() < 0.5 else negative).append(tuple(sorted(vs)))
    return m3sat_bundle(n, positive, negative, seed)


# ---------------------------------------------------------------------------
# 3-colourability


def coloring_oracle(n: int, edges: Sequence[tuple[int, int]]) -> bool:
    for colours in itertools.product(range(3), repeat=n):
        if all(colours[i - 1] != colours[j - 1] for i, j in edges):
            return True
    return False


def three_color_bundle(n: int, edges: Sequence[tuple[int, int]], seed: int | None = None) -> Bundle:
    if not 1 <= n <= MAX_3COLOR_VERTICES:
        raise ReductionError(f"3color size must be within 1..{MAX_3COLOR_VERTICES}")
    names = [f"v{i}" for i in range(1, n + 1)] + ["c"]
    schema = Schema("G", tuple((a, Domain.Q) for a in names))
    t3 = ("t1", "t2", "t3")
    distinct = conj(_ne("t1", "t2", "c"), _ne("t1", "t3", "c"), _ne("t2", "t3", "c"))

    def is_(v: str, attr: str, value: int) -> Atom:
        return Atom(AttrRef(v, attr), "=", Const(value))

    def isnt(v: str, attr: str, value: int) -> Atom:
        return Atom(AttrRef(v, attr), "!=", Const(value))

    deps: list = []
    for i in range(1, n + 1):
        a = f"v{i}"
        deps.append(Cgd(schema, ("t",), TRUE, disj(is_("t", a, 0), is_("t", a, 1)), name=f"dom({a})"))
    deps.append(Cgd(schema, ("t",), TRUE, disj(*(is_("t", "c", c) for c in (1, 2, 3))), name="dom(c)"))
    for i in range(1, n + 1):
        a = f"v{i}"
        # exactly one of t1.a, t2.a, t3.a equals 1, as clauses
        deps.append(Cgd(schema, t3, distinct, disj(*(is_(v, a, 1) for v in t3)), name=f"one({a})"))
        for x, y in itertools.combinations(t3, 2):
            deps.append(Cgd(schema, t3, distinct, disj(isnt(x, a, 1), isnt(y, a, 1)),
                            name=f"atmost({a},{x},{y})"))
    for i, j in edges:
        deps.append(Cgd(schema, t3, distinct,
                        disj(*(_ne_attrs(v, f"v{i}", f"v{j}") for v in t3)), name=f"edge({i},{j})"))
    pref = PreferenceRelation("C", schema, conj(is_("t1", "c", 1), is_("t2", "c", 2)))
    cat = Catalog({"G": schema}, deps, {"C": pref})
    colourable = coloring_oracle(n, edges)
    return Bundle("3color", seed, cat, "wo", "C", expected_holds=not colourable,
                  payload={"n": n, "edges": [list(e) for e in edges]})


def _ne_attrs(v: str, a: str, b: str) -> Atom:
    return Atom(AttrRef(v, a), "!=", AttrRef(v, b))


def random_graph(n: int, seed: int) -> Bundle:
    rng = random.Random(seed)
    p = rng.uniform(0.3, 0.9)
    edges = [(i, j) for i, j in itertools.combinations(range(1, n + 1), 2) if rng.random() < p]
    return three_color_bundle(n, edges, seed)


def triangle() -> Bundle:
    return three_color_bundle(3, [(1, 2), (1, 3), (2, 3)])


def k4() -> Bundle:
    return three_color_bundle(4, list(itertools.combinations(range(1, 5), 2)))


def generate(kind: str, size: int, seed: int) -> Bundle:
    if kind == "m3sat":
        if not 3 <= size <= MAX_M3SAT_VARS:
            raise ReductionError(f"m3sat size must be within 3..{MAX_M3SAT_VARS}")
        return random_m3sat(size, seed)
    if kind == "3color":
        if not 1 <= size <= MAX_3COLOR_VERTICES:
            raise ReductionError(f"3color size must be within 1..{MAX_3COLOR_VERTICES}")
        return random_graph(size, seed)
    raise ReductionError(f"unknown reduction kind {kind!r}")
