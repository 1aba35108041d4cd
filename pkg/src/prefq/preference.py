"""Preference relations defined by intrinsic formulas over ``(t1, t2)``.

Every semantic property is phrased as a CGD and decided by
:func:`prefq.dependency.entails`; absolute properties are the relative ones
with no dependencies.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .dependency import Cgd, EntailmentResult, Fd, as_cgd, check_on_instance, entails
from .formula import (
    FALSE,
    TRUE,
    Formula,
    Schema,
    compile_formula,
    conj,
    disj,
    free_vars,
    negate_to_nnf,
    nnf,
    substitute,
    typecheck,
)
from .relation import Relation

PAIR = ("t1", "t2")
SELECTION_VAR = "t"


class PreferenceError(Exception):
    pass


@dataclass(frozen=True)
class PreferenceRelation:
    """``t1`` is preferred to ``t2`` iff ``formula(t1, t2)`` holds."""

    name: str
    schema: Schema
    formula: Formula

    def __post_init__(self):
        extra = free_vars(self.formula) - set(PAIR)
        if extra:
            raise PreferenceError(f"preference {self.name} mentions {sorted(extra)}; only t1, t2 allowed")
        typecheck(self.formula, {v: self.schema for v in PAIR})

    @cached_property
    def dominates(self) -> Callable[[tuple, tuple], bool]:
        """Compiled ``(row1, row2) -> row1 ≻ row2``."""
        return compile_formula(self.formula, PAIR, (self.schema, self.schema))

    def on(self, a: str, b: str) -> Formula:
        """The formula with ``t1 := a``, ``t2 := b``."""
        return substitute(self.formula, {"t1": a, "t2": b})

    def __str__(self) -> str:
        return f"PREF {self.name} ON {self.schema.name}: {self.formula}"


def false_preference(schema: Schema, name: str = "False") -> PreferenceRelation:
    return PreferenceRelation(name, schema, FALSE)


def indifference(C: PreferenceRelation) -> Formula:
    return conj(negate_to_nnf(C.formula), negate_to_nnf(C.on("t2", "t1")))


def compose_prioritized(C1: PreferenceRelation, C2: PreferenceRelation,
                        name: str | None = None) -> PreferenceRelation:
    """Prefer by ``C1``; among ``C1``-indifferent pairs, prefer by ``C2``."""
    if C1.schema != C2.schema:
        raise PreferenceError(f"schema mismatch: {C1.schema.name} vs {C2.schema.name}")
    formula = disj(nnf(C1.formula), conj(indifference(C1), nnf(C2.formula)))
    return PreferenceRelation(name or f"({C1.name} |> {C2.name})", C1.schema, formula)


def selection_cgd(cond: Formula, schema: Schema) -> Cgd:
    """The 1-CGD ``True ⇒ cond(t)`` that holds in the output of a selection."""
    return Cgd(schema, (SELECTION_VAR,), TRUE, cond, name=f"sel[{cond}]")


# ---------------------------------------------------------------------------
# Canonical dependencies


def d0(C1: PreferenceRelation, C2: PreferenceRelation) -> Cgd:
    """Containment: ``C1(t1,t2) ⇒ C2(t1,t2)``."""
    return Cgd(C1.schema, PAIR, C1.formula, C2.formula, name=f"d0[{C1.name},{C2.name}]")


def d1(C: PreferenceRelation) -> Cgd:
    """All tuples mutually non-dominating: ``True ⇒ ¬C(t1,t2)``."""
    return Cgd(C.schema, PAIR, TRUE, negate_to_nnf(C.formula), name=f"d1[{C.name}]")


def d2(cond: Formula, C: PreferenceRelation) -> Cgd:
    """Selection commutes with winnow: ``cond(t2) ∧ C(t1,t2) ⇒ cond(t1)``."""
    return Cgd(C.schema, PAIR,
               conj(substitute(cond, {SELECTION_VAR: "t2"}), C.formula),
               substitute(cond, {SELECTION_VAR: "t1"}),
               name=f"d2[{cond},{C.name}]")


def irreflexivity_cgd(C: PreferenceRelation) -> Cgd:
    return Cgd(C.schema, ("t1",), TRUE, negate_to_nnf(C.on("t1", "t1")), name=f"irrefl[{C.name}]")


def transitivity_cgd(C: PreferenceRelation) -> Cgd:
    return Cgd(C.schema, ("t1", "t2", "t3"),
               conj(C.on("t1", "t2"), C.on("t2", "t3")), C.on("t1", "t3"),
               name=f"trans[{C.name}]")


def negative_transitivity_cgd(C: PreferenceRelation) -> Cgd:
    return Cgd(C.schema, ("t1", "t2", "t3"),
               conj(negate_to_nnf(C.on("t1", "t2")), negate_to_nnf(C.on("t2", "t3"))),
               negate_to_nnf(C.on("t1", "t3")),
               name=f"negtrans[{C.name}]")


AXIOMS = {
    "irreflexivity": irreflexivity_cgd,
    "transitivity": transitivity_cgd,
    "negative-transitivity": negative_transitivity_cgd,
}


# ---------------------------------------------------------------------------
# Relative properties


@dataclass(frozen=True)
class OrderVerdict:
    holds: bool
    failed_axiom: str = "none"
    witness: Relation | None = field(default=None, compare=False)

    def __bool__(self) -> bool:
        return self.holds


def _check_axioms(C: PreferenceRelation, F: Iterable[Cgd | Fd], axioms: Sequence[str],
                  **kw) -> OrderVerdict:
    F = [as_cgd(f) for f in F]
    for name in axioms:
        res = entails(F, AXIOMS[name](C), **kw)
        if not res:
            return OrderVerdict(False, name, res.witness)
    return OrderVerdict(True)


def is_spo_rel(C: PreferenceRelation, F: Iterable[Cgd | Fd] = (), **kw) -> OrderVerdict:
    return _check_axioms(C, F, ("irreflexivity", "transitivity"), **kw)


def is_wo_rel(C: PreferenceRelation, F: Iterable[Cgd | Fd] = (), **kw) -> OrderVerdict:
    return _check_axioms(C, F, ("irreflexivity", "transitivity", "negative-transitivity"), **kw)


def replay_verdict(C: PreferenceRelation, verdict: OrderVerdict) -> bool:
    """True iff a failing verdict's witness actually violates the named axiom."""
    if verdict.holds or verdict.witness is None:
        return verdict.holds
    return not check_on_instance(AXIOMS[verdict.failed_axiom](C), verdict.witness)


def contains_rel(C1: PreferenceRelation, C2: PreferenceRelation,
                 F: Iterable[Cgd | Fd] = (), **kw) -> EntailmentResult:
    if C1.schema != C2.schema:
        raise PreferenceError("schema mismatch")
    return entails(F, d0(C1, C2), **kw)


def is_redundant_rel(C: PreferenceRelation, F: Iterable[Cgd | Fd] = (), **kw) -> EntailmentResult:
    return entails(F, d1(C), **kw)


def commutes_selection_rel(cond: Formula, C: PreferenceRelation,
                           F: Iterable[Cgd | Fd] = (), **kw) -> EntailmentResult:
    extra = free_vars(cond) - {SELECTION_VAR}
    if extra:
        raise PreferenceError(f"selection must range over '{SELECTION_VAR}' only, got {sorted(extra)}")
    return entails(F, d2(cond, C), **kw)


def propagates_rel(F: Iterable[Cgd | Fd], C: PreferenceRelation, f: Cgd | Fd, **kw) -> EntailmentResult:
    """Does ``f`` hold in the winnow of every instance satisfying ``F``?

    Requires ``C`` to be irreflexive (absolutely).
    """
    if not entails((), irreflexivity_cgd(C), **kw):
        raise PreferenceError(f"preference {C.name} is not irreflexive")
    return entails(list(F) + [d1(C)], f, **kw)
