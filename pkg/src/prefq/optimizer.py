"""Semantic rewriting of scan / select / winnow plans.

Rules, tried in priority order until no rule fires:

R1  drop ``Winnow(C)`` whose input satisfies dependencies entailing ``d1[C]``;
R2  ``Winnow(A)`` over ``Winnow(B)`` becomes a single winnow when both are
    strict partial orders on the input and one is contained in the other;
R3  ``Winnow(C2)`` over ``Winnow(C1)`` becomes ``Winnow(C1 |> C2)`` when C1 is
    a weak order on the input;
R4  ``Select(c)`` over ``Winnow(C)`` moves below the winnow when ``d2[c, C]``
    is entailed.

Each node is annotated with dependencies known to hold in its output.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence, Union

from .dependency import Cgd, Fd, as_cgd
from .engine import check_deps, select, winnow
from .formula import Formula, Schema
from .preference import (
    PreferenceError,
    PreferenceRelation,
    commutes_selection_rel,
    compose_prioritized,
    contains_rel,
    d1,
    is_redundant_rel,
    is_spo_rel,
    is_wo_rel,
    propagates_rel,
    selection_cgd,
)
from .relation import Relation
from . import solver

log = logging.getLogger(__name__)

ALGO_HINTS = ("auto", "naive", "bnl", "wwo", "wwo2")
RULES = ("R1", "R2", "R3", "R4")


@dataclass(frozen=True)
class Scan:
    schema: Schema
    source: str
    deps: tuple[Cgd, ...] = field(default=(), compare=False)

    @property
    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Select:
    cond: Formula
    child: "Plan"
    deps: tuple[Cgd, ...] = field(default=(), compare=False)

    @property
    def schema(self) -> Schema:
        return self.child.schema

    @property
    def children(self) -> tuple:
        return (self.child,)


@dataclass(frozen=True)
class Winnow:
    pref: PreferenceRelation
    child: "Plan"
    algo: str = "auto"
    deps: tuple[Cgd, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.algo not in ALGO_HINTS:
            raise ValueError(f"unknown algorithm hint {self.algo!r}")

    @property
    def schema(self) -> Schema:
        return self.child.schema

    @property
    def children(self) -> tuple:
        return (self.child,)


Plan = Union[Scan, Select, Winnow]


def render(p: Plan) -> str:
    if isinstance(p, Scan):
        return f"Scan({p.schema.name}:{p.source})"
    if isinstance(p, Select):
        return f"Select[{p.cond}]({render(p.child)})"
    return f"Winnow[{p.pref.name},{p.algo}]({render(p.child)})"


def winnow_count(p: Plan) -> int:
    own = 1 if isinstance(p, Winnow) else 0
    return own + sum(winnow_count(c) for c in p.children)


def plan_size(p: Plan) -> int:
    return 1 + sum(plan_size(c) for c in p.children)


# ---------------------------------------------------------------------------
# Dependency propagation


def _dedupe(deps: Iterable[Cgd]) -> tuple[Cgd, ...]:
    out = []
    for d in deps:
        if d not in out:
            out.append(d)
    return tuple(out)


def propagate_deps(p: Plan, base: Iterable[Cgd | Fd], candidates: Iterable[Cgd | Fd] = ()) -> Plan:
    """Annotate every node with dependencies sound for its output.

    A candidate is added at a winnow node when it provably holds in the
    winnow of every input satisfying the child's annotation.  A failing
    obligation (solver error or precondition) just leaves the candidate out.
    """
    base = tuple(as_cgd(f) for f in base)
    candidates = tuple(as_cgd(f) for f in candidates)
    return _annotate(p, base, candidates)


def _annotate(p: Plan, base, candidates) -> Plan:
    if isinstance(p, Scan):
        return replace(p, deps=_dedupe(d for d in base if d.schema == p.schema))
    child = _annotate(p.child, base, candidates)
    if isinstance(p, Select):
        return replace(p, child=child, deps=_dedupe(child.deps + (selection_cgd(p.cond, p.schema),)))
    deps = list(child.deps) + [d1(p.pref)]
    for f in candidates:
        if f in deps or f.schema != p.schema:
            continue
        try:
            if propagates_rel(child.deps, p.pref, f):
                deps.append(f)
        except (PreferenceError, solver.SolverError) as exc:
            log.debug("candidate %s not propagated through %s: %s", f, p.pref.name, exc)
    return replace(p, child=child, deps=_dedupe(deps))


# ---------------------------------------------------------------------------
# Rewriting


@dataclass(frozen=True)
class TraceStep:
    rule: str
    path: tuple[int, ...]
    obligations: tuple[str, ...]
    before: str
    after: str

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "path": list(self.path),
            "obligations": list(self.obligations),
            "before": self.before,
            "after": self.after,
        }


@dataclass
class RewriteOptions:
    disabled: frozenset[str] = frozenset()
    small_intermediate: bool = False
    candidates: tuple[Cgd, ...] = ()
    max_steps: int = 100


def _nodes(p: Plan, path=()) -> Iterable[tuple[tuple[int, ...], Plan]]:
    yield path, p
    for i, c in enumerate(p.children):
        yield from _nodes(c, path + (i,))


def _replace_at(p: Plan, path: Sequence[int], new: Plan) -> Plan:
    if not path:
        return new
    return replace(p, child=_replace_at(p.child, path[1:], new))


def _strip(p: Plan) -> Plan:
    if isinstance(p, Scan):
        return replace(p, deps=())
    return replace(p, child=_strip(p.child), deps=())


def _ob(kind: str, detail: str, deps: Sequence[Cgd]) -> str:
    names = ", ".join(d.name or str(d) for d in deps)
    return f"{kind}: {detail} relative to {{{names}}}"


def _try_r1(node: Plan):
    if not isinstance(node, Winnow):
        return None
    F = node.child.deps
    if is_redundant_rel(node.pref, F):
        return node.child, (_ob("entailed", f"d1[{node.pref.name}]", F),)
    return None


def _try_r2(node: Plan):
    if not (isinstance(node, Winnow) and isinstance(node.child, Winnow)):
        return None
    outer, inner = node.pref, node.child.pref
    F = node.child.child.deps
    if not (is_spo_rel(outer, F) and is_spo_rel(inner, F)):
        return None
    obligations = [_ob("strict partial order", outer.name, F), _ob("strict partial order", inner.name, F)]
    if contains_rel(outer, inner, F):
        keep = node.child
        obligations.append(_ob("entailed", f"d0[{outer.name},{inner.name}]", F))
    elif contains_rel(inner, outer, F):
        keep = replace(node, child=node.child.child)
        obligations.append(_ob("entailed", f"d0[{inner.name},{outer.name}]", F))
    else:
        return None
    return keep, tuple(obligations)


def _try_r3(node: Plan, opts: RewriteOptions):
    if not (isinstance(node, Winnow) and isinstance(node.child, Winnow)):
        return None
    C2, C1 = node.pref, node.child.pref
    F = node.child.child.deps
    if not is_wo_rel(C1, F):
        return None
    obligations = [_ob("weak order", C1.name, F)]
    if opts.small_intermediate:
        F2 = tuple(F) + (d1(C1),)
        if not is_wo_rel(C2, F2):
            return None
        obligations.append(_ob("weak order", C2.name, F2))
    merged = Winnow(compose_prioritized(C1, C2), node.child.child, node.algo)
    return merged, tuple(obligations)


def _try_r4(node: Plan):
    if not (isinstance(node, Select) and isinstance(node.child, Winnow)):
        return None
    w = node.child
    F = w.child.deps
    if not commutes_selection_rel(node.cond, w.pref, F):
        return None
    pushed = replace(w, child=Select(node.cond, w.child))
    return pushed, (_ob("entailed", f"d2[{node.cond},{w.pref.name}]", F),)


def rewrite(p: Plan, base: Iterable[Cgd | Fd] = (), opts: RewriteOptions | None = None
            ) -> tuple[Plan, list[TraceStep]]:
    """Apply R1..R4 to fixpoint; returns the annotated plan and its trace."""
    opts = opts or RewriteOptions()
    base = tuple(as_cgd(f) for f in base)
    trace: list[TraceStep] = []
    plan = propagate_deps(p, base, opts.candidates)
    for _ in range(opts.max_steps):
        fired = None
        for rule in RULES:
            if rule in opts.disabled:
                continue
            for path, node in _nodes(plan):
                if rule == "R1":
                    res = _try_r1(node)
                elif rule == "R2":
                    res = _try_r2(node)
                elif rule == "R3":
                    res = _try_r3(node, opts)
                else:
                    res = _try_r4(node)
                if res is not None:
                    fired = (rule, path, node, res)
                    break
            if fired:
                break
        if not fired:
            return plan, trace
        rule, path, node, (new, obligations) = fired
        new = _strip(new)
        trace.append(TraceStep(rule, path, obligations, render(node), render(new)))
        plan = propagate_deps(_replace_at(plan, path, new), base, opts.candidates)
    raise RuntimeError(f"rewriting did not reach a fixpoint in {opts.max_steps} steps")


def choose_algorithm(p: Plan) -> Plan:
    """Resolve ``auto`` hints on an annotated plan.

    Weak order on the input: WWO.  Strict partial order: BNL.  Otherwise
    only the naive evaluator is correct.
    """
    if isinstance(p, Scan):
        return p
    child = choose_algorithm(p.child)
    if isinstance(p, Winnow) and p.algo == "auto":
        F = child.deps
        if is_wo_rel(p.pref, F):
            algo = "wwo"
        elif is_spo_rel(p.pref, F):
            algo = "bnl"
        else:
            algo = "naive"
        return replace(p, child=child, algo=algo)
    return replace(p, child=child)


def optimize(p: Plan, base: Iterable[Cgd | Fd] = (), opts: RewriteOptions | None = None
             ) -> tuple[Plan, list[TraceStep]]:
    plan, trace = rewrite(p, base, opts)
    return choose_algorithm(plan), trace


# ---------------------------------------------------------------------------
# Execution


class ExecutionError(Exception):
    pass


class DependencyViolation(ExecutionError):
    pass


class VerificationMismatch(ExecutionError):
    def __init__(self, message: str, expected: Relation, actual: Relation):
        super().__init__(message)
        self.expected = expected
        self.actual = actual


@dataclass
class ExecOptions:
    base: tuple[Cgd, ...] = ()
    verify_deps: bool = False
    verify_winnow: bool = False
    algo_override: str | None = None
    capacity: int = 64
    on_winnow: object = None  # callable(pref, input, output) for instrumentation


def execute(p: Plan, data: Mapping[str, Relation], opts: ExecOptions | None = None) -> Relation:
    opts = opts or ExecOptions()
    if isinstance(p, Scan):
        if p.source not in data:
            raise ExecutionError(f"missing data source {p.source!r}")
        r = data[p.source]
        if r.schema != p.schema:
            raise ExecutionError(f"source {p.source!r} has schema {r.schema.name}, plan expects {p.schema.name}")
        if opts.verify_deps:
            bad = [c for c in check_deps(r, opts.base) if not c.holds]
            if bad:
                lines = [f"{c.dependency}: violated by {c.violation}" for c in bad]
                raise DependencyViolation("declared dependencies do not hold:\n" + "\n".join(lines))
        return r
    inp = execute(p.child, data, opts)
    if isinstance(p, Select):
        return select(p.cond, inp)
    algo = opts.algo_override or (p.algo if p.algo != "auto" else "naive")
    out = winnow(p.pref, inp, algo, opts.capacity)
    if opts.verify_winnow and algo != "naive":
        expected = winnow(p.pref, inp, "naive")
        if not expected.same_multiset(out):
            raise VerificationMismatch(
                f"{algo} result for winnow {p.pref.name} differs from the naive evaluation", expected, out)
    if callable(opts.on_winnow):
        opts.on_winnow(p.pref, inp, out)
    return out
