"""Winnow evaluation over in-memory relations.

``winnow_naive`` is the literal definition and serves as the oracle for the
other evaluators:

* ``winnow_bnl``: block nested loops with a bounded window and a temporary
  table; correct for strict partial orders.
* ``winnow_wwo``: one pass keeping a single top tuple plus its bucket;
  correct only for weak orders (not checked at runtime).
* ``winnow_wwo_two_pass``: constant-memory variant of WWO.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dependency import Cgd, Fd, as_cgd, find_violation
from .formula import Formula, compile_formula, free_vars
from .preference import SELECTION_VAR, PreferenceRelation
from .relation import Relation, Row


class EngineError(Exception):
    pass


@dataclass
class WinnowStats:
    comparisons: int = 0
    passes: int = 0


@dataclass(frozen=True)
class WindowConfig:
    capacity: int = 64

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("window capacity must be at least 1")


def _dominance(C: PreferenceRelation, stats: WinnowStats | None):
    dom = C.dominates
    if stats is None:
        return dom

    def counted(a, b):
        stats.comparisons += 1
        return dom(a, b)

    return counted


def _check_schema(C: PreferenceRelation, r: Relation):
    if C.schema != r.schema:
        raise EngineError(f"preference {C.name} is over {C.schema.name}, relation over {r.schema.name}")


def winnow_naive(C: PreferenceRelation, r: Relation, stats: WinnowStats | None = None) -> Relation:
    _check_schema(C, r)
    dom = _dominance(C, stats)
    rows = r.rows
    out = [t for t in rows if not any(dom(s, t) for s in rows)]
    return r.with_rows(out)


def winnow_bnl(C: PreferenceRelation, r: Relation, window: WindowConfig | int = WindowConfig(),
               stats: WinnowStats | None = None) -> Relation:
    """Block nested loops.

    Each window entry remembers whether the temporary table was empty when it
    was inserted; only those entries have been compared with every input
    tuple by the end of the pass and may be output.  Entries that survive a
    pass are complete after the next one, so they are re-flagged when the
    next pass starts.
    """
    _check_schema(C, r)
    if isinstance(window, int):
        window = WindowConfig(window)
    cap = window.capacity
    dom = _dominance(C, stats)
    out: list[Row] = []
    win: list[list] = []  # [row, complete_flag]
    source: Sequence[Row] = r.rows
    while source:
        if stats is not None:
            stats.passes += 1
        temp: list[Row] = []
        for entry in win:
            entry[1] = True
        for t in source:
            if any(dom(w, t) for w, _ in win):
                continue
            dominated = [e for e in win if dom(t, e[0])]
            if dominated:
                win = [e for e in win if not any(e is d for d in dominated)]
                win.append([t, not temp])
            elif len(win) < cap:
                win.append([t, not temp])
            else:
                temp.append(t)
        out.extend(row for row, done in win if done)
        win = [e for e in win if not e[1]]
        source = temp
    out.extend(row for row, _ in win)
    return r.with_rows(out)


def winnow_wwo(C: PreferenceRelation, r: Relation, stats: WinnowStats | None = None) -> Relation:
    _check_schema(C, r)
    if not r.rows:
        return r.with_rows(())
    dom = _dominance(C, stats)
    top = r.rows[0]
    bucket = [top]
    for t in r.rows[1:]:
        if dom(top, t):
            continue
        if dom(t, top):
            top = t
            bucket = [t]
        else:
            bucket.append(t)
    return r.with_rows(bucket)


def winnow_wwo_two_pass(C: PreferenceRelation, rows: Iterable[Row] | Relation,
                        schema_relation: Relation | None = None,
                        stats: WinnowStats | None = None) -> Relation:
    """Two passes over a re-iterable source: find a top tuple, then select
    everything indifferent to it."""
    base = rows if isinstance(rows, Relation) else schema_relation
    if base is None:
        raise EngineError("a schema-carrying relation is required for streamed input")
    _check_schema(C, base)
    dom = _dominance(C, stats)
    top = None
    for t in rows:
        if top is None or dom(t, top):
            top = t
    if top is None:
        return base.with_rows(())
    out = [t for t in rows if not dom(top, t) and not dom(t, top)]
    return base.with_rows(out)


def select(cond: Formula, r: Relation) -> Relation:
    extra = free_vars(cond) - {SELECTION_VAR}
    if extra:
        raise EngineError(f"selection must range over '{SELECTION_VAR}' only")
    pred = compile_formula(cond, (SELECTION_VAR,), (r.schema,))
    return r.with_rows(t for t in r.rows if pred(t))


def rank(C: PreferenceRelation, r: Relation) -> list[tuple[Row, int]]:
    """Iterated winnow: rank 1 is the winnow, rank 2 the winnow of the rest..."""
    out: list[tuple[Row, int]] = []
    residue = r
    level = 0
    while residue.rows:
        level += 1
        best = winnow_naive(C, residue)
        if not best.rows:
            raise EngineError(
                f"rank: no undominated tuple among {len(residue)} remaining rows; "
                f"{C.name} has a dominance cycle on this relation (not a strict partial order)")
        out.extend((t, level) for t in best.rows)
        remaining = best.multiset()
        rest = []
        for t in residue.rows:
            if remaining[t]:
                remaining[t] -= 1
            else:
                rest.append(t)
        residue = residue.with_rows(rest)
    return out


@dataclass(frozen=True)
class DepCheck:
    dependency: Cgd
    holds: bool
    violation: tuple[Row, ...] | None = None


def check_deps(r: Relation, F: Iterable[Cgd | Fd]) -> list[DepCheck]:
    out = []
    for f in F:
        cgd = as_cgd(f)
        v = find_violation(cgd, r)
        out.append(DepCheck(cgd, v is None, v))
    return out


ALGORITHMS = {
    "naive": lambda C, r, capacity=64: winnow_naive(C, r),
    "bnl": lambda C, r, capacity=64: winnow_bnl(C, r, WindowConfig(capacity)),
    "wwo": lambda C, r, capacity=64: winnow_wwo(C, r),
    "wwo2": lambda C, r, capacity=64: winnow_wwo_two_pass(C, r),
}


def winnow(C: PreferenceRelation, r: Relation, algo: str = "naive", capacity: int = 64) -> Relation:
    try:
        fn = ALGORITHMS[algo]
    except KeyError:
        raise EngineError(f"unknown winnow algorithm {algo!r}") from None
    return fn(C, r, capacity)
