"""In-memory relations (ordered multisets of typed tuples) and CSV I/O."""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .formula import Domain, Schema, format_rational, parse_rational

Row = tuple


class RelationError(Exception):
    pass


@dataclass(frozen=True)
class Relation:
    schema: Schema
    rows: tuple[Row, ...]
    provenance: str = field(default="derived", compare=False)

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        k = len(self.schema.attributes)
        for i, r in enumerate(rows):
            if len(r) != k:
                raise RelationError(f"row {i}: arity {len(r)} does not match schema {self.schema}")
            for (name, dom), v in zip(self.schema.attributes, r):
                ok = isinstance(v, str) if dom is Domain.D else isinstance(v, Fraction)
                if not ok:
                    raise RelationError(f"row {i}: value {v!r} is not of type {dom.value} ({name})")

    @classmethod
    def of(cls, schema: Schema, rows: Iterable[Sequence], provenance: str = "derived") -> "Relation":
        """Build from loosely typed rows (ints/floats-as-strings coerced for Q)."""
        out = []
        for r in rows:
            out.append(tuple(_coerce(v, dom) for v, (_, dom) in zip(r, schema.attributes)))
        return cls(schema, tuple(out), provenance)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def with_rows(self, rows: Iterable[Row], provenance: str = "derived") -> "Relation":
        return Relation(self.schema, tuple(rows), provenance)

    def as_dict(self, row: Row) -> dict[str, object]:
        return dict(zip(self.schema.names, row))

    def multiset(self) -> Counter:
        return Counter(self.rows)

    def same_multiset(self, other: "Relation") -> bool:
        return self.multiset() == other.multiset()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.schema.names)
        for r in self.rows:
            w.writerow([format_value(v) for v in r])
        return buf.getvalue()


def _coerce(v, dom: Domain):
    if dom is Domain.D:
        return str(v)
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return parse_rational(str(v))


def format_value(v) -> str:
    return v if isinstance(v, str) else format_rational(v)


def read_csv(schema: Schema, text: str, provenance: str = "<string>") -> Relation:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise RelationError(f"{provenance}: missing header row") from None
    header = [h.strip() for h in header]
    if tuple(header) != schema.names:
        raise RelationError(
            f"{provenance}: header {header} does not match schema {list(schema.names)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(header):
            raise RelationError(f"{provenance}: row {lineno}: expected {len(header)} cells, got {len(rec)}")
        row = []
        for col, (cell, (name, dom)) in enumerate(zip(rec, schema.attributes), start=1):
            cell = cell.strip()
            if dom is Domain.D:
                row.append(cell)
            else:
                try:
                    row.append(parse_rational(cell))
                except ValueError:
                    raise RelationError(
                        f"{provenance}: row {lineno}, column {col} ({name}): "
                        f"malformed rational {cell!r}") from None
        rows.append(tuple(row))
    return Relation(schema, tuple(rows), provenance)


def load_csv(schema: Schema, path: str | Path) -> Relation:
    path = Path(path)
    return read_csv(schema, path.read_text(encoding="utf-8"), str(path))


def relation_from_model(schema: Schema, model: Mapping[str, Mapping[str, object]],
                        variables: Sequence[str]) -> Relation:
    rows = [tuple(model[v][a] for a in schema.names) for v in variables]
    return Relation(schema, tuple(rows), "witness")
