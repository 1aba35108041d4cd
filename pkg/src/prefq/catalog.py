"""Line-oriented definition files and JSON plan files.

One definition per line; ``#`` starts a comment::

    SCHEMA Book(isbn: D, vendor: D, price: Q)
    FD  Book: isbn -> price
    FD  Book: -> isbn
    CGD Book[t1,t2]: t1.isbn = t2.isbn => t1.price <= t2.price
    PREF C1 ON Book: t1.isbn = t2.isbn AND t1.price < t2.price

Plans are JSON trees of ``scan`` / ``select`` / ``winnow`` nodes::

    {"winnow": "C1", "algo": "auto",
     "input": {"select": "t.isbn = '0679726691'",
               "input": {"scan": "Book", "source": "book"}}}
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .dependency import Cgd, Fd, as_cgd
from .formula import Domain, FormulaError, Schema, parse_formula, parse_implication
from .optimizer import Plan, Scan, Select, Winnow
from .preference import SELECTION_VAR, PAIR, PreferenceRelation


class CatalogError(Exception):
    pass


@dataclass
class Catalog:
    schemas: dict[str, Schema] = field(default_factory=dict)
    deps: list[Cgd | Fd] = field(default_factory=list)
    prefs: dict[str, PreferenceRelation] = field(default_factory=dict)

    def schema(self, name: str) -> Schema:
        try:
            return self.schemas[name]
        except KeyError:
            raise CatalogError(f"unknown schema {name!r}") from None

    def pref(self, name: str) -> PreferenceRelation:
        try:
            return self.prefs[name]
        except KeyError:
            raise CatalogError(f"unknown preference {name!r}") from None

    def deps_for(self, schema: Schema) -> list[Cgd]:
        return [as_cgd(d) for d in self.deps if d.schema == schema]

    def fds_only(self) -> bool:
        return all(isinstance(d, Fd) for d in self.deps)

    def to_text(self) -> str:
        lines = [f"SCHEMA {s}" for s in self.schemas.values()]
        lines += [str(d) for d in self.deps]
        lines += [str(p) for p in self.prefs.values()]
        return "\n".join(lines) + "\n"


_SCHEMA_RE = re.compile(r"SCHEMA\s+(\w+)\s*\((.*)\)\s*$", re.I)
_FD_RE = re.compile(r"FD\s+(\w+)\s*:\s*(.*?)\s*->\s*(.*)$", re.I)
_CGD_RE = re.compile(r"CGD\s+(\w+)\s*\[([^\]]*)\]\s*:\s*(.*)$", re.I)
_PREF_RE = re.compile(r"PREF\s+(\w+)\s+ON\s+(\w+)\s*:\s*(.*)$", re.I)
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def _attr_list(text: str) -> tuple[str, ...]:
    names = tuple(a.strip() for a in text.split(",") if a.strip())
    for n in names:
        if not _IDENT_RE.fullmatch(n):
            raise CatalogError(f"bad attribute name {n!r}")
    return names


def parse_line(line: str, cat: Catalog) -> None:
    if m := _SCHEMA_RE.match(line):
        attrs = []
        for part in m.group(2).split(","):
            name, _, dom = part.partition(":")
            try:
                attrs.append((name.strip(), Domain(dom.strip().upper())))
            except ValueError:
                raise CatalogError(f"bad domain {dom.strip()!r} (expected D or Q)") from None
        if m.group(1) in cat.schemas:
            raise CatalogError(f"schema {m.group(1)} defined twice")
        cat.schemas[m.group(1)] = Schema(m.group(1), tuple(attrs))
    elif m := _FD_RE.match(line):
        cat.deps.append(Fd(cat.schema(m.group(1)), _attr_list(m.group(2)), _attr_list(m.group(3))))
    elif m := _CGD_RE.match(line):
        schema = cat.schema(m.group(1))
        variables = _attr_list(m.group(2))
        env = {v: schema for v in variables}
        body, head = parse_implication(m.group(3), env)
        cat.deps.append(Cgd(schema, variables, body, head, name=line.strip()))
    elif m := _PREF_RE.match(line):
        schema = cat.schema(m.group(2))
        f = parse_formula(m.group(3), {v: schema for v in PAIR})
        cat.prefs[m.group(1)] = PreferenceRelation(m.group(1), schema, f)
    else:
        raise CatalogError("unrecognised definition")


def parse_catalog(text: str, cat: Catalog | None = None, source: str = "<string>") -> Catalog:
    cat = cat if cat is not None else Catalog()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        try:
            parse_line(line, cat)
        except (CatalogError, FormulaError, ValueError) as exc:
            raise CatalogError(f"{source}:{lineno}: {exc}") from exc
    return cat


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == "'":
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i].strip()
    return line.strip()


def load_catalog(paths: Iterable[str | Path], cat: Catalog | None = None) -> Catalog:
    cat = cat if cat is not None else Catalog()
    for p in paths:
        p = Path(p)
        parse_catalog(p.read_text(encoding="utf-8"), cat, str(p))
    return cat


def parse_dependency(text: str, cat: Catalog) -> Cgd | Fd:
    """Parse a single FD/CGD line against ``cat``'s schemas."""
    scratch = Catalog(schemas=dict(cat.schemas))
    parse_catalog(text, scratch, "<argument>")
    if len(scratch.deps) != 1:
        raise CatalogError("expected exactly one FD or CGD")
    return scratch.deps[0]


# ---------------------------------------------------------------------------
# Plans


def plan_from_json(obj: dict, cat: Catalog) -> Plan:
    if not isinstance(obj, dict):
        raise CatalogError(f"plan node must be an object, got {type(obj).__name__}")
    if "scan" in obj:
        schema = cat.schema(obj["scan"])
        return Scan(schema, obj.get("source", schema.name))
    if "input" not in obj:
        raise CatalogError("select/winnow node without 'input'")
    child = plan_from_json(obj["input"], cat)
    if "select" in obj:
        try:
            cond = parse_formula(obj["select"], {SELECTION_VAR: child.schema})
        except FormulaError as exc:
            raise CatalogError(f"selection {obj['select']!r}: {exc}") from exc
        return Select(cond, child)
    if "winnow" in obj:
        ref = obj["winnow"]
        if isinstance(ref, str):
            pref = cat.pref(ref)
        else:
            f = parse_formula(ref["formula"], {v: child.schema for v in PAIR})
            pref = PreferenceRelation(ref.get("name", "anonymous"), child.schema, f)
        if pref.schema != child.schema:
            raise CatalogError(f"preference {pref.name} does not match input schema {child.schema.name}")
        return Winnow(pref, child, obj.get("algo", "auto"))
    raise CatalogError(f"unknown plan node keys {sorted(obj)}")


def plan_to_json(p: Plan, cat: Catalog | None = None, with_deps: bool = False) -> dict:
    if isinstance(p, Scan):
        out: dict = {"scan": p.schema.name, "source": p.source}
    elif isinstance(p, Select):
        out = {"select": str(p.cond), "input": plan_to_json(p.child, cat, with_deps)}
    else:
        known = cat is not None and cat.prefs.get(p.pref.name) == p.pref
        ref = p.pref.name if known else {"name": p.pref.name, "formula": str(p.pref.formula)}
        out = {"winnow": ref, "algo": p.algo, "input": plan_to_json(p.child, cat, with_deps)}
    if with_deps:
        out["deps"] = [d.name or str(d) for d in p.deps]
    return out


def load_plan(path: str | Path, cat: Catalog) -> Plan:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CatalogError(f"{path}: invalid JSON: {exc}") from exc
    return plan_from_json(obj, cat)
