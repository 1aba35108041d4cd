"""Quantifier-free equality / rational-order constraint formulas.

Formulas range over *tuple variables* (``t1``, ``t2``, ...) whose attributes
are typed either ``D`` (uninterpreted atoms, compared only with ``=``/``!=``)
or ``Q`` (exact rationals, full order comparisons).  The AST is immutable;
all transformations build new trees.
"""
from __future__ import annotations

import enum
import itertools
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union


class Domain(enum.Enum):
    D = "D"
    Q = "Q"


class FormulaError(Exception):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, pos: int, text: str = ""):
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))
        self.pos = pos


class FormulaTypeError(FormulaError):
    pass


class DnfBudgetExceeded(FormulaError):
    pass


@dataclass(frozen=True)
class Schema:
    name: str
    attributes: tuple[tuple[str, Domain], ...]

    def __post_init__(self):
        if not self.attributes:
            raise FormulaTypeError(f"schema {self.name} has no attributes")
        names = [a for a, _ in self.attributes]
        if len(set(names)) != len(names):
            raise FormulaTypeError(f"schema {self.name} has duplicate attribute names")

    @classmethod
    def of(cls, name: str, **attrs: str) -> "Schema":
        return cls(name, tuple((a, Domain(d)) for a, d in attrs.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.attributes)

    def index(self, attr: str) -> int:
        for i, (a, _) in enumerate(self.attributes):
            if a == attr:
                return i
        raise FormulaTypeError(f"unknown attribute {attr!r} of schema {self.name}")

    def domain(self, attr: str) -> Domain:
        return self.attributes[self.index(attr)][1]

    def __str__(self) -> str:
        inner = ", ".join(f"{a}: {d.value}" for a, d in self.attributes)
        return f"{self.name}({inner})"


# ---------------------------------------------------------------------------
# Terms and formulas


Value = Union[str, Fraction]


@dataclass(frozen=True)
class AttrRef:
    var: str
    attr: str

    def __str__(self) -> str:
        return f"{self.var}.{self.attr}"


@dataclass(frozen=True)
class Const:
    value: Value

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (str, Fraction, int)):
            raise FormulaTypeError(f"bad constant {self.value!r}")
        if isinstance(self.value, int):
            object.__setattr__(self, "value", Fraction(self.value))
        if isinstance(self.value, str) and "'" in self.value:
            raise FormulaTypeError("atom constants may not contain quotes")

    @property
    def domain(self) -> Domain:
        return Domain.D if isinstance(self.value, str) else Domain.Q

    def __str__(self) -> str:
        if isinstance(self.value, str):
            return f"'{self.value}'"
        return format_rational(self.value)


Term = Union[AttrRef, Const]

OPS = ("=", "!=", "<", "<=", ">", ">=")
ORDER_OPS = frozenset({"<", "<=", ">", ">="})
COMPLEMENT = {"=": "!=", "!=": "=", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}
FLIP = {"=": "=", "!=": "!=", "<": ">", ">": "<", "<=": ">=", ">=": "<="}


@dataclass(frozen=True)
class Atom:
    left: Term
    op: str
    right: Term

    def __post_init__(self):
        if self.op not in OPS:
            raise FormulaTypeError(f"unknown operator {self.op!r}")

    def negated(self) -> "Atom":
        return Atom(self.left, COMPLEMENT[self.op], self.right)

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Truth:
    value: bool

    def __str__(self) -> str:
        return "TRUE" if self.value else "FALSE"


TRUE = Truth(True)
FALSE = Truth(False)


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self) -> str:
        if isinstance(self.arg, (Atom, Truth, Not)):
            return f"NOT {self.arg}"
        return f"NOT ({self.arg})"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        return " AND ".join(_paren(a, (Or, And)) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        return " OR ".join(_paren(a, (Or,)) for a in self.args)


Formula = Union[Atom, Truth, Not, And, Or]


def _paren(f: Formula, kinds: tuple) -> str:
    return f"({f})" if isinstance(f, kinds) else str(f)


def format_rational(q: Fraction) -> str:
    """Exact text form: integer, terminating decimal, or ``p/q``."""
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    scaled = abs(q.numerator) * (10 ** places) // q.denominator
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if q < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    if not _NUMBER_RE.fullmatch(text):
        raise ValueError(f"not an exact rational literal: {text!r}")
    return Fraction(text)


# ---------------------------------------------------------------------------
# Smart constructors


def conj(*args: Formula) -> Formula:
    """Flattening conjunction with unit/zero simplification."""
    out: list[Formula] = []
    for a in args:
        if a == TRUE:
            continue
        if a == FALSE:
            return FALSE
        out.extend(a.args if isinstance(a, And) else (a,))
    if not out:
        return TRUE
    return out[0] if len(out) == 1 else And(tuple(out))


def disj(*args: Formula) -> Formula:
    out: list[Formula] = []
    for a in args:
        if a == FALSE:
            continue
        if a == TRUE:
            return TRUE
        out.extend(a.args if isinstance(a, Or) else (a,))
    if not out:
        return FALSE
    return out[0] if len(out) == 1 else Or(tuple(out))


def implies(body: Formula, head: Formula) -> Formula:
    return disj(negate_to_nnf(body), head)


def atom(left: Term | str, op: str, right: Term | str | int | Fraction) -> Atom:
    """Convenience builder: ``"t1.a"`` strings become attribute refs."""
    return Atom(_term(left), op, _term(right))


def _term(x) -> Term:
    if isinstance(x, (AttrRef, Const)):
        return x
    if isinstance(x, str) and "." in x:
        var, attr = x.split(".", 1)
        return AttrRef(var, attr)
    return Const(x)


# ---------------------------------------------------------------------------
# Traversal helpers


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.arg)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from atoms(a)


def free_vars(f: Formula) -> frozenset[str]:
    out = set()
    for a in atoms(f):
        for t in (a.left, a.right):
            if isinstance(t, AttrRef):
                out.add(t.var)
    return frozenset(out)


def term_domain(t: Term, env: Mapping[str, Schema]) -> Domain:
    if isinstance(t, Const):
        return t.domain
    if t.var not in env:
        raise FormulaTypeError(f"unbound tuple variable {t.var!r}")
    return env[t.var].domain(t.attr)


def typecheck(f: Formula, env: Mapping[str, Schema]) -> Formula:
    """Raise :class:`FormulaTypeError` unless ``f`` is well-typed under ``env``."""
    for a in atoms(f):
        dl = term_domain(a.left, env)
        dr = term_domain(a.right, env)
        if dl is not dr:
            raise FormulaTypeError(f"type mismatch in {a}: {dl.value} vs {dr.value}")
        if dl is Domain.D and a.op in ORDER_OPS:
            raise FormulaTypeError(f"order comparison on D-typed terms in {a}")
    return f


# ---------------------------------------------------------------------------
# Normalization


def negate_to_nnf(f: Formula) -> Formula:
    """``NOT f`` with negations pushed into atoms by operator complementation."""
    if isinstance(f, Truth):
        return Truth(not f.value)
    if isinstance(f, Atom):
        return f.negated()
    if isinstance(f, Not):
        return nnf(f.arg)
    if isinstance(f, And):
        return disj(*(negate_to_nnf(a) for a in f.args))
    return conj(*(negate_to_nnf(a) for a in f.args))


def nnf(f: Formula) -> Formula:
    if isinstance(f, (Truth, Atom)):
        return f
    if isinstance(f, Not):
        return negate_to_nnf(f.arg)
    if isinstance(f, And):
        return conj(*(nnf(a) for a in f.args))
    return disj(*(nnf(a) for a in f.args))


def trivial_truth(a: Atom) -> bool | None:
    """Truth value of an atom decidable without an assignment, else None."""
    if a.left == a.right:
        return a.op in ("=", "<=", ">=")
    if isinstance(a.left, Const) and isinstance(a.right, Const):
        if a.left.domain is not a.right.domain:
            return None
        return _compare(a.op, a.left.value, a.right.value)
    return None


def simplify(f: Formula) -> Formula:
    """NNF plus folding of syntactically decided atoms."""
    f = nnf(f)
    return _fold(f)


def _fold(f: Formula) -> Formula:
    if isinstance(f, Atom):
        v = trivial_truth(f)
        return f if v is None else Truth(v)
    if isinstance(f, And):
        return conj(*(_fold(a) for a in f.args))
    if isinstance(f, Or):
        return disj(*(_fold(a) for a in f.args))
    return f


@dataclass(frozen=True)
class Dnf:
    """Disjunction of conjunctions of atoms.

    ``disjuncts == ()`` denotes FALSE; a disjunct ``()`` denotes TRUE.
    """

    disjuncts: tuple[tuple[Atom, ...], ...]

    def to_formula(self) -> Formula:
        return disj(*(conj(*d) for d in self.disjuncts))

    def __str__(self) -> str:
        return str(self.to_formula())


DEFAULT_DNF_BUDGET = 10_000


def to_dnf(f: Formula, limit: int = DEFAULT_DNF_BUDGET) -> Dnf:
    """Distribute to DNF; drops disjuncts that are syntactically contradictory."""
    out = []
    seen = set()
    for d in _dnf(simplify(f), limit):
        cleaned = _clean_conjunct(d)
        if cleaned is None:
            continue
        key = frozenset(cleaned)
        if key in seen:
            continue
        seen.add(key)
        out.append(cleaned)
    return Dnf(tuple(out))


def _dnf(f: Formula, limit: int) -> list[tuple[Atom, ...]]:
    if f == TRUE:
        return [()]
    if f == FALSE:
        return []
    if isinstance(f, Atom):
        return [(f,)]
    if isinstance(f, Or):
        out: list[tuple[Atom, ...]] = []
        for a in f.args:
            out.extend(_dnf(a, limit))
            if len(out) > limit:
                raise DnfBudgetExceeded(f"DNF exceeds {limit} disjuncts")
        return out
    assert isinstance(f, And)
    acc: list[tuple[Atom, ...]] = [()]
    for a in f.args:
        part = _dnf(a, limit)
        if len(acc) * len(part) > limit:
            raise DnfBudgetExceeded(f"DNF exceeds {limit} disjuncts")
        acc = [x + y for x in acc for y in part]
    return acc


def _clean_conjunct(d: Sequence[Atom]) -> tuple[Atom, ...] | None:
    out: list[Atom] = []
    keys = set()
    for a in d:
        v = trivial_truth(a)
        if v is True:
            continue
        if v is False:
            return None
        k = literal_key(a)
        if (k[0], k[1], k[2], not k[3]) in keys:
            return None
        if k[0] == "L" and k[3] and ("L", k[2], k[1], True) in keys:
            return None
        if k in keys:
            continue
        keys.add(k)
        out.append(a)
    return tuple(out)


def _term_key(t: Term) -> tuple:
    if isinstance(t, AttrRef):
        return (0, t.var, t.attr)
    if isinstance(t.value, str):
        return (1, t.value)
    return (2, t.value)


def literal_key(a: Atom) -> tuple:
    """Canonical propositional literal for an atom.

    Every atom maps to ``(kind, x, y, positive)`` with kind ``E`` (``x = y``,
    unordered pair) or ``L`` (``x < y``), so that an atom and its
    complement map to the same variable with opposite polarity.
    """
    l, r, op = a.left, a.right, a.op
    if op in ("=", "!="):
        x, y = sorted((l, r), key=_term_key)
        return ("E", x, y, op == "=")
    if op == "<":
        return ("L", l, r, True)
    if op == ">":
        return ("L", r, l, True)
    if op == ">=":
        return ("L", l, r, False)
    return ("L", r, l, False)  # <=


def literal_atom(kind: str, x: Term, y: Term, positive: bool) -> Atom:
    if kind == "E":
        return Atom(x, "=" if positive else "!=", y)
    return Atom(x, "<" if positive else ">=", y)


def width_span(d: Dnf) -> tuple[int, int]:
    return len(d.disjuncts), max((len(c) for c in d.disjuncts), default=0)


# ---------------------------------------------------------------------------
# Substitution and evaluation


def substitute(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Simultaneous renaming of tuple variables; every free var must be mapped."""
    missing = free_vars(f) - set(mapping)
    if missing:
        raise FormulaTypeError(f"unmapped tuple variables: {sorted(missing)}")
    return _subst(f, mapping)


def _subst(f: Formula, m: Mapping[str, str]) -> Formula:
    if isinstance(f, Truth):
        return f
    if isinstance(f, Atom):
        return Atom(_subst_term(f.left, m), f.op, _subst_term(f.right, m))
    if isinstance(f, Not):
        return Not(_subst(f.arg, m))
    return type(f)(tuple(_subst(a, m) for a in f.args))


def _subst_term(t: Term, m: Mapping[str, str]) -> Term:
    return AttrRef(m[t.var], t.attr) if isinstance(t, AttrRef) else t


def substitute_checked(f: Formula, mapping: Mapping[str, str],
                       env: Mapping[str, Schema], target_env: Mapping[str, Schema]) -> Formula:
    for src, dst in mapping.items():
        if src in env and env[src] != target_env.get(dst):
            raise FormulaTypeError(f"schema mismatch substituting {src} -> {dst}")
    return typecheck(substitute(f, mapping), target_env)


def _compare(op: str, x, y) -> bool:
    if op == "=":
        return x == y
    if op == "!=":
        return x != y
    if op == "<":
        return x < y
    if op == "<=":
        return x <= y
    if op == ">":
        return x > y
    return x >= y


Assignment = Mapping[str, Mapping[str, Value]]


def eval_ground(f: Formula, assignment: Assignment) -> bool:
    """Evaluate ``f`` with each tuple variable bound to an ``attr -> value`` map."""
    if isinstance(f, Truth):
        return f.value
    if isinstance(f, Atom):
        return _compare(f.op, _term_value(f.left, assignment), _term_value(f.right, assignment))
    if isinstance(f, Not):
        return not eval_ground(f.arg, assignment)
    if isinstance(f, And):
        return all(eval_ground(a, assignment) for a in f.args)
    return any(eval_ground(a, assignment) for a in f.args)


def _term_value(t: Term, assignment: Assignment):
    if isinstance(t, Const):
        return t.value
    return assignment[t.var][t.attr]


_OP_FUNCS: dict[str, Callable] = {
    "=": lambda x, y: x == y,
    "!=": lambda x, y: x != y,
    "<": lambda x, y: x < y,
    "<=": lambda x, y: x <= y,
    ">": lambda x, y: x > y,
    ">=": lambda x, y: x >= y,
}


def compile_formula(f: Formula, variables: Sequence[str],
                    schemas: Sequence[Schema]) -> Callable[..., bool]:
    """Compile to a closure over positional row tuples, one per variable.

    Used on hot paths (winnow loops, dependency checks) where walking the
    AST per comparison is too slow.
    """
    pos = {v: (i, s) for i, (v, s) in enumerate(zip(variables, schemas))}

    def term(t: Term):
        if isinstance(t, Const):
            c = t.value
            return lambda rows: c
        i, s = pos[t.var]
        j = s.index(t.attr)
        return lambda rows: rows[i][j]

    def build(g: Formula):
        if isinstance(g, Truth):
            v = g.value
            return lambda rows: v
        if isinstance(g, Atom):
            lf, rf, op = term(g.left), term(g.right), _OP_FUNCS[g.op]
            return lambda rows: op(lf(rows), rf(rows))
        if isinstance(g, Not):
            inner = build(g.arg)
            return lambda rows: not inner(rows)
        parts = [build(a) for a in g.args]
        if isinstance(g, And):
            return lambda rows: all(p(rows) for p in parts)
        return lambda rows: any(p(rows) for p in parts)

    fn = build(f)
    return lambda *rows: fn(rows)


# ---------------------------------------------------------------------------
# Parser

_NUMBER_RE = re.compile(r"[+-]?\d+/\d+|[+-]?\d+(?:\.\d+)?")
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>[+-]?\d+/\d+|[+-]?\d+(?:\.\d+)?)
  | (?P<string>'[^']*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>!=|<=|>=|=>|=|<|>)
  | (?P<punct>[().])
    """,
    re.VERBOSE,
)
_KEYWORDS = {"AND", "OR", "NOT", "TRUE", "FALSE"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    i = 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise FormulaSyntaxError("unexpected character", i, text[i])
        kind = m.lastgroup
        if kind != "ws":
            s = m.group()
            if kind == "ident" and s.upper() in _KEYWORDS:
                kind, s = "kw", s.upper()
            toks.append(_Tok(kind, s, i))
        i = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, kind: str, text: str | None = None) -> bool:
        t = self.cur
        if t.kind == kind and (text is None or t.text == text):
            self.i += 1
            return True
        return False

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        t = self.cur
        if t.kind != kind or (text is not None and t.text != text):
            raise FormulaSyntaxError(f"expected {text or kind}", t.pos, t.text)
        self.i += 1
        return t

    def disj(self) -> Formula:
        parts = [self.conj()]
        while self.accept("kw", "OR"):
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.lit()]
        while self.accept("kw", "AND"):
            parts.append(self.lit())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def lit(self) -> Formula:
        t = self.cur
        if self.accept("kw", "NOT"):
            return Not(self.lit())
        if self.accept("kw", "TRUE"):
            return TRUE
        if self.accept("kw", "FALSE"):
            return FALSE
        if self.accept("punct", "("):
            inner = self.disj()
            self.expect("punct", ")")
            return inner
        if t.kind in ("ident", "number", "string"):
            left = self.term()
            op = self.cur
            if op.kind != "op" or op.text not in OPS:
                raise FormulaSyntaxError("expected comparison operator", op.pos, op.text)
            self.advance()
            return Atom(left, op.text, self.term())
        raise FormulaSyntaxError("expected literal", t.pos, t.text)

    def term(self) -> Term:
        t = self.advance()
        if t.kind == "number":
            return Const(Fraction(t.text))
        if t.kind == "string":
            return Const(t.text[1:-1])
        if t.kind == "ident":
            self.expect("punct", ".")
            attr = self.expect("ident")
            return AttrRef(t.text, attr.text)
        raise FormulaSyntaxError("expected term", t.pos, t.text)


def parse_formula(text: str, env: Mapping[str, Schema] | None = None) -> Formula:
    """Parse (and, given ``env``, type-check) a formula."""
    p = _Parser(text)
    f = p.disj()
    if p.cur.kind != "eof":
        raise FormulaSyntaxError("unexpected trailing input", p.cur.pos, p.cur.text)
    return typecheck(f, env) if env is not None else f


def parse_implication(text: str, env: Mapping[str, Schema] | None = None) -> tuple[Formula, Formula]:
    """Parse ``body => head``."""
    p = _Parser(text)
    body = p.disj()
    p.expect("op", "=>")
    head = p.disj()
    if p.cur.kind != "eof":
        raise FormulaSyntaxError("unexpected trailing input", p.cur.pos, p.cur.text)
    if env is not None:
        typecheck(body, env)
        typecheck(head, env)
    return body, head


def tuple_vars(n: int, prefix: str = "t") -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, n + 1))


def all_maps(source: Sequence[str], target: Sequence[str]) -> Iterable[dict[str, str]]:
    for image in itertools.product(target, repeat=len(source)):
        yield dict(zip(source, image))
