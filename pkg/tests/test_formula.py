from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from prefq.formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    AttrRef,
    Const,
    DnfBudgetExceeded,
    FormulaSyntaxError,
    FormulaTypeError,
    Not,
    Or,
    Schema,
    compile_formula,
    eval_ground,
    format_rational,
    literal_atom,
    literal_key,
    negate_to_nnf,
    parse_formula,
    parse_implication,
    parse_rational,
    substitute,
    to_dnf,
    typecheck,
    width_span,
)

import helpers

R = Schema.of("R", a="D", b="D", x="Q", y="Q")
VARS = ("t1", "t2", "t3")
ENV = {v: R for v in VARS}

rationals = st.fractions(min_value=-5, max_value=5, max_denominator=8)


def _attr(dom):
    names = ("a", "b") if dom == "D" else ("x", "y")
    return st.builds(AttrRef, st.sampled_from(VARS), st.sampled_from(names))


d_terms = st.one_of(_attr("D"), st.builds(Const, st.sampled_from(["p", "q", "r s"])))
q_terms = st.one_of(_attr("Q"), st.builds(Const, rationals))

d_atoms = st.builds(Atom, _attr("D"), st.sampled_from(["=", "!="]), d_terms)
q_atoms = st.builds(Atom, _attr("Q"), st.sampled_from(["=", "!=", "<", "<=", ">", ">="]), q_terms)
atoms_ = st.one_of(d_atoms, q_atoms)

formulas = st.recursive(
    st.one_of(atoms_, st.just(TRUE), st.just(FALSE)),
    lambda kids: st.one_of(
        st.builds(Not, kids),
        st.lists(kids, min_size=2, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(kids, min_size=2, max_size=3).map(lambda xs: Or(tuple(xs))),
    ),
    max_leaves=8,
)

q_point = st.sampled_from([Fraction(-1), Fraction(0), Fraction(1, 2), Fraction(1), Fraction(3)])
assignments = st.fixed_dictionaries({
    v: st.fixed_dictionaries({"a": st.sampled_from("pq"), "b": st.sampled_from(["q", "r s"]),
                              "x": q_point, "y": q_point})
    for v in VARS
})


@given(formulas)
def test_print_parse_round_trip(f):
    assert parse_formula(str(f)) == f


@given(formulas, assignments)
def test_negation_normal_form_complements(f, a):
    assert eval_ground(negate_to_nnf(f), a) is (not eval_ground(f, a))


@given(formulas, assignments)
def test_dnf_preserves_truth(f, a):
    assert eval_ground(to_dnf(f).to_formula(), a) == eval_ground(f, a)


@given(formulas, assignments)
def test_evaluator_agrees_with_independent_one(f, a):
    assert eval_ground(f, a) == helpers.holds(f, a)


@given(formulas, assignments)
def test_compiled_formula_agrees(f, a):
    fn = compile_formula(f, VARS, (R, R, R))
    rows = [tuple(a[v][n] for n in R.names) for v in VARS]
    assert fn(*rows) == eval_ground(f, a)


@given(formulas, st.dictionaries(st.sampled_from(VARS), st.sampled_from(VARS), min_size=3),
       st.dictionaries(st.sampled_from(VARS), st.sampled_from(VARS), min_size=3))
def test_substitution_composes(f, m1, m2):
    composed = {v: m2[m1[v]] for v in VARS}
    assert substitute(substitute(f, m1), m2) == substitute(f, composed)


@given(atoms_)
def test_literal_key_round_trip(a):
    kind, x, y, pos = literal_key(a)
    back = literal_atom(kind, x, y, pos)
    neg = literal_key(a.negated())
    assert neg[:3] == (kind, x, y) and neg[3] is not pos
    # the canonical atom has the same truth value everywhere
    for xv in (Fraction(0), Fraction(1)):
        for yv in (Fraction(0), Fraction(1)):
            env = {v: {"a": "p", "b": "p" if xv == yv else "q", "x": xv, "y": yv} for v in VARS}
            assert helpers.holds(back, env) == helpers.holds(a, env)


@given(rationals)
def test_rational_text_is_exact(q):
    assert parse_rational(format_rational(q)) == q


def test_rational_formats():
    assert format_rational(Fraction(27, 2)) == "13.5"
    assert format_rational(Fraction(-1, 4)) == "-0.25"
    assert format_rational(Fraction(1, 3)) == "1/3"
    with pytest.raises(ValueError):
        parse_rational("1e3")


def test_parse_precedence_and_keywords():
    f = parse_formula("t1.a = 'p' and t1.x < 1 OR not t1.y >= 2")
    assert isinstance(f, Or)
    assert isinstance(f.args[0], And)
    assert f.args[1] == Not(Atom(AttrRef("t1", "y"), ">=", Const(2)))


def test_parse_constants():
    f = parse_formula("t1.x <= -3/4 AND t1.y > 2.5 AND t1.a != 'Books For Less'")
    assert [a.right for a in f.args] == [Const(Fraction(-3, 4)), Const(Fraction(5, 2)),
                                         Const("Books For Less")]


def test_parse_implication_splits():
    body, head = parse_implication("t1.a = t2.a => t1.x = t2.x OR FALSE", ENV)
    assert body == Atom(AttrRef("t1", "a"), "=", AttrRef("t2", "a"))
    assert head == Or((Atom(AttrRef("t1", "x"), "=", AttrRef("t2", "x")), FALSE))


@pytest.mark.parametrize("text", ["t1.a =", "t1.a = 'p' AND", "(t1.a = 'p'", "t1 = 2", "t1.x < 1 1", "t1.x ~ 2"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_syntax_error_reports_position():
    with pytest.raises(FormulaSyntaxError) as exc:
        parse_formula("t1.x < 1 AND AND")
    assert "13" in str(exc.value)


@pytest.mark.parametrize("text", ["t1.a < t2.a", "t1.a = 1", "t1.x = 'p'", "t1.x = t1.a", "t1.zz = 1", "t9.x = 1"])
def test_type_errors(text):
    with pytest.raises(FormulaTypeError):
        parse_formula(text, {"t1": R, "t2": R})


def test_typecheck_accepts_order_on_rationals():
    assert typecheck(parse_formula("t1.x < t2.y AND t1.a != t2.b"), ENV)


def test_substitute_rejects_unmapped_variable():
    with pytest.raises(Exception):
        substitute(parse_formula("t1.x = t2.x"), {"t1": "u1"})


def test_dnf_false_is_empty_and_true_is_empty_conjunct():
    assert to_dnf(FALSE).disjuncts == ()
    assert to_dnf(TRUE).disjuncts == ((),)
    assert to_dnf(parse_formula("t1.x < t1.x")).disjuncts == ()


def test_dnf_drops_contradictory_disjuncts():
    f = parse_formula("(t1.x < t2.x AND t1.x >= t2.x) OR t1.a = 'p'")
    assert width_span(to_dnf(f)) == (1, 1)


def test_dnf_width_and_span():
    f = parse_formula("(t1.x < 1 OR t1.x > 2) AND (t1.y < 1 OR t1.y > 2)")
    assert width_span(to_dnf(f)) == (4, 2)


def test_dnf_budget():
    big = And(tuple(parse_formula(f"t1.x < {i} OR t1.y > {i}") for i in range(20)))
    with pytest.raises(DnfBudgetExceeded):
        to_dnf(big, limit=1000)


@settings(max_examples=50)
@given(formulas)
def test_printed_form_is_stable(f):
    assert str(parse_formula(str(f))) == str(f)
