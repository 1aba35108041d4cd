import random

import pytest
from hypothesis import given, settings, strategies as st

from prefq.dependency import Cgd, Fd, check_on_instance, entails
from prefq.formula import parse_formula
from prefq.preference import (
    PreferenceError,
    commutes_selection_rel,
    compose_prioritized,
    contains_rel,
    d0,
    d1,
    d2,
    false_preference,
    is_redundant_rel,
    is_spo_rel,
    is_wo_rel,
    propagates_rel,
    replay_verdict,
    selection_cgd,
)

import helpers
from helpers import BOOK, C1, BOOK_ROWS, ISBN_PRICE, SINGLE_ISBN, MIXED

CHEAP = helpers.pref(BOOK, "t1.price < t2.price", "Cheap")


def sel(text):
    return parse_formula(text, {"t": BOOK})


def test_c1_is_spo_but_not_weak_order():
    assert is_spo_rel(C1)
    v = is_wo_rel(C1)
    assert not v and v.failed_axiom == "negative-transitivity"
    assert len(v.witness) <= 3 and replay_verdict(C1, v)


def test_c1_is_weak_order_for_a_single_isbn():
    assert is_wo_rel(C1, [SINGLE_ISBN])


def test_redundancy_under_isbn_price():
    assert is_redundant_rel(C1, [ISBN_PRICE])
    res = is_redundant_rel(C1)
    assert not res and not check_on_instance(d1(C1), res.witness)


def test_containment():
    assert contains_rel(C1, CHEAP)
    assert not contains_rel(CHEAP, C1)
    assert contains_rel(CHEAP, C1, [SINGLE_ISBN])
    with pytest.raises(PreferenceError):
        contains_rel(C1, helpers.pref(MIXED, "t1.a1 < t2.a1"))


def test_selection_commutes():
    assert commutes_selection_rel(sel("t.isbn = '0679726691'"), C1)
    assert commutes_selection_rel(sel("t.price < 15"), C1)
    res = commutes_selection_rel(sel("t.price > 15"), C1)
    assert not res and not check_on_instance(d2(sel("t.price > 15"), C1), res.witness)
    with pytest.raises(PreferenceError):
        commutes_selection_rel(parse_formula("t1.price > 1"), C1)


def test_propagation():
    assert propagates_rel([], C1, ISBN_PRICE)
    assert not propagates_rel([], C1, SINGLE_ISBN)
    with pytest.raises(PreferenceError):
        propagates_rel([], helpers.pref(BOOK, "t1.price <= t2.price"), ISBN_PRICE)


def test_false_preference_is_weak_order():
    assert is_wo_rel(false_preference(BOOK))
    assert is_redundant_rel(false_preference(BOOK))


def test_non_irreflexive_preference():
    v = is_spo_rel(helpers.pref(BOOK, "t1.price <= t2.price"))
    assert not v and v.failed_axiom == "irreflexivity" and len(v.witness) == 1


def test_non_transitive_preference():
    p = helpers.pref(BOOK, "t1.isbn != t2.isbn", "Ne")
    v = is_spo_rel(p)
    assert not v and v.failed_axiom == "transitivity" and replay_verdict(p, v)


def test_prioritized_composition():
    by_vendor = helpers.pref(BOOK, "t1.vendor = 'LowestPrices' AND t2.vendor != 'LowestPrices'", "V")
    comp = compose_prioritized(by_vendor, CHEAP)
    assert comp.name == "(V |> Cheap)"
    assert is_wo_rel(comp)
    lp, cheap = BOOK_ROWS.rows[4], BOOK_ROWS.rows[3]
    assert comp.dominates(lp, cheap) and not comp.dominates(cheap, lp)
    assert comp.dominates(BOOK_ROWS.rows[3], BOOK_ROWS.rows[0])


def test_selection_cgd_holds_after_selection():
    c = sel("t.price < 15")
    assert check_on_instance(selection_cgd(c, BOOK), BOOK_ROWS.with_rows(r for r in BOOK_ROWS.rows if r[2] < 15))
    assert not check_on_instance(selection_cgd(c, BOOK), BOOK_ROWS)


def test_d0_names_both_preferences():
    assert d0(C1, CHEAP).name == "d0[C1,Cheap]"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_prioritized_over_weak_order_is_spo(seed):
    rng = random.Random(seed)
    W = helpers.weak_order_pref(rng, MIXED)
    S = helpers.spo_pref(rng, MIXED)
    assert is_wo_rel(W) and is_spo_rel(S)
    assert is_spo_rel(compose_prioritized(W, S))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_family_classes_confirmed_by_checker(seed):
    rng = random.Random(seed)
    assert is_wo_rel(helpers.weak_order_pref(rng, MIXED))
    assert is_spo_rel(helpers.spo_pref(rng, MIXED))


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9))
def test_verdicts_replay_and_agree_with_instances(seed):
    rng = random.Random(seed)
    C = helpers.pref(MIXED, str(helpers.random_formula(rng, MIXED, ("t1", "t2"), depth=2)), "R")
    r = helpers.random_relation(rng, MIXED, 8)
    spo, wo = is_spo_rel(C), is_wo_rel(C)
    assert replay_verdict(C, spo) and replay_verdict(C, wo)
    if spo:
        assert helpers.is_spo_on(C, r.rows)
    if wo:
        assert helpers.is_wo_on(C, r.rows)
    if not spo:
        assert not helpers.is_spo_on(C, spo.witness.rows)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_entailed_verdicts_survive_more_premises(seed):
    rng = random.Random(seed)
    C = helpers.spo_pref(rng, MIXED)
    F = [helpers.random_fd(rng, MIXED) for _ in range(rng.randint(0, 2))]
    g = helpers.random_clause_cgd(rng, MIXED, 2)
    if is_redundant_rel(C, F):
        assert is_redundant_rel(C, F + [g])
    if is_wo_rel(C, F):
        assert is_wo_rel(C, F + [g])
