from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from lawgen import elements, intersection_pool, kleisli, op_calls
from monint.monad import (BOTTOM, COST_MULTIDIST, MULTIDIST, MULTISET, PURE, STAR, Branch, MonadError,
                          MonadicElement, UnknownOperation, apply_op, bind, bundled_specs, check_discipline,
                          element_from_json, element_to_json, erasing_multidist, eta, fmap, format_element,
                          leq, obs_collapse, parse_monad, support, union, writer)
from monint.types import type_bind, type_op

SPECS = bundled_specs()
IDS = [s.name for s in SPECS]
PAYLOADS = [0, 1, 2]


def args_for(name, m1, m2):
    return [m1] if name in ("tick", "out") else [m1, m2]


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_laws_on_elements(spec):
    @settings(max_examples=1000, deadline=None)
    @given(elements(spec, PAYLOADS), elements(spec, PAYLOADS), kleisli(spec, PAYLOADS), kleisli(spec, PAYLOADS),
           st.sampled_from(PAYLOADS), op_calls(spec))
    def laws(m, m2, f, g, x, call):
        assert bind(spec, eta(spec, x), f.__getitem__) == f[x]
        assert bind(spec, m, lambda y: eta(spec, y)) == m
        left = bind(spec, bind(spec, m, f.__getitem__), g.__getitem__)
        right = bind(spec, m, lambda y: bind(spec, f[y], g.__getitem__))
        assert left == right
        check_discipline(spec, left)
        if call is not None:
            name, param = call
            lhs = bind(spec, apply_op(spec, name, args_for(name, m, m2), param), f.__getitem__)
            rhs = apply_op(spec, name, [bind(spec, a, f.__getitem__) for a in args_for(name, m, m2)], param)
            assert lhs == rhs
            check_discipline(spec, lhs)

    laws()


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_laws_on_types(spec):
    pool = intersection_pool(spec)

    @settings(max_examples=1000, deadline=None)
    @given(elements(spec, pool), elements(spec, pool), kleisli(spec, pool), kleisli(spec, pool),
           st.sampled_from(pool), op_calls(spec))
    def laws(m, m2, table, table2, i, call):
        assert type_bind(eta(spec, i), table) == table[i]
        assert type_bind(m, {j: eta(spec, j) for j in pool}) == m
        left = type_bind(type_bind(m, table), table2)
        right = type_bind(m, {j: type_bind(table[j], table2) for j in pool})
        assert left == right
        if call is not None:
            name, param = call
            lhs = type_bind(type_op(spec, name, args_for(name, m, m2), param), table)
            rhs = type_op(spec, name, [type_bind(a, table) for a in args_for(name, m, m2)], param)
            assert lhs == rhs

    laws()


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_order(spec):
    @settings(max_examples=200, deadline=None)
    @given(elements(spec, PAYLOADS), elements(spec, PAYLOADS), elements(spec, PAYLOADS), kleisli(spec, PAYLOADS),
           kleisli(spec, PAYLOADS))
    def order(a, b, c, f, g):
        assert leq(BOTTOM, a) and leq(a, a)
        ab = union([a, b])
        abc = union([ab, c])
        assert leq(a, ab) and leq(ab, abc) and leq(a, abc)
        if leq(a, b) and leq(b, a):
            assert a == b
        # bind is monotone in both arguments
        assert leq(bind(spec, a, f.__getitem__), bind(spec, ab, f.__getitem__))
        bigger = {x: union([f[x], g[x]]) for x in PAYLOADS}
        assert leq(bind(spec, a, f.__getitem__), bind(spec, a, bigger.__getitem__))

    order()


def test_leq_counts_multiplicity():
    x = Branch(Fraction(1, 2), (), 0)
    assert leq(MonadicElement.of([x]), MonadicElement.of([x, x]))
    assert not leq(MonadicElement.of([x, x]), MonadicElement.of([x]))


def test_no_branch_merging():
    half = apply_op(MULTIDIST, "choice", [eta(MULTIDIST, 0), eta(MULTIDIST, 0)], Fraction(1, 2))
    assert len(half) == 2
    assert half != eta(MULTIDIST, 0)
    assert format_element(half) == "1/2*(0) + 1/2*(0)"


def test_total_weight_oracle():
    m = apply_op(MULTIDIST, "choice", [eta(MULTIDIST, 0), eta(MULTIDIST, 1)], Fraction(1, 3))
    f = {0: apply_op(MULTIDIST, "choice", [eta(MULTIDIST, 2), BOTTOM], Fraction(1, 4)), 1: eta(MULTIDIST, 2)}
    out = bind(MULTIDIST, m, f.__getitem__)
    assert out.total_weight() == Fraction(1, 3) * Fraction(1, 4) + Fraction(2, 3)


def test_graded_composition():
    w = writer("ab")
    m = apply_op(w, "out", [apply_op(w, "out", [eta(w, "x")], "b")], "a")
    assert m.branches == (Branch(Fraction(1), "ab", "x"),)
    c = apply_op(COST_MULTIDIST, "tick", [apply_op(COST_MULTIDIST, "choice",
                 [eta(COST_MULTIDIST, 0), apply_op(COST_MULTIDIST, "tick", [eta(COST_MULTIDIST, 1)])],
                 Fraction(1, 2))])
    assert format_element(c) == "1/2*(1, 0) + 1/2*(2, 1)"


def test_multiset_counts():
    m = apply_op(MULTISET, "amb", [eta(MULTISET, 1), apply_op(MULTISET, "amb", [eta(MULTISET, 1), eta(MULTISET, 2)])])
    assert Counter(b.payload for b in m) == {1: 2, 2: 1}
    assert support(m) == [1, 2]


def test_operation_errors():
    with pytest.raises(UnknownOperation):
        apply_op(PURE, "tick", [eta(PURE, 0)])
    with pytest.raises(MonadError):
        apply_op(MULTIDIST, "choice", [eta(MULTIDIST, 0)], Fraction(1, 2))
    with pytest.raises(MonadError):
        apply_op(MULTIDIST, "choice", [eta(MULTIDIST, 0), eta(MULTIDIST, 1)], Fraction(1))
    with pytest.raises(MonadError):
        apply_op(writer("ab"), "out", [eta(writer("ab"), 0)], "c")


def test_erasing_choice():
    spec = erasing_multidist()
    m = apply_op(spec, "choice", [eta(spec, 0), eta(spec, 1)], Fraction(1))
    assert m == eta(spec, 0)


def test_discipline_violations():
    two = MonadicElement.of([Branch(Fraction(1), (), 0), Branch(Fraction(1), (), 1)])
    with pytest.raises(MonadError):
        check_discipline(PURE, two)
    with pytest.raises(MonadError):
        check_discipline(MULTIDIST, two)
    check_discipline(MULTISET, two)
    with pytest.raises(MonadError):
        check_discipline(COST_MULTIDIST, MonadicElement.of([Branch(Fraction(1), -1, 0)]))


@pytest.mark.parametrize("selector", ["pure", "writer:ab", "cost", "multidist", "multiset", "cost*multidist",
                                      "writer:xyz*multidist"])
def test_parse_monad(selector):
    assert parse_monad(selector).name == selector


@pytest.mark.parametrize("selector", ["", "writer:", "writer:aa", "state", "cost*multiset"])
def test_parse_monad_rejects(selector):
    with pytest.raises(MonadError):
        parse_monad(selector)


def test_observation_and_fmap():
    m = apply_op(COST_MULTIDIST, "choice", [eta(COST_MULTIDIST, 5), eta(COST_MULTIDIST, 6)], Fraction(1, 4))
    assert obs_collapse(m) == fmap(m, lambda _: STAR)
    assert format_element(obs_collapse(m)) == "1/4*(0) + 3/4*(0)"
    assert format_element(obs_collapse(eta(PURE, 0))) == "1*(*)"
    assert format_element(BOTTOM) == "bot"
    assert format_element(eta(writer(), 0)) == "1*(ε, 0)"


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_json_round_trip(spec):
    @settings(max_examples=100, deadline=None)
    @given(elements(spec, PAYLOADS))
    def round_trip(m):
        data = element_to_json(m, payload_fmt=lambda x: x)
        assert all("/" in item["p"] for item in data)
        assert element_from_json(spec, data, lambda x: x) == m

    round_trip()
