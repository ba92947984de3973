from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from monint.monad import (BOTTOM, COST_MULTIDIST, MULTIDIST, MULTISET, PROBABILISTIC, PURE, Branch, MonadicElement,
                          apply_op, bind, bundled_specs, eta, format_element, leq, writer)
from monint.semantics import (BranchLimit, SemanticsError, approx_sem, converges, obs_n, observed_chain, run, step,
                              step_root)
from monint.syntax import IDENTITY, OMEGA, App, Lam, Op, parse, substitute
from termgen import OPS_FOR, TermGen

seeds = st.integers(min_value=0, max_value=10**9)
FIG4 = r"tick((\x. tick(x x)) (tick(I I) (+)[1/2] I))"
FIG5 = r"(\x. x x) (I I (+)[1/2] omega)"


class OutOfFuel(Exception):
    pass


def big_step(spec, t, budget):
    """Independent oracle: direct monadic interpretation, recursing on the term structure."""
    budget[0] -= 1
    if budget[0] < 0:
        raise OutOfFuel
    match t:
        case Lam():
            return eta(spec, t)
        case App(Lam(x, body), arg):
            return bind(spec, big_step(spec, arg, budget), lambda v: big_step(spec, substitute(body, x, v), budget))
        case Op(name, args, param):
            return apply_op(spec, name, [big_step(spec, a, budget) for a in args], param)
    raise AssertionError(f"unexpected term {t}")


class TestSteps:
    def test_beta(self):
        assert step(PURE, parse("I I")) == eta(PURE, IDENTITY)

    def test_value_loops(self):
        assert step(PURE, IDENTITY) == eta(PURE, IDENTITY)

    def test_operation_in_context(self):
        t = parse(r"(\x. x) (I (+)[1/3] I I)")
        out = step(MULTIDIST, t)
        assert out == MonadicElement.of([
            Branch(Fraction(1, 3), (), App(Lam("x", parse("x", closed=False)), IDENTITY)),
            Branch(Fraction(2, 3), (), App(Lam("x", parse("x", closed=False)), App(IDENTITY, IDENTITY)))])

    def test_omega_steps_to_itself(self):
        assert step(PURE, OMEGA) == eta(PURE, OMEGA)

    def test_not_a_redex(self):
        with pytest.raises(SemanticsError):
            step_root(PURE, App(IDENTITY, App(IDENTITY, IDENTITY)))


class TestWorkedExamples:
    def test_cost_distribution(self):
        final = converges(COST_MULTIDIST, parse(FIG4), 50)
        assert format_element(final) == r"1/2*(2, \z. z) + 1/2*(3, \z. z)"

    def test_writer_output(self):
        final = converges(writer("ab"), parse(r"(\x. x out[b](x)) out[a](I I)"), 50)
        assert format_element(final) == r"1*(ab, \z. z)"

    def test_partial_convergence_chain(self):
        chain = observed_chain(MULTIDIST, parse(FIG5), 20)
        assert not chain.stabilized and chain.status == "not stabilized (fuel exhausted)"
        assert chain.observations[-1] == obs_n(MULTIDIST, parse(FIG5), 20)
        assert format_element(chain.observations[-1]) == "1/2*(*)"
        assert chain.observations[0] == BOTTOM

    def test_stabilized_chain(self):
        chain = observed_chain(PURE, parse(r"(\x. x x) (I I)"), 10)
        assert chain.stabilized and chain.stable_from == 3
        assert format_element(chain.observations[3]) == "1*(*)"


class TestApproximants:
    def test_zero_is_bottom(self):
        assert approx_sem(PURE, IDENTITY, 0) == BOTTOM

    @pytest.mark.parametrize("k", [0, 1, 7, 100])
    def test_omega_diverges(self, k):
        assert obs_n(PURE, OMEGA, k) == BOTTOM

    def test_negative_fuel(self):
        with pytest.raises(ValueError):
            run(PURE, IDENTITY, -1)


@pytest.mark.parametrize("spec", bundled_specs(), ids=lambda s: s.name)
def test_agrees_with_big_step_oracle(spec):
    unary, binary = OPS_FOR[spec.name]

    @settings(max_examples=150, deadline=None)
    @given(seeds)
    def agree(seed):
        t = TermGen(seed, 0.05, unary, binary).comp(5)
        try:
            trace = run(spec, t, 60, max_branches=2000)
        except BranchLimit:
            return
        trace.check_flatten()
        if not trace.converged:
            return
        try:
            expected = big_step(spec, t, [100000])
        except OutOfFuel:
            return
        assert trace.final == expected

    agree()


@pytest.mark.parametrize("spec", bundled_specs(), ids=lambda s: s.name)
def test_chain_is_increasing(spec):
    unary, binary = OPS_FOR[spec.name]

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def increasing(seed):
        t = TermGen(seed, 0.1, unary, binary).comp(5)
        try:
            run(spec, t, 15, max_branches=2000)
        except BranchLimit:
            return
        prev = approx_sem(spec, t, 0)
        for n in range(1, 16):
            cur = approx_sem(spec, t, n)
            assert leq(prev, cur)
            assert leq(obs_n(spec, t, n - 1), obs_n(spec, t, n))
            if spec.discipline == PROBABILISTIC:
                assert cur.total_weight() <= 1
            prev = cur

    increasing()


def test_branch_limit():
    t = parse(r"(\x. x x) (\y. y y (+)[1/2] y y)")
    with pytest.raises(BranchLimit):
        run(MULTIDIST, t, 60, max_branches=100)


def test_multiset_keeps_duplicates():
    final = converges(MULTISET, parse("amb(I, I I)"), 10)
    assert len(final) == 2
