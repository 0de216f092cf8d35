import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bpi.errors import DomainError, PreconditionViolated
from bpi.functionals import (
    Kind,
    e_func,
    functional_cache,
    i_func,
    j_func,
    limit_at,
    q_func,
    r_func,
    s_func,
    sigma_a_laplace,
    upsilon,
    upsilon_inv,
)
from bpi.mechanisms import Mechanism, OffspringLaw, kingman_mechanism, lb_mechanism, sibuya_mechanism

PANEL = [lb_mechanism(), kingman_mechanism(), sibuya_mechanism(), Mechanism(1.5, 2.0),
         Mechanism(0.7, 1.0, OffspringLaw((0.4, 0.3)), OffspringLaw((0.2, 0.1)))]
# extinction with probability strictly between 0 and 1: S(theta;1) infinite, R(theta;1) finite
HEAVY = Mechanism(0.5, 1.0, OffspringLaw((), 1.5, 2.5, 0), OffspringLaw((1.0,)))


def test_q_closed_forms():
    assert limit_at("Q", lb_mechanism(), 0.5, 1).value == pytest.approx(0.5 * math.log(2) - 0.5, abs=1e-9)
    assert q_func(kingman_mechanism(), 0.2, 0.9) == 0.0
    sib = sibuya_mechanism()
    for theta, x in [(0.3, 0.9), (0.5, 0.1), (0.7, 0.999)]:
        assert q_func(sib, theta, x) == pytest.approx(0.5 * math.log((1 - x) / (1 - theta)), abs=1e-9)
        assert j_func(sib, theta, x) == pytest.approx(math.sqrt((1 - x) / (1 - theta)), rel=1e-9)


def test_j_lb_at_one():
    # exp(0.5 ln 2 - 0.5) = sqrt(2 / e) = 0.857764 (the rounded 0.85778 is off in the fifth digit)
    assert limit_at("J", lb_mechanism()).value == pytest.approx(math.sqrt(2 / math.e), abs=1e-9)


def test_cache_agrees_with_adaptive_quadrature():
    for mech in PANEL:
        cache = functional_cache(mech, 0.4)
        for x in (0.01, 0.3, 0.77, 0.99):
            assert cache.at("Q", x) == pytest.approx(q_func(mech, 0.4, x), abs=1e-10)


def test_no_interaction_births_closed_form():
    mech = Mechanism(1.5, 2.0)
    rng = np.random.default_rng(11)
    for theta, x in rng.uniform(0.001, 0.999, (50, 2)):
        assert q_func(mech, theta, x) == pytest.approx(0.75 * math.log(x / theta), abs=1e-9)
        assert functional_cache(mech, 0.5).at("Q", x) - functional_cache(mech, 0.5).at("Q", theta) == \
            pytest.approx(0.75 * math.log(x / theta), abs=1e-9)


@pytest.mark.parametrize("mech", PANEL, ids=lambda m: m.name or repr(m.d))
def test_q_additive_and_j_multiplicative(mech):
    rng = np.random.default_rng(3)
    for _ in range(100):
        y, m, x = np.sort(rng.uniform(0.001, 0.999, 3))
        assert q_func(mech, y, x) == pytest.approx(q_func(mech, y, m) + q_func(mech, m, x), abs=1e-9)
    y, m, x = 0.2, 0.5, 0.9
    assert j_func(mech, y, x) == pytest.approx(j_func(mech, y, m) * j_func(mech, m, x), rel=1e-9)


def test_zero_length_integrals_exact():
    for f in (q_func, s_func, r_func, e_func, i_func):
        assert f(lb_mechanism(), 0.3, 0.3) == 0.0
    assert j_func(lb_mechanism(), 0.3, 0.3) == 1.0


def test_kingman_s_and_r():
    k = kingman_mechanism()
    for theta, x in [(0.5, 0.9), (0.3, 0.1), (0.2, 0.999)]:
        assert s_func(k, theta, x) == pytest.approx(x - theta, abs=1e-12)
        assert r_func(k, theta, x) == pytest.approx(math.log(x * (1 - theta) / ((1 - x) * theta)), abs=1e-10)
    s1 = limit_at("S", k, 0.5, 1)
    assert s1.kind == Kind.Finite and s1.value == pytest.approx(0.5, abs=1e-9)


def test_s_is_signed():
    assert s_func(lb_mechanism(), 0.6, 0.2) < 0
    assert s_func(lb_mechanism(), 0.6, 0.2) == pytest.approx(-s_func(lb_mechanism(), 0.2, 0.6) *
                                                             j_func(lb_mechanism(), 0.2, 0.6), rel=1e-9)


def test_sibuya_scale_ratio():
    sib = sibuya_mechanism()
    cache = functional_cache(sib, 0.5)
    s0 = limit_at("S", sib, 0.5, 0).value
    s1 = limit_at("S", sib, 0.5, 1).value
    for u in (0.1, 0.5, 0.75, 0.9):
        assert (cache.at("S", u) - s0) / (s1 - s0) == pytest.approx(1 - math.sqrt(1 - u), abs=1e-8)


@pytest.mark.parametrize("mech", PANEL, ids=lambda m: m.name or repr(m.d))
def test_integration_by_parts(mech):
    # E = int S dR and I = int R dS, so E + I = R S with a common anchor
    cache = functional_cache(mech, 0.5)
    x = np.array([0.01, 0.2, 0.7, 0.95, 0.999])
    lhs = cache.at("E", x) + cache.at("I", x)
    rhs = cache.at("R", x) * cache.at("S", x)
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-12)


def test_e_bounded_by_r_when_j_at_least_one():
    # with Psi >= 0 on [theta, 1] the scale measure has mass at most 1 - theta
    for mech in (kingman_mechanism(), Mechanism(1.5, 2.0), Mechanism(2.0, 1.0)):
        for theta in (0.3, 0.5):
            for x in (0.6, 0.9, 0.999):
                assert e_func(mech, theta, x) <= (1 - theta) * r_func(mech, theta, x) + 1e-12


def test_e_over_r_tends_to_scale_total():
    # for the LB instance J < 1 on (theta, 1), so E / R creeps up to S(theta;1) > 1 - theta
    mech = lb_mechanism()
    s1 = limit_at("S", mech, 0.5, 1).value
    assert s1 > 0.5
    cache = functional_cache(mech, 0.5)
    t = np.array([10.0, 20.0, 40.0])
    ratio = cache.at_t("E", t) / cache.at_t("R", t)
    assert np.all(np.diff(ratio) > 0) and ratio[-1] < s1


def test_limit_examples():
    assert limit_at("Q", sibuya_mechanism(), 0.5, 1).kind == Kind.MinusInf
    lb = limit_at("Q", lb_mechanism(), 0.5, 1)
    assert lb.kind == Kind.Finite and lb.value == pytest.approx(-0.15343, abs=1e-5)
    assert limit_at("I", lb_mechanism(), 0.5, 1).kind == Kind.Finite


def test_limits_are_anchor_invariant_in_kind():
    for mech in PANEL:
        for which in "QSREI":
            kinds = {limit_at(which, mech, th, 1).kind for th in (0.3, 0.5, 0.7)}
            assert len(kinds) == 1, (which, mech)


def test_finite_q_forces_infinite_e_and_r():
    for mech in PANEL:
        if limit_at("Q", mech).kind == Kind.Finite:
            assert limit_at("E", mech).kind == Kind.PlusInf
            assert limit_at("R", mech).kind == Kind.PlusInf


def test_e_and_r_share_finiteness_with_finite_scale():
    for mech in PANEL:
        e, r = limit_at("E", mech), limit_at("R", mech)
        if Kind.Inconclusive in (e.kind, r.kind):
            continue
        assert (e.kind == Kind.Finite) == (r.kind == Kind.Finite)


def test_finite_r_with_infinite_e():
    # the equivalence needs S(theta;1) < infinity; here S diverges and E = int S dR diverges with it
    assert limit_at("S", HEAVY).kind == Kind.PlusInf
    assert limit_at("R", HEAVY).kind == Kind.Finite
    assert limit_at("E", HEAVY).kind == Kind.PlusInf


def test_subcritical_sandwich():
    grid = np.linspace(0.5, 1.0, 2001)
    for mech in (lb_mechanism(), Mechanism(1.5, 2.0), PANEL[4], lb_mechanism(d=2.0, c=1.0, pi1=3.0)):
        assert mech.varsigma < 0
        sup = np.max(np.abs(mech.branch_factor(grid)))
        bound = sup * (1 - 0.5) / (0.5 * -mech.varsigma)
        assert abs(limit_at("Q", mech, 0.5, 1).value) <= bound
        assert limit_at("I", mech, 0.5, 1).kind == Kind.Finite


def test_upsilon_closed_forms():
    m = Mechanism(0.0, 2.0)
    assert upsilon(m, 0.5) == pytest.approx(math.log(2) / 2, abs=1e-12)
    sib = sibuya_mechanism()
    assert upsilon(sib, 0.5) == pytest.approx(1.0, abs=1e-12)
    assert upsilon_inv(sib, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert upsilon(sib, 0.0) == 0.0
    assert math.isinf(upsilon(sib, 1.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99))
def test_upsilon_inverse_round_trip(u):
    for mech in (sibuya_mechanism(), lb_mechanism(), Mechanism(0.0, 1.0, bb=OffspringLaw((0.3, 0.2)))):
        assert upsilon_inv(mech, upsilon(mech, u)) == pytest.approx(u, abs=1e-10)


def test_sigma_laplace_trivial_cases():
    lb = lb_mechanism()
    assert sigma_a_laplace(lb, 3, 3, 2.0) == 1.0
    vals = [sigma_a_laplace(lb, 2, 0, mu) for mu in (0.1, 1.0, 10.0, 1000.0)]
    assert all(0 < v < 1 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-2
    with pytest.raises(PreconditionViolated):
        sigma_a_laplace(sibuya_mechanism(), 2, 0, 1.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        q_func(lb_mechanism(), 0.0, 0.5)
    with pytest.raises(DomainError):
        upsilon(lb_mechanism(), 1.5)
