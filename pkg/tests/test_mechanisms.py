import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bpi.mechanisms import (
    Mechanism,
    OffspringLaw,
    Regime,
    kingman_mechanism,
    lb_mechanism,
    named_mechanism,
    phi,
    psi,
    ratio_integrand,
    regime,
    sibuya_mechanism,
)

weights = st.lists(st.floats(0.0, 2.0), min_size=0, max_size=5)
tails = st.one_of(st.none(), st.tuples(st.floats(0.05, 2.0), st.floats(0.3, 3.0), st.integers(0, 6)))


def _law(ws, tail):
    if tail is None:
        return OffspringLaw(tuple(ws))
    amp, alpha, cut = tail
    return OffspringLaw(tuple(ws[:cut]), amp, alpha, cut)


@st.composite
def mechanisms(draw):
    d = draw(st.floats(0.0, 3.0))
    c = draw(st.floats(0.1, 3.0))
    return Mechanism(d, c, _law(draw(weights), draw(tails)), _law(draw(weights), draw(tails)))


def test_psi_lb_quarter():
    m = lb_mechanism()
    assert psi(m, 0.25) == pytest.approx(0.1875, abs=1e-14)
    # factored form (1 - u)(0.5 - u)
    assert m.psi_factored(0.25) == pytest.approx(0.75 * 0.25, abs=1e-14)


def test_phi_sibuya_half():
    # cooperation b_1 = c = 1 gives Phi(u) = (1 - u)^2
    assert phi(sibuya_mechanism(), 0.5) == pytest.approx(0.25, abs=1e-14)
    u = np.linspace(0, 1, 11)
    assert np.allclose(phi(sibuya_mechanism(), u), (1 - u) ** 2, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(mechanisms())
def test_endpoint_values(mech):
    assert psi(mech, 0.0) == pytest.approx(mech.d, abs=1e-12)
    assert phi(mech, 0.0) == pytest.approx(mech.c, abs=1e-12)
    assert abs(psi(mech, 1.0)) < 1e-12
    assert abs(phi(mech, 1.0)) < 1e-12


def test_direct_and_factored_agree_on_finite_support():
    rng = np.random.default_rng(4)
    u = rng.uniform(0, 1, 1000)
    for mech in (lb_mechanism(), sibuya_mechanism(), kingman_mechanism(),
                 Mechanism(1.3, 0.7, OffspringLaw((0.2, 0.0, 1.1, 0.4)), OffspringLaw((0.1, 0.3)))):
        assert np.max(np.abs(mech.psi_direct(u) - mech.psi_factored(u))) < 1e-12
        assert np.max(np.abs(mech.phi_direct(u) - mech.phi_factored(u))) < 1e-12


def test_power_law_tail_forms_agree():
    law = OffspringLaw((0.3,), 1.0, 1.5, 1)
    mech = Mechanism(0.5, 1.0, law, OffspringLaw((0.2,), 0.5, 2.5, 1))
    u = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(mech.psi_direct(u) - mech.psi_factored(u))) < 1e-10
    assert np.max(np.abs(mech.phi_direct(u) - mech.phi_factored(u))) < 1e-10


@settings(max_examples=60, deadline=None)
@given(mechanisms(), st.floats(0.0, 1.0))
def test_phi_and_psi_bounds(mech, u):
    # natural births only push Psi down; Phi lies between c(1-u)-b u(1-u) and c(1-u)
    assert psi(mech, u) <= mech.d * (1 - u) + 1e-12
    assert phi(mech, u) <= mech.c * (1 - u) + 1e-12


def test_ratio_integrand_examples():
    assert ratio_integrand(lb_mechanism(), 0.5) == pytest.approx(0.0, abs=1e-14)
    assert ratio_integrand(kingman_mechanism(), 0.3) == pytest.approx(0.0, abs=1e-14)
    # Psi/(u Phi) = -0.5 u (1-u) / (u (1-u)^2) = -0.5/(1-u)
    assert ratio_integrand(sibuya_mechanism(), 0.5) == pytest.approx(-1.0, abs=1e-13)


def test_regimes():
    assert regime(lb_mechanism()) == Regime.SubcriticalCooperative
    assert regime(sibuya_mechanism()) == Regime.CriticalCooperative
    sup = Mechanism(0.0, 1.0, bb=OffspringLaw((0.0, 1.0)))
    assert regime(sup) == Regime.SupercriticalCooperative
    assert not sup.hypothesis_h


def test_varsigma_infinite_for_heavy_cooperation():
    mech = Mechanism(0.0, 1.0, bb=OffspringLaw((), 1.0, 0.8, 0))
    assert math.isinf(mech.varsigma)
    assert not mech.bb.finite_mean


def test_tail_sums_monotone():
    law = OffspringLaw((0.5, 0.1, 0.7), 0.3, 1.2, 3)
    bars = [law.tail_sum(k) for k in range(1, 50)]
    assert all(a >= b for a, b in zip(bars, bars[1:]))
    assert bars[0] == pytest.approx(law.total, rel=1e-12)


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        OffspringLaw((0.5, -0.1))
    with pytest.raises(ValueError):
        Mechanism(-1.0, 1.0)


def test_json_round_trip():
    mech = Mechanism(0.5, 1.0, OffspringLaw((0.3,), 1.0, 1.5, 1), OffspringLaw((0.2,)))
    back = Mechanism.from_json(mech.to_json())
    assert back == mech


def test_named_lookup():
    assert named_mechanism("LB") == lb_mechanism()
    with pytest.raises(ValueError):
        named_mechanism("nope")
