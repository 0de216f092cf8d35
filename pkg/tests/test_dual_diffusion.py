import math

import numpy as np
import pytest
from scipy import special

from bpi.dual_diffusion import (
    boundary_policy,
    drift_dispersion,
    duality_check,
    duality_grid,
    exit_mc,
    exit_probability,
    expected_exit_time,
    sample_U,
    simulate_U,
    stationary_density_check,
)
from bpi.dual_diffusion import _bessel_ratio
from bpi.functionals import functional_cache, limit_at
from bpi.errors import PreconditionViolated
from bpi.mechanisms import Mechanism, OffspringLaw, kingman_mechanism, lb_mechanism, sibuya_mechanism

RECURRENT = Mechanism(0.5, 1.0, OffspringLaw((3.0,)), OffspringLaw((1.0,)))


def test_drift_dispersion_endpoints():
    for mech in (lb_mechanism(), sibuya_mechanism(), RECURRENT):
        assert drift_dispersion(mech, 0.0) == pytest.approx((mech.d, 0.0))
        mu, s2 = drift_dispersion(mech, 1.0)
        assert abs(mu) < 1e-12 and abs(s2) < 1e-12


def test_wright_fisher_with_efficiency():
    rho = 0.3
    mech = Mechanism(0.0, 1.0, OffspringLaw((rho,)), OffspringLaw((1.0,)))
    u = np.linspace(0, 1, 21)
    mu, s2 = drift_dispersion(mech, u)
    assert np.allclose(mu, -rho * u * (1 - u), atol=1e-14)
    assert np.allclose(s2, 2 * u * (1 - u) ** 2, atol=1e-14)


def test_policies_follow_boundary_classes():
    assert boundary_policy(lb_mechanism(d=2.0, c=1.0))[0] == "clamp"
    assert boundary_policy(lb_mechanism())[0] == "reflect"
    assert boundary_policy(kingman_mechanism()) == ("absorb", "absorb")


def test_martingale_dual():
    mech = kingman_mechanism()
    n = 20000
    coarse, _ = sample_U(mech, 0.3, n, [0.1, 1.0, 10.0], 1e-3, seed=2, paired=False)
    for j in range(3):
        se = coarse[:, j].std(ddof=1) / math.sqrt(n)
        assert abs(coarse[:, j].mean() - 0.3) < 3 * se + 1e-12


def test_sibuya_paths_split_by_scale_ratio():
    # boundary 1 is natural here, so "reaching 1" means U_t -> 1; by t = 50 paths sit near 0 or 1
    n = 5000
    coarse, _ = sample_U(sibuya_mechanism(), 0.75, n, [50.0], 2e-3, seed=3, paired=False)
    top = coarse[:, 0] > 0.5
    assert abs(top.mean() - 0.5) < 3 * math.sqrt(0.25 / n) + 0.005


def test_entrance_boundary_never_absorbs():
    # the squared-Bessel scheme registers hits of 0 only through the local hitting law
    entrance = lb_mechanism(d=2.0, c=1.0)
    coarse, _ = sample_U(entrance, 0.5, 5000, [1.0, 5.0], 1e-3, seed=1, policy=("absorb", "absorb"),
                         paired=False, scheme="besq")
    assert not np.any(coarse == 0.0)
    reflecting = lb_mechanism(d=0.5, c=1.0)
    coarse, _ = sample_U(reflecting, 0.5, 5000, [5.0], 1e-3, seed=1, policy=("absorb", "absorb"),
                         paired=False, scheme="besq")
    assert np.mean(coarse == 0.0) > 0.2


def test_forced_absorption_matches_scale_ratio():
    mech = lb_mechanism(d=0.5, c=1.0)
    s0, s1 = limit_at("S", mech, 0.5, 0).value, limit_at("S", mech, 0.5, 1).value
    expect = (s1 - functional_cache(mech, 0.5).at("S", 0.5)) / (s1 - s0)
    n = 20000
    coarse, _ = sample_U(mech, 0.5, n, [30.0], 1e-2, seed=2, policy=("absorb", "absorb"), paired=False,
                         scheme="besq")
    assert abs(np.mean(coarse == 0.0) - expect) < 3 * math.sqrt(0.25 / n)


def test_bessel_ratio_series():
    for a, z in [(0.5, 0.1), (0.5, 3.0), (0.25, 10.0), (0.1, 1e-3)]:
        assert _bessel_ratio(a, z) == pytest.approx(special.iv(a, z) / special.iv(-a, z), rel=1e-12)


def test_single_path_record():
    path = simulate_U(sibuya_mechanism(), 0.5, 1.0, 1e-3, seed=4)
    assert len(path.states) == 1001 and path.times[-1] == pytest.approx(1.0)
    assert np.all((path.states >= 0) & (path.states <= 1))
    heavy = Mechanism(0.5, 1.0, OffspringLaw((), 0.5, 2.5, 0))
    path = simulate_U(heavy, 0.5, 0.5, 1e-3, seed=4)
    assert np.all(np.isfinite(path.states))


def test_exit_boundary_values():
    for mech in (kingman_mechanism(), lb_mechanism()):
        assert exit_probability(mech, 0.2, 0.8, 0.2) == pytest.approx(0.0, abs=1e-12)
        assert exit_probability(mech, 0.2, 0.8, 0.8) == pytest.approx(1.0, abs=1e-12)
        assert expected_exit_time(mech, 0.2, 0.8, 0.2) == 0.0
        assert expected_exit_time(mech, 0.2, 0.8, 0.8) == 0.0


def test_kingman_exit_closed_forms():
    k = kingman_mechanism()
    for u in (0.3, 0.5, 0.7):
        assert exit_probability(k, 0.2, 0.8, u) == pytest.approx((u - 0.2) / 0.6, abs=1e-12)
    # Green function of u(1-u) f'' = -1 on (0.2, 0.8) with zero boundary values
    def h(x):
        return -(x * math.log(x) + (1 - x) * math.log(1 - x))

    expect = h(0.5) - h(0.2)  # symmetric interval: the linear part vanishes at the midpoint
    assert expected_exit_time(k, 0.2, 0.8, 0.5) == pytest.approx(expect, abs=1e-10)


def test_exit_time_solves_its_ode():
    # u Phi T'' + Psi T' = -1 inside (a, b)
    mech = lb_mechanism()
    for x in (0.3, 0.5, 0.7):
        h = 1e-3
        f = [expected_exit_time(mech, 0.2, 0.8, x + k * h) for k in (-1, 0, 1)]
        d1 = (f[2] - f[0]) / (2 * h)
        d2 = (f[2] - 2 * f[1] + f[0]) / h ** 2
        assert x * mech.phi(x) * d2 + mech.psi(x) * d1 == pytest.approx(-1.0, abs=1e-4)


def test_exit_mc_small():
    mech = lb_mechanism()
    res = exit_mc(mech, 0.2, 0.8, 0.5, n=20000, dt=1e-3, seed=5)
    p, t = exit_probability(mech, 0.2, 0.8, 0.5), expected_exit_time(mech, 0.2, 0.8, 0.5)
    for tag in ("dt", "dt/2"):
        r = res[tag]
        assert abs(r["p"] - p) < 3 * r["p_se"] + 0.01
        assert abs(r["t"] - t) < 3 * r["t_se"] + 0.005


def test_duality_trivial_time():
    rep = duality_check(lb_mechanism(), 3, 0.4, 0.0)
    assert rep.lhs == rep.rhs == pytest.approx(0.4 ** 3) and rep.passed


def test_duality_small_grid():
    reps = duality_grid(lb_mechanism(), zs=(1, 5), us=(0.5, 0.8), ts=(0.5,), n=20000, dt=1e-3, seed=3)
    assert len(reps) == 4
    assert all(r.passed for r in reps), [r.to_dict() for r in reps if not r.passed]


def test_stationary_density():
    rep = stationary_density_check(RECURRENT, n=10**4, T=50.0, dt=1e-2, seed=2)
    assert rep["scheme"] == "besq"
    assert rep["ks"] < 0.02


def test_besq_guard():
    with pytest.raises(PreconditionViolated):
        sample_U(kingman_mechanism(), 0.5, 10, [1.0], 1e-2, paired=True, scheme="besq")
    with pytest.raises(PreconditionViolated):
        stationary_density_check(lb_mechanism())
