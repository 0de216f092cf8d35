"""Law of the extinction time zeta_0 when Q(theta; 1) is finite and d > 0.

With m(u) = Q(u; 1), tau(u) = int_u^1 e^m and phi = tau^{-1}, the nonnegative
solution w_q of w' - w^2 = -q r^2 on (0, xi) vanishing at xi determines the
Laplace transform of zeta_0. The Riccati equation is integrated in the
coordinate y = phi(x): W(y) = w(tau(y)) solves

    W' = q e^{-m} / (y Phi) - e^{m} W^2,   W(0+) = 0,

which is the backward shooting problem in x read forwards in y (the starting
point y = eps plays the role of the terminal offset). Along y the equation
is contracting, so explicit blow-up branches never appear. Everything runs on
the logit axis t = ln(y / (1 - y)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from scipy import interpolate, optimize

from .errors import PreconditionViolated, StiffnessFailure
from .functionals import (T_MAX, ChebPanels, Kind, expit_pair, functional_cache, limit_at, logit)
from .mechanisms import Mechanism

__all__ = [
    "RiccatiSolution",
    "m_func",
    "tau_func",
    "xi_value",
    "phi_of_tau",
    "r_func",
    "solve_wq",
    "laplace_zeta0",
    "mean_zeta0",
    "resolvent_H",
    "laplace_infinity",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _gl_nodes(t_lo, t_hi, panel=0.25):
    n = max(1, int(math.ceil((t_hi - t_lo) / panel)))
    edges = np.linspace(t_lo, t_hi, n + 1)
    a, b = edges[:-1, None], edges[1:, None]
    t = (0.5 * (a + b) + 0.5 * (b - a) * _GL_X).ravel()
    w = (0.5 * (b - a) * _GL_W).ravel()
    return t, w


class _TimeScale:
    """m, tau and phi for one mechanism."""

    def __init__(self, mech: Mechanism, theta: float):
        if mech.d <= 0:
            raise PreconditionViolated("extinction-time results need d > 0")
        q1 = limit_at("Q", mech, theta, 1)
        if q1.kind != Kind.Finite:
            raise PreconditionViolated(f"Q(theta;1) must be finite, got {q1.kind.value}")
        self.mech = mech
        self.cache = functional_cache(mech, float(theta))
        self.q1 = float(q1.value)

        def em(t):
            u, v = expit_pair(t)
            return np.exp(self.m_t(t)) * u * v

        self._tau = ChebPanels.build(em)
        # below y0 = expit(-T_MAX), e^m ~ e^{m(y0)} (y/y0)^{-d/c}; add that piece in closed form
        self.kappa = mech.d / mech.c if mech.c > 0 else math.inf
        if self.kappa < 1:
            y0 = float(expit_pair(-T_MAX)[0])
            head = math.exp(float(self.m_t(-T_MAX)[0])) * y0 / (1.0 - self.kappa)
        else:
            head = 0.0
        self._tau_total = float(self._tau(T_MAX)[0]) + head
        # xi is finite iff e^m is integrable at 0
        self.xi = self._tau_total if self.kappa < 1 else math.inf

    def m_t(self, t):
        return self.q1 - self.cache.Q_t(t)

    def tau_t(self, t):
        return self._tau_total - self._tau(t)

    def interaction(self, t):
        u, v = expit_pair(t)
        return self.mech.interaction_factor(u, v)


@lru_cache(maxsize=64)
def _timescale(mech: Mechanism, theta: float = 0.5) -> _TimeScale:
    return _TimeScale(mech, theta)


def m_func(mech: Mechanism, u, theta=0.5):
    """m(u) = Q(u; 1)."""
    ts = _timescale(mech, float(theta))
    u = np.asarray(u, dtype=float)
    out = ts.m_t(logit(np.atleast_1d(u)))
    return float(out[0]) if u.ndim == 0 else out


def tau_func(mech: Mechanism, u, theta=0.5):
    """tau(u) = int_u^1 e^{m(v)} dv."""
    ts = _timescale(mech, float(theta))
    u = np.asarray(u, dtype=float)
    uu = np.atleast_1d(u)
    out = np.zeros_like(uu)
    inner = uu < 1.0
    out[inner] = ts.tau_t(logit(np.clip(uu[inner], 1e-300, 1.0)))
    return float(out[0]) if u.ndim == 0 else out


def xi_value(mech: Mechanism, theta=0.5) -> float:
    return _timescale(mech, float(theta)).xi


def phi_of_tau(mech: Mechanism, x: float, theta=0.5) -> float:
    """Inverse of tau on [0, xi), by a bracketed root find on the logit axis."""
    ts = _timescale(mech, float(theta))
    if x <= 0:
        return 1.0
    if x >= ts.xi:
        raise PreconditionViolated("x must lie in [0, xi)")
    lo, hi = -T_MAX, T_MAX
    if ts.tau_t(lo)[0] < x:
        raise PreconditionViolated("x beyond the resolved range of tau")
    t = optimize.brentq(lambda s: ts.tau_t(s)[0] - x, lo, hi, xtol=1e-14, rtol=1e-15)
    return float(expit_pair(t)[0])


def r_func(mech: Mechanism, x: float, theta=0.5) -> float:
    """r(x) = |phi'(x)| (phi Phi(phi))^{-1/2}, using phi' = -e^{-m(phi)}."""
    y = phi_of_tau(mech, x, theta)
    return float(math.exp(-m_func(mech, y, theta)) / math.sqrt(y * float(mech.phi(y))))


# ---------------------------------------------------------------------------
# Riccati solution

@dataclass
class RiccatiSolution:
    q: float
    xi: float
    grid: np.ndarray  # x = tau(y), increasing
    w: np.ndarray
    envelope: np.ndarray  # sqrt(q) r on the grid
    eps: float  # starting point in y (terminal offset)
    sensitivity: float  # relative change of W on an interior window under the last eps refinement
    diagnostics: dict = field(default_factory=dict)
    _interp: object = field(default=None, repr=False)
    _t0: float = 0.0
    _end: np.ndarray = field(default=None, repr=False)

    def integral(self) -> float:
        """int_0^xi w_q."""
        return float(self._end[1])

    def state(self, t):
        """(W, Omega, P) at logit points t: Omega(y) = int_{tau(y)}^xi w, P the forward cumulant for K."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((3, len(t)))
        inside = t >= self._t0
        if inside.any():
            out[:, inside] = self._interp(t[inside]).T
        return out


@numba.njit(cache=True)
def _rk4(A, B, h, y0):
    """Classical RK4 for (W, Omega, P)' = (A - B W^2, B W, B e^{-2 Omega}).

    A and B are tabulated at half steps: node k of the solution sits at A[2k].
    Returns the states and their derivatives at the nodes.
    """
    n = (len(A) - 1) // 2
    Y = np.empty((n + 1, 3))
    F = np.empty((n + 1, 3))
    w, om, pp = y0[0], y0[1], y0[2]
    for k in range(n + 1):
        a0, b0 = A[2 * k], B[2 * k]
        Y[k, 0], Y[k, 1], Y[k, 2] = w, om, pp
        F[k, 0] = a0 - b0 * w * w
        F[k, 1] = b0 * w
        F[k, 2] = b0 * math.exp(-2.0 * om)
        if k == n:
            break
        am, bm = A[2 * k + 1], B[2 * k + 1]
        a1, b1 = A[2 * k + 2], B[2 * k + 2]
        k1w, k1o = F[k, 0], F[k, 1]
        k1p = F[k, 2]
        w2, o2 = w + 0.5 * h * k1w, om + 0.5 * h * k1o
        k2w, k2o, k2p = am - bm * w2 * w2, bm * w2, bm * math.exp(-2.0 * o2)
        w3, o3 = w + 0.5 * h * k2w, om + 0.5 * h * k2o
        k3w, k3o, k3p = am - bm * w3 * w3, bm * w3, bm * math.exp(-2.0 * o3)
        w4, o4 = w + h * k3w, om + h * k3o
        k4w, k4o, k4p = a1 - b1 * w4 * w4, b1 * w4, b1 * math.exp(-2.0 * o4)
        w += h / 6.0 * (k1w + 2 * k2w + 2 * k3w + k4w)
        om += h / 6.0 * (k1o + 2 * k2o + 2 * k3o + k4o)
        pp += h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return Y, F


def _integrate(ts: _TimeScale, q, t0, n):
    """RK4 with n steps on [t0, T_MAX]; returns (nodes, states, derivatives)."""
    half = np.linspace(t0, T_MAX, 2 * n + 1)
    u, v = expit_pair(half)
    m = ts.m_t(half)
    A = q * np.exp(-m) / ts.mech.interaction_factor(u, v)
    B = np.exp(m) * u * v
    # start from the small-y asymptotics W ~ q e^{-m}/d, Omega ~ q y/d
    y0 = np.array([q * math.exp(-float(m[0])) / ts.mech.d, q * float(u[0]) / ts.mech.d, 0.0])
    Y, F = _rk4(A, B, (T_MAX - t0) / n, y0)
    if not np.all(np.isfinite(Y)):
        raise StiffnessFailure("Riccati integration overflowed")
    return half[::2], Y, F


def _integrate_adaptive(ts, q, t0, rtol):
    """Halve the step until two successive RK4 solutions agree to rtol (RK4 error ~ difference / 15)."""
    n = 4096
    t, Y, F = _integrate(ts, q, t0, n)
    for _ in range(8):
        t2, Y2, F2 = _integrate(ts, q, t0, 2 * n)
        scale = np.maximum(np.abs(Y2[::2]), 1e-300)
        err = float(np.max(np.abs(Y2[::2] - Y)[:, :2] / scale[:, :2])) / 15.0
        t, Y, F, n = t2, Y2, F2, 2 * n
        if err < rtol:
            return t, Y, F, err
    raise StiffnessFailure(f"step halving did not reach rtol={rtol:g} (last estimate {err:.3g})")


def _solve(ts: _TimeScale, q, rtol):
    eps = 1e-8
    prev = _integrate_adaptive(ts, q, float(logit(eps)), rtol)
    window = np.linspace(-5.0, 5.0, 21)
    sens = math.inf
    while eps > 1e-16:
        eps_new = eps * 1e-2
        cur = _integrate_adaptive(ts, q, float(logit(eps_new)), rtol)
        a = interpolate.CubicHermiteSpline(prev[0], prev[1][:, 0], prev[2][:, 0])(window)
        b = interpolate.CubicHermiteSpline(cur[0], cur[1][:, 0], cur[2][:, 0])(window)
        sens = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        prev, eps = cur, eps_new
        w = cur[1][:, 0]
        if sens < 10 * rtol and abs(w[0]) < 1e-8 * np.max(np.abs(w)):
            break
    return prev, eps, sens


@lru_cache(maxsize=128)
def _solve_cached(mech: Mechanism, q: float, theta: float, rtol: float):
    ts = _timescale(mech, theta)
    return _solve(ts, q, rtol)


def solve_wq(mech: Mechanism, q: float, theta=0.5, rtol=1e-10, n_grid=400) -> RiccatiSolution:
    """Nonnegative solution of w' - w^2 = -q r^2 vanishing at xi."""
    if not q > 0:
        raise PreconditionViolated("q must be positive")
    ts = _timescale(mech, float(theta))
    (t, Y, F, err), eps, sens = _solve_cached(mech, float(q), float(theta), float(rtol))
    interp = interpolate.CubicHermiteSpline(t, Y, F, axis=0)
    t0 = float(t[0])
    tg = np.linspace(t0, T_MAX, n_grid)
    W = interp(tg)[:, 0]
    x = ts.tau_t(tg)
    u, v = expit_pair(tg)
    env = math.sqrt(q) * np.exp(-ts.m_t(tg)) / np.sqrt(u * mech.phi(u, v))
    order = np.argsort(x)
    xs = x[order]
    keep = np.concatenate(([True], np.diff(xs) > 0))
    if np.any(W < -1e-12 * np.max(np.abs(W))):
        raise StiffnessFailure("solution left the nonnegative branch")
    return RiccatiSolution(float(q), ts.xi, xs[keep], np.maximum(W[order], 0.0)[keep], env[order][keep], eps,
                           sens, {"n_steps": len(t) - 1, "t0": t0, "step_error": err}, interp, t0, Y[-1])


# ---------------------------------------------------------------------------
# transforms of zeta_0

def _kernel(mech, z, q, theta, split=None):
    """Logit nodes with the pieces shared by the Laplace transform and the resolvent."""
    ts = _timescale(mech, float(theta))
    rs = solve_wq(mech, q, theta)
    if split is not None and rs._t0 < split < T_MAX:
        t1, w1 = _gl_nodes(rs._t0, split)
        t2, w2 = _gl_nodes(split, T_MAX)
        t, wts = np.concatenate((t1, t2)), np.concatenate((w1, w2))
    else:
        t, wts = _gl_nodes(rs._t0, T_MAX)
    u, v = expit_pair(t)
    W, Om, P = rs.state(t)
    Ptot = float(rs._end[2])
    K = np.maximum(Ptot - P, 0.0)  # int_y^1 e^{m - 2 Omega}
    Kt = np.exp(2 * Om) * K  # K scaled by e^{2 Omega(y)}
    one_minus = -np.expm1(z * np.log(u)) if z > 0 else np.zeros_like(u)
    dens = q * np.exp(-ts.m_t(t)) / ts.interaction(t) * one_minus
    return t, wts, Om, Kt, dens


def laplace_zeta0(mech: Mechanism, z: int, q: float, theta=0.5) -> float:
    """E_z[exp(-q zeta_0)]."""
    if z == 0:
        return 1.0
    t, wts, Om, Kt, dens = _kernel(mech, int(z), float(q), theta)
    # 1 - int_0^1 q e^{-m}/(y Phi) (1 - y^z) e^{Omega(y)} K(y) dy, with e^{Om} K = e^{-Om} Kt
    return float(1.0 - np.sum(wts * dens * np.exp(-Om) * Kt))


def resolvent_H(mech: Mechanism, z: int, q: float, u: float, theta=0.5) -> float:
    """q H_{q,z}(u) = q int_0^inf e^{-qt} E_z[u^{Z_t}] dt."""
    if z == 0:
        return 1.0
    if u >= 1.0:
        return 1.0
    if u <= 0.0:
        return laplace_zeta0(mech, z, q, theta)
    tu = float(logit(u))
    t, wts, Om, Kt, dens = _kernel(mech, int(z), float(q), theta, split=tu)
    rs = solve_wq(mech, q, theta)
    Wu, Omu, Pu = rs.state([tu])[:, 0]
    Ptot = float(rs._end[2])
    Ktu = math.exp(2 * Omu) * max(Ptot - Pu, 0.0)
    below = t < tu  # y < u: the inner range starts at u
    weight = np.where(below, np.exp(Om - Omu) * Ktu, np.exp(Omu - Om) * Kt)
    return float(1.0 - np.sum(wts * dens * weight))


def mean_zeta0(mech: Mechanism, z: int, theta=0.5) -> float:
    """E_z[zeta_0] = int_0^1 (1 - y^z)/(y Phi(y)) e^{-m(y)} tau(y) dy; no Riccati solve needed."""
    if z == 0:
        return 0.0
    ts = _timescale(mech, float(theta))
    t, wts = _gl_nodes(-T_MAX, T_MAX)
    u, v = expit_pair(t)
    one_minus = -np.expm1(z * np.log(u))
    f = one_minus * np.exp(-ts.m_t(t)) * ts.tau_t(t) / ts.interaction(t)
    return float(np.sum(wts * f))


def laplace_infinity(mech: Mechanism, q: float, theta=0.5) -> float:
    """E_inf[exp(-q zeta_0)] = exp(-int_0^xi w_q)."""
    return math.exp(-solve_wq(mech, q, theta).integral())
