"""Boundary functionals Q, J, S, R, E, I and the time-change map Upsilon.

All integrals live on (0, 1) with singular behaviour at both ends, so they
are computed on the logit axis t = log(u / (1 - u)), where every integrand
turns into something with exponential (rather than power) behaviour at
the ends. On that axis each antiderivative is stored as a piecewise
Chebyshev series, built once per (mechanism, anchor); nested functionals
reuse the cheaper ones, so E and I cost a single extra pass.

Limits at the boundaries are decided by ``limit_at``: refinement at
x = boundary -/+ 2^-k, a fitted tail exponent for the increments, and the
analytic shortcuts that are provable for the given mechanism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate, optimize

from .errors import DomainError, PreconditionViolated, RegimeError, ToleranceNotMet
from .mechanisms import Mechanism, log_moment_holds

__all__ = [
    "Kind",
    "ExtendedReal",
    "QuadratureConfig",
    "ChebPanels",
    "FunctionalCache",
    "functional_cache",
    "q_func",
    "j_func",
    "s_func",
    "r_func",
    "e_func",
    "i_func",
    "limit_at",
    "upsilon",
    "upsilon_inv",
    "sigma_a_laplace",
    "logit",
    "expit_pair",
]

T_MAX = 40.0  # logit range covered by the caches; 1 - expit(40) ~ 4e-18
_DEG = 32
_MAX_SPLIT = 6


class Kind(str, Enum):
    Finite = "Finite"
    PlusInf = "PlusInf"
    MinusInf = "MinusInf"
    Inconclusive = "Inconclusive"


@dataclass
class ExtendedReal:
    kind: Kind
    value: float = math.nan
    error_bound: float = 0.0
    diagnostics: list = field(default_factory=list)
    basis: str = ""

    @property
    def finite(self) -> bool:
        return self.kind == Kind.Finite

    @property
    def infinite(self) -> bool:
        return self.kind in (Kind.PlusInf, Kind.MinusInf)

    def as_float(self) -> float:
        if self.kind == Kind.Finite:
            return self.value
        if self.kind == Kind.PlusInf:
            return math.inf
        if self.kind == Kind.MinusInf:
            return -math.inf
        return math.nan

    def to_dict(self, with_diagnostics=False) -> dict:
        out = {"kind": self.kind.value, "basis": self.basis}
        if self.kind == Kind.Finite:
            out["value"] = self.value
            out["error_bound"] = self.error_bound
        if with_diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_refinements: int = 40
    divergence_threshold: float = 1e12

    def __post_init__(self):
        if min(self.rel_tol, self.abs_tol, self.max_refinements, self.divergence_threshold) <= 0:
            raise ValueError("quadrature settings must be positive")


DEFAULT_CFG = QuadratureConfig()


def logit(u):
    u = np.asarray(u, dtype=float)
    return np.log(u) - np.log1p(-u)


def expit_pair(t):
    """(u, 1 - u) for u = expit(t), both computed without cancellation."""
    t = np.asarray(t, dtype=float)
    u = np.where(t >= 0, 1.0 / (1.0 + np.exp(-np.abs(t))), np.exp(-np.abs(t)) / (1.0 + np.exp(-np.abs(t))))
    v = np.where(t >= 0, np.exp(-np.abs(t)) / (1.0 + np.exp(-np.abs(t))), 1.0 / (1.0 + np.exp(-np.abs(t))))
    return u, v


# ---------------------------------------------------------------------------
# piecewise Chebyshev antiderivatives

class ChebPanels:
    """Antiderivative F(t) = int_{t_lo}^t f of a function known on [t_lo, t_hi].

    Panels are split until the trailing Chebyshev coefficients of f fall
    below ``tol`` relative to the panel scale. A panel with non-finite
    samples makes F infinite (with the sign of f) from that panel on.
    """

    def __init__(self, edges, coefs, offsets, inf_from=None, inf_sign=0.0):
        self.edges = edges
        self.coefs = coefs
        self.offsets = offsets
        self.inf_from = inf_from
        self.inf_sign = inf_sign

    @classmethod
    def build(cls, f, t_lo=-T_MAX, t_hi=T_MAX, width=1.0, tol=1e-14):
        n0 = int(math.ceil((t_hi - t_lo) / width))
        stack = [(t_lo + (t_hi - t_lo) * k / n0, t_lo + (t_hi - t_lo) * (k + 1) / n0, 0)
                 for k in range(n0)][::-1]
        edges, coefs = [], []
        inf_from, inf_sign = None, 0.0
        x = np.cos(np.pi * (np.arange(_DEG + 1) + 0.5) / (_DEG + 1))  # first-kind nodes
        while stack:
            a, b, depth = stack.pop()
            tt = 0.5 * (a + b) + 0.5 * (b - a) * x
            with np.errstate(over="ignore", invalid="ignore"):
                vals = np.asarray(f(tt), dtype=float)
            if not np.all(np.isfinite(vals)):
                bad = vals[~np.isfinite(vals)]
                inf_sign = 1.0 if np.nanmax(np.nan_to_num(bad, nan=1.0)) > 0 else -1.0
                inf_from = a
                break
            c = C.chebfit(x, vals, _DEG)
            scale = max(np.max(np.abs(vals)), 1e-300)
            if depth < _MAX_SPLIT and np.max(np.abs(c[-4:])) > tol * scale:
                m = 0.5 * (a + b)
                stack.append((m, b, depth + 1))
                stack.append((a, m, depth + 1))
                continue
            ci = C.chebint(c, lbnd=-1) * (0.5 * (b - a))
            edges.append((a, b))
            coefs.append(ci)
        if not edges:
            edges, coefs = [(t_lo, t_lo)], [np.zeros(1)]
        lo = np.array([e[0] for e in edges])
        hi = np.array([e[1] for e in edges])
        totals = np.array([C.chebval(1.0, ci) for ci in coefs])
        offsets = np.concatenate(([0.0], np.cumsum(totals)[:-1]))
        return cls((lo, hi), coefs, offsets, inf_from, inf_sign)

    @property
    def t_end(self):
        return self.edges[1][-1]

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo, hi = self.edges
        out = np.empty_like(t)
        idx = np.clip(np.searchsorted(hi, t, side="left"), 0, len(hi) - 1)
        for k in np.unique(idx):
            sel = idx == k
            a, b = lo[k], hi[k]
            xs = np.clip((2 * t[sel] - a - b) / (b - a) if b > a else np.zeros(sel.sum()), -1, 1)
            out[sel] = self.offsets[k] + C.chebval(xs, self.coefs[k])
        if self.inf_from is not None:
            out[t > self.inf_from] = self.inf_sign * math.inf
        if np.any(t < lo[0] - 1e-12) or (self.inf_from is None and np.any(t > hi[-1] + 1e-12)):
            raise DomainError("logit argument outside the cached range")
        return out

    def total(self):
        return float(self(np.array([self.t_end]))[0])


# ---------------------------------------------------------------------------
# cached functionals anchored at theta

def _check_mech(mech: Mechanism):
    if mech.varsigma > 0:
        raise RegimeError("functionals need varsigma <= 0")
    if mech.c <= 0:
        raise PreconditionViolated("hypothesis (H) needs c > 0")


class FunctionalCache:
    """Q, S, R, E, I (and the Upsilon integral) anchored at theta, on the logit axis."""

    def __init__(self, mech: Mechanism, theta: float):
        _check_mech(mech)
        if not 0 < theta < 1:
            raise DomainError("anchor must lie in (0, 1)")
        self.mech = mech
        self.theta = float(theta)
        self.t_theta = float(logit(theta))
        m = mech

        def q_int(t):
            u, v = expit_pair(t)
            return m.branch_factor(u, v) * v / m.interaction_factor(u, v)

        self._fq = ChebPanels.build(q_int)
        self._fq0 = float(self._fq(self.t_theta)[0])

        def s_int(t):
            u, v = expit_pair(t)
            return np.exp(-self.Q_t(t)) * u * v

        def r_int(t):
            u, v = expit_pair(t)
            return np.exp(self.Q_t(t)) / m.interaction_factor(u, v)

        def y_int(t):
            u, v = expit_pair(t)
            return u / m.interaction_factor(u, v)

        self._fs = ChebPanels.build(s_int)
        self._fs0 = float(self._fs(self.t_theta)[0])
        self._fr = ChebPanels.build(r_int)
        self._fr0 = float(self._fr(self.t_theta)[0])
        self._fy = ChebPanels.build(y_int)
        self._fy0 = float(self._fy(self.t_theta)[0])

        def e_int(t):
            u, v = expit_pair(t)
            return self.S_t(t) * np.exp(self.Q_t(t)) / m.interaction_factor(u, v)

        def i_int(t):
            u, v = expit_pair(t)
            return self.R_t(t) * np.exp(-self.Q_t(t)) * u * v

        self._fe = ChebPanels.build(e_int)
        self._fe0 = float(self._fe(self.t_theta)[0])
        self._fi = ChebPanels.build(i_int)
        self._fi0 = float(self._fi(self.t_theta)[0])

    # values on the logit axis
    def Q_t(self, t):
        return self._fq(t) - self._fq0

    def S_t(self, t):
        return self._fs(t) - self._fs0

    def R_t(self, t):
        return self._fr(t) - self._fr0

    def E_t(self, t):
        return self._fe(t) - self._fe0

    def I_t(self, t):
        return self._fi(t) - self._fi0

    def Y_t(self, t):
        """int_theta^u dw / Phi(w)."""
        return self._fy(t) - self._fy0

    def at(self, which: str, x):
        """Functional `which` in {Q,J,S,R,E,I} evaluated at x in (0,1), anchored at theta."""
        scalar = np.ndim(x) == 0
        t = logit(np.atleast_1d(x))
        out = self.at_t(which, t)
        return float(out[0]) if scalar else out

    def at_t(self, which, t):
        f = {"Q": self.Q_t, "S": self.S_t, "R": self.R_t, "E": self.E_t, "I": self.I_t, "Y": self.Y_t}
        if which == "J":
            return np.exp(self.Q_t(t))
        return f[which](t)


@lru_cache(maxsize=256)
def functional_cache(mech: Mechanism, theta: float = 0.5) -> FunctionalCache:
    return FunctionalCache(mech, theta)


# ---------------------------------------------------------------------------
# pointwise functionals

def _interior(*xs):
    for x in xs:
        if not 0 < x < 1:
            raise DomainError("arguments must lie in (0, 1)")


def q_func(mech: Mechanism, y: float, x: float, cfg: QuadratureConfig = DEFAULT_CFG) -> float:
    """Q(y;x) = int_y^x Psi / (w Phi) dw by adaptive Gauss-Kronrod."""
    _check_mech(mech)
    _interior(y, x)
    if y == x:
        return 0.0
    val, err, *rest = integrate.quad(lambda w: mech.ratio_integrand(w), y, x,
                                     epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=400, full_output=1)
    if err > max(cfg.abs_tol, cfg.rel_tol * abs(val)) * 10:
        raise ToleranceNotMet(f"Q({y};{x}) error estimate {err:.3g} above tolerance")
    return float(val)


def j_func(mech, y, x, cfg=DEFAULT_CFG) -> float:
    return math.exp(q_func(mech, y, x, cfg))


def _anchored(which, mech, y, x):
    _check_mech(mech)
    _interior(y, x)
    if y == x:
        return 0.0
    return functional_cache(mech, float(y)).at(which, float(x))


def s_func(mech, y, x) -> float:
    """S(y;x) = int_y^x du / J(y;u) (signed: negative for x < y)."""
    return _anchored("S", mech, y, x)


def r_func(mech, y, x) -> float:
    return _anchored("R", mech, y, x)


def e_func(mech, y, x) -> float:
    return _anchored("E", mech, y, x)


def i_func(mech, y, x) -> float:
    return _anchored("I", mech, y, x)


# ---------------------------------------------------------------------------
# limits at the boundaries

def _grid(theta, boundary, kmax):
    ks = [k for k in range(1, kmax + 1) if (boundary == 1 and 1 - 2.0 ** -k > theta)
          or (boundary == 0 and 2.0 ** -k < theta)]
    if boundary == 1:
        t = np.array([math.log(2.0 ** k - 1.0) for k in ks])  # logit(1 - 2^-k)
    else:
        t = np.array([-math.log(2.0 ** k - 1.0) for k in ks])
    return ks, t


def _extrapolate(ks, vals, cfg: QuadratureConfig) -> ExtendedReal:
    """Decide finiteness of lim V_k from the refinement sequence."""
    diag = [{"k": int(k), "value": float(v)} for k, v in zip(ks, vals)]
    vals = np.asarray(vals, dtype=float)
    if len(vals) < 9:
        return ExtendedReal(Kind.Inconclusive, diagnostics=diag, basis="too few refinements")
    if not np.all(np.isfinite(vals)):
        last = vals[~np.isfinite(vals)][0]
        kind = Kind.PlusInf if last > 0 else Kind.MinusInf
        return ExtendedReal(kind, diagnostics=diag, basis="integrand overflow")
    deltas = np.diff(vals)
    tail = vals[-8:]
    mono = np.all(np.diff(tail) > 0) or np.all(np.diff(tail) < 0)
    if abs(vals[-1]) > cfg.divergence_threshold and mono:
        kind = Kind.PlusInf if vals[-1] > 0 else Kind.MinusInf
        return ExtendedReal(kind, diagnostics=diag, basis="exceeds divergence threshold")
    scale = max(np.max(np.abs(vals)), 1.0)
    noise = 1e3 * np.finfo(float).eps * scale
    # converged to the noise floor
    small = np.nonzero(np.abs(deltas) < noise)[0]
    if len(small) >= 3 and small[2] >= 2:
        k = small[0]
        v = vals[k + 1]
        err = float(np.max(np.abs(deltas[k:])) + noise)
        kind = Kind.Finite if err < max(cfg.rel_tol * abs(v), cfg.abs_tol) or err < 10 * noise else Kind.Inconclusive
        return ExtendedReal(kind, float(v), err, diag, "increments reached the rounding floor")
    d8 = deltas[-8:]
    if not (np.all(d8 > 0) or np.all(d8 < 0)):
        if np.max(np.abs(d8)) < max(cfg.abs_tol, cfg.rel_tol * abs(vals[-1])):
            return ExtendedReal(Kind.Finite, float(vals[-1]), float(np.max(np.abs(d8))), diag,
                                "increments below tolerance")
        return ExtendedReal(Kind.Inconclusive, diagnostics=diag, basis="increments change sign")
    kk = np.arange(len(d8), dtype=float)
    slope, icpt = np.polyfit(kk, np.log2(np.abs(d8)), 1)
    beta = -slope  # |delta_k| ~ 2^(-beta k), i.e. eps_k^beta
    sign = 1.0 if d8[-1] > 0 else -1.0
    if beta <= 0.02:
        kind = Kind.PlusInf if sign > 0 else Kind.MinusInf
        return ExtendedReal(kind, diagnostics=diag + [{"tail_exponent": float(beta)}],
                            basis="increments do not shrink (tail exponent <= 0)")
    if beta < 0.05:
        return ExtendedReal(Kind.Inconclusive, diagnostics=diag + [{"tail_exponent": float(beta)}],
                            basis="tail exponent too small to decide")

    def geo(v_last, d_last, dd):
        r = dd[-1] / dd[-2]
        if not 0 < r < 1:
            r = 2.0 ** -beta
        return v_last + d_last * r / (1 - r)

    est1 = geo(vals[-1], deltas[-1], deltas[-2:])
    est0 = geo(vals[-2], deltas[-2], deltas[-3:-1])
    err = abs(est1 - est0) + 1e-3 * abs(est1 - vals[-1]) + noise
    ok = err < max(cfg.rel_tol * abs(est1), cfg.abs_tol) * 1e3
    return ExtendedReal(Kind.Finite if ok else Kind.Inconclusive, float(est1), float(err),
                        diag + [{"tail_exponent": float(beta)}],
                        "geometric extrapolation of refinement increments")


def _second_moment_finite(law) -> bool:
    return (not law.has_tail) or law.tail_alpha > 2.0


def _shortcut(which, mech: Mechanism, boundary, q1: ExtendedReal | None):
    """Analytic verdicts that hold for this mechanism, or None."""
    vs = mech.varsigma
    if boundary == 1:
        if which == "Q" and vs < 0 and log_moment_holds(mech):
            return Kind.Finite, "varsigma < 0 with the log-moment condition: Q(theta;1) finite"
        if which == "Q" and vs == 0 and mech.d == 0 and mech.rho > 0 and _second_moment_finite(mech.bb):
            return Kind.MinusInf, "varsigma = 0, d = 0: Q(theta;1) = -infinity"
        if which == "E" and vs == 0 and mech.rho > 0 and mech.pi.finite_mean and _second_moment_finite(mech.bb):
            return Kind.PlusInf, "varsigma = 0 with finite offspring mean: E(theta;1) = infinity"
        if which in ("E", "R") and q1 is not None and q1.kind == Kind.Finite:
            return Kind.PlusInf, "Q(theta;1) finite implies E(theta;1) = R(theta;1) = infinity"
        if which == "I" and vs < 0:
            return Kind.Finite, "varsigma < 0: I(theta;1) finite"
    else:
        if which == "R" and mech.d > 0:
            return Kind.Finite, "d > 0: R(theta;0) finite"
        if which == "S" and mech.d == 0:
            return Kind.Finite, "d = 0: S(theta;0) finite"
    return None


def limit_at(which: str, mech: Mechanism, theta: float = 0.5, boundary: int = 1,
             cfg: QuadratureConfig = DEFAULT_CFG) -> ExtendedReal:
    """Limit of functional `which` (Q, J, S, R, E or I) anchored at theta as x -> boundary."""
    if which not in ("Q", "J", "S", "R", "E", "I"):
        raise ValueError(f"unknown functional {which!r}")
    if boundary not in (0, 1):
        raise ValueError("boundary must be 0 or 1")
    if which == "J":
        q = limit_at("Q", mech, theta, boundary, cfg)
        if q.kind == Kind.Finite:
            return ExtendedReal(Kind.Finite, math.exp(q.value), math.exp(q.value) * q.error_bound,
                                q.diagnostics, q.basis)
        if q.kind == Kind.MinusInf:
            return ExtendedReal(Kind.Finite, 0.0, 0.0, q.diagnostics, q.basis)
        return ExtendedReal(q.kind, diagnostics=q.diagnostics, basis=q.basis)
    cache = functional_cache(mech, float(theta))
    ks, t = _grid(theta, boundary, cfg.max_refinements)
    vals = cache.at_t(which, t)
    numeric = _extrapolate(ks, vals, cfg)
    q1 = None
    if boundary == 1 and which in ("E", "R"):
        q1 = limit_at("Q", mech, theta, 1, cfg)
    sc = _shortcut(which, mech, boundary, q1)
    if sc is None:
        return numeric
    kind, basis = sc
    if kind == Kind.Finite:
        value = numeric.value if numeric.kind == Kind.Finite else float(vals[-1])
        err = numeric.error_bound if numeric.kind == Kind.Finite else float(abs(vals[-1] - vals[-2]))
        return ExtendedReal(Kind.Finite, value, err, numeric.diagnostics, "analytic: " + basis)
    return ExtendedReal(kind, diagnostics=numeric.diagnostics, basis="analytic: " + basis)


# ---------------------------------------------------------------------------
# time-change map

def _point_mass_one(mech):
    law = mech.bb
    return (not law.has_tail) and len(law.weights) == 1


def upsilon(mech: Mechanism, u: float) -> float:
    """Upsilon(u) = int_0^u dw / Phi(w); +inf at u = 1."""
    if not 0 <= u <= 1:
        raise DomainError("Upsilon is defined on [0, 1]")
    if u == 1:
        return math.inf
    if u == 0:
        return 0.0
    c, b = mech.c, mech.b
    if b == 0:
        return -math.log1p(-u) / c
    if _point_mass_one(mech):
        if abs(b - c) < 1e-15:
            return u / (c * (1 - u))
        return math.log((c - b * u) / (c * (1 - u))) / (c - b)
    val, _ = integrate.quad(lambda w: 1.0 / mech.phi(w), 0.0, u, epsabs=1e-14, epsrel=1e-12, limit=400)
    return float(val)


def upsilon_inv(mech: Mechanism, w: float) -> float:
    if w < 0:
        raise DomainError("Upsilon inverse needs w >= 0")
    if w == 0:
        return 0.0
    if math.isinf(w):
        return 1.0
    c, b = mech.c, mech.b
    if b == 0:
        return -math.expm1(-c * w)
    if _point_mass_one(mech):
        if abs(b - c) < 1e-15:
            return c * w / (1 + c * w)
        e = math.exp(-(c - b) * w)
        return c * (1 - e) / (c - b * e)
    # monotone root: Upsilon is increasing with derivative 1/Phi
    hi = 0.5
    while upsilon(mech, hi) < w:
        hi = 1 - (1 - hi) / 2
        if 1 - hi < 1e-15:
            return hi
    return optimize.brentq(lambda x: upsilon(mech, x) - w, 0.0, hi, xtol=1e-14, rtol=1e-13)


# ---------------------------------------------------------------------------
# Laplace transform of hitting times for the immigration chain X

def _gl_logit_integral(f, t_lo=-T_MAX, t_hi=T_MAX, panel=0.5, n=24):
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.arange(t_lo, t_hi + 1e-12, panel)
    a, b = edges[:-1, None], edges[1:, None]
    tt = (0.5 * (a + b) + 0.5 * (b - a) * x[None, :]).ravel()
    vals = f(tt).reshape(len(edges) - 1, n)
    return float(np.sum(vals * w[None, :] * 0.5 * (b - a)))


def sigma_a_laplace(mech: Mechanism, z: int, a: int, mu: float, theta: float = 0.5) -> float:
    """E_z[exp(-mu sigma_a)] for the chain X, d > 0 and varsigma < 0."""
    if not (mech.d > 0 and mech.varsigma < 0):
        raise PreconditionViolated("sigma_a transform needs d > 0 and varsigma < 0")
    if not (z >= a >= 0) or mu <= 0:
        raise PreconditionViolated("need z >= a >= 0 and mu > 0")
    if z == a:
        return 1.0
    cache = functional_cache(mech, float(theta))

    def f(k):
        def g(t):
            u, v = expit_pair(t)
            expo = cache.Q_t(t) - mu * cache.Y_t(t)
            return np.exp(k * np.log(u) + expo) / mech.interaction_factor(u, v)
        return _gl_logit_integral(g)

    return f(z) / f(a)
