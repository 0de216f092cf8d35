"""Long-term behaviour of a mechanism, decided by integral tests.

Every verdict names the result it rests on and, when numerics could not
decide, carries the refinement diagnostics that left it open.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionEViolated, PreconditionViolated, RegimeError
from .functionals import (DEFAULT_CFG, ExtendedReal, Kind, QuadratureConfig, _gl_logit_integral,
                          expit_pair, functional_cache, limit_at, logit, T_MAX)
from .mechanisms import Mechanism, OffspringLaw, regime

__all__ = [
    "Answer",
    "Ternary",
    "ExtinctionLaw",
    "StationaryLaw",
    "DualLongRun",
    "BehaviorReport",
    "classify_explosion",
    "assumption_e",
    "extinction_law",
    "stationary_Z",
    "cdi_check",
    "classify_X",
    "dual_boundaries",
    "dual_longrun",
    "classify",
]


class Answer(str, Enum):
    Yes = "Yes"
    No = "No"
    Unknown = "Unknown"


@dataclass
class Ternary:
    value: Answer
    basis: str
    diagnostics: list = field(default_factory=list)

    @classmethod
    def yes(cls, basis):
        return cls(Answer.Yes, basis)

    @classmethod
    def no(cls, basis):
        return cls(Answer.No, basis)

    @classmethod
    def unknown(cls, basis, *evidence: ExtendedReal):
        diag = [{"kind": e.kind.value, "basis": e.basis, "refinements": e.diagnostics} for e in evidence]
        return cls(Answer.Unknown, basis, diag)

    def to_dict(self, explain=False):
        out = {"value": self.value.value, "basis": self.basis}
        if explain and self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


def _check(mech: Mechanism):
    if mech.varsigma > 0:
        raise RegimeError("supercritical cooperative regime is out of scope")
    if mech.c <= 0:
        raise PreconditionViolated("hypothesis (H) needs c > 0")


def _lim(which, mech, theta, boundary, cfg):
    return limit_at(which, mech, theta, boundary, cfg)


# ---------------------------------------------------------------------------
# explosion

def classify_explosion(mech: Mechanism, theta=0.5, cfg: QuadratureConfig = DEFAULT_CFG):
    """(conservative, explodes almost surely) as Ternary values."""
    _check(mech)
    d, c, rho, b = mech.d, mech.c, mech.rho, mech.b
    if rho == 0:
        return (Ternary.yes("no natural births: conservative"),
                Ternary.no("no natural births: conservative"))

    q1 = _lim("Q", mech, theta, 1, cfg)
    if q1.kind == Kind.Finite and mech.varsigma < 0:
        cons = Ternary.yes("Q(theta;1) finite with varsigma < 0: conservative")
        return cons, Ternary.no(cons.basis)
    if mech.varsigma == 0:
        q0 = _lim("Q", mech.variant(d=0.0), theta, 1, cfg)
        if q0.kind == Kind.Finite:
            cons = Ternary.yes("varsigma = 0 with the d = 0 version of Q(theta;1) finite: conservative")
            return cons, Ternary.no(cons.basis)

    if b == 0:
        e = _lim("E", mech.variant(cooperation=False), theta, 1, cfg)
        if c >= d:
            if e.kind == Kind.PlusInf:
                cons = Ternary.yes("b = 0, c >= d: E(theta;1) infinite, so conservative")
                return cons, Ternary.no(cons.basis)
            if e.kind == Kind.Finite:
                cons = Ternary.no("b = 0, c >= d: E(theta;1) finite, so explosion with positive probability")
                if d == 0:
                    return cons, Ternary.yes("b = 0, d = 0 and E(theta;1) finite: explodes almost surely")
                return cons, Ternary.no("b = 0, d > 0 and E(theta;1) finite: explosion is not almost sure")
            unk = Ternary.unknown("b = 0, c >= d: E(theta;1) undecided", e)
            return unk, unk
        # c < d: one-sided tests
        e_dd = _lim("E", mech.variant(c=d, cooperation=False), theta, 1, cfg)
        if e_dd.kind == Kind.Finite:
            return (Ternary.no("b = 0, c < d: E with competition raised to d is finite, explosion possible"),
                    Ternary.no("b = 0, d > 0 and E(theta;1) finite: explosion is not almost sure"))
        if e.kind == Kind.PlusInf:
            cons = Ternary.yes("b = 0, c < d: E(theta;1) infinite, so conservative")
            return cons, Ternary.no(cons.basis)
        unk = Ternary.unknown("b = 0, c < d: both one-sided E tests inconclusive", e_dd, e)
        return unk, unk

    e0 = _lim("E", mech.variant(d=0.0), theta, 1, cfg)
    if d == 0:
        if e0.kind == Kind.PlusInf:
            cons = Ternary.yes("b > 0, d = 0: E(theta;1) infinite, so conservative")
            return cons, Ternary.no(cons.basis)
        if e0.kind == Kind.Finite:
            return (Ternary.no("b > 0, d = 0: E(theta;1) finite, explosion with positive probability"),
                    Ternary.yes("d = 0 and E(theta;1) finite: explodes almost surely"))
        unk = Ternary.unknown("b > 0, d = 0: E(theta;1) undecided", e0)
        return unk, unk
    # b > 0, d > 0: sufficient conditions only
    if c >= d:
        ex = _lim("E", mech.variant(d=c, cooperation=False), theta, 1, cfg)
        ex_basis = "b > 0, c >= d > 0: E with d raised to c and b removed is finite, explosion possible"
    else:
        ex = _lim("E", mech.variant(c=d, cooperation=False), theta, 1, cfg)
        ex_basis = "b > 0, c < d: E with c raised to d and b removed is finite, explosion possible"
    if ex.kind == Kind.Finite:
        return Ternary.no(ex_basis), Ternary.unknown("d > 0: no almost-sure explosion test", ex)
    if e0.kind == Kind.PlusInf:
        cons = Ternary.yes("b > 0, d > 0: E with d = 0 infinite, so conservative")
        return cons, Ternary.no(cons.basis)
    unk = Ternary.unknown("b > 0, d > 0: the sufficient tests leave a gap", ex, e0)
    return unk, unk


def assumption_e(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG) -> ExtendedReal:
    """The E-functional whose divergence is assumption (E)."""
    if mech.b == 0:
        return _lim("E", mech.variant(cooperation=False), theta, 1, cfg)
    return _lim("E", mech.variant(d=0.0), theta, 1, cfg)


def _require_e(mech, theta, cfg):
    e = assumption_e(mech, theta, cfg)
    if e.kind == Kind.Finite:
        raise AssumptionEViolated("the E-functional of assumption (E) is finite")
    return e


# ---------------------------------------------------------------------------
# extinction

class ExtinctionKind(str, Enum):
    AlmostSure = "AlmostSure"
    Probability = "Probability"
    Never = "Never"
    Unknown = "Unknown"


@dataclass
class ExtinctionLaw:
    kind: ExtinctionKind
    basis: str
    p: Optional[Callable[[int], float]] = None
    diagnostics: list = field(default_factory=list)

    def to_dict(self, explain=False, zs=(1, 2, 3, 5, 10)):
        out = {"kind": self.kind.value, "basis": self.basis}
        if self.p is not None:
            out["p"] = {str(z): self.p(z) for z in zs}
        if explain and self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


def _extinction_probability(mech, theta, cfg, r1: ExtendedReal):
    """z -> 1 - int (1 - u^z) J(theta;u)/(u Phi(u)) du / [R(theta;1) - R(theta;0)]."""
    cache = functional_cache(mech, float(theta))
    r0 = _lim("R", mech, theta, 0, cfg)
    denom = r1.value - r0.value
    tail = r1.value - float(cache.R_t(np.array([40.0]))[0])  # beyond the cached range u^z ~ 1

    def p(z: int) -> float:
        if z <= 0:
            return 1.0

        def g(t):
            u, v = expit_pair(t)
            return -np.expm1(z * np.log(u)) * np.exp(cache.Q_t(t)) / mech.interaction_factor(u, v)

        surv = _gl_logit_integral(g) + tail
        return float(min(1.0, max(0.0, 1.0 - surv / denom)))

    return p


def extinction_law(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG) -> ExtinctionLaw:
    _check(mech)
    if mech.d == 0:
        return ExtinctionLaw(ExtinctionKind.Never, "d = 0: state 0 cannot be reached")
    if mech.rho == 0:
        return ExtinctionLaw(ExtinctionKind.AlmostSure, "no natural births and d > 0: absorbed at 0")
    e = _require_e(mech, theta, cfg)
    if e.kind == Kind.Inconclusive:
        return ExtinctionLaw(ExtinctionKind.Unknown, "assumption (E) undecided",
                             diagnostics=[e.to_dict(True)])
    s1 = _lim("S", mech, theta, 1, cfg)
    if s1.kind == Kind.Finite:
        return ExtinctionLaw(ExtinctionKind.AlmostSure, "S(theta;1) finite: extinction almost surely")
    if s1.kind == Kind.Inconclusive:
        return ExtinctionLaw(ExtinctionKind.Unknown, "S(theta;1) undecided", diagnostics=[s1.to_dict(True)])
    r1 = _lim("R", mech, theta, 1, cfg)
    if r1.kind == Kind.Finite:
        return ExtinctionLaw(ExtinctionKind.Probability,
                             "S(theta;1) infinite, R(theta;1) finite: extinction with probability p(z) < 1",
                             _extinction_probability(mech, theta, cfg, r1))
    if r1.kind == Kind.PlusInf:
        return ExtinctionLaw(ExtinctionKind.Never, "S(theta;1) and R(theta;1) infinite: extinction probability 0")
    return ExtinctionLaw(ExtinctionKind.Unknown, "R(theta;1) undecided", diagnostics=[r1.to_dict(True)])


# ---------------------------------------------------------------------------
# stationary law of Z (d = 0)

_BAR_TERMS = 96  # |u| <= 0.5 on the sampling circle: 0.5^96 is far below rounding


def _bar_poly(law: OffspringLaw, n=_BAR_TERMS) -> np.ndarray:
    """Coefficients (index i = power of u) of sum_i bar w_i u^i, bar w_i = sum_{j>=i} w_j, truncated at n."""
    bars = np.array([law.tail_sum(i) for i in range(1, n + 1)])
    coef = np.concatenate(([0.0], np.maximum(bars, 0.0)))
    last = np.nonzero(coef)[0]
    # finite laws: keep only the nonzero head so the ray quadrature stays cheap
    return coef[: max(int(last[-1]) + 1, 2)] if len(last) else coef[:2]


class StationaryKind(str, Enum):
    Distribution = "Distribution"
    PointMassOne = "PointMassOne"
    DivergesToInfinity = "DivergesToInfinity"
    Unknown = "Unknown"


@dataclass
class StationaryLaw:
    kind: StationaryKind
    basis: str
    pgf: Optional[Callable] = None
    diagnostics: list = field(default_factory=list)
    radius: float = 0.5
    n_points: int = 4096

    def coefficients(self, kmax: int = 20) -> np.ndarray:
        """P(Z_inf = k), k = 0..kmax, from the pgf sampled on a circle."""
        if self.kind == StationaryKind.PointMassOne:
            out = np.zeros(kmax + 1)
            if kmax >= 1:
                out[1] = 1.0
            return out
        if self.pgf is None:
            raise PreconditionViolated("no stationary distribution to expand")
        n = self.n_points
        zs = self.radius * np.exp(2j * np.pi * np.arange(n) / n)
        vals = self.pgf(zs)
        coef = np.fft.fft(vals) / n
        k = np.arange(kmax + 1)
        return (coef[: kmax + 1] / self.radius ** k).real

    @property
    def aliasing_bound(self) -> float:
        return self.radius ** self.n_points

    def to_dict(self, explain=False):
        out = {"kind": self.kind.value, "basis": self.basis}
        if self.kind in (StationaryKind.Distribution, StationaryKind.PointMassOne):
            out["masses"] = [float(x) for x in self.coefficients(10)]
        if explain and self.diagnostics:
            out["diagnostics"] = self.diagnostics
        return out


def _stationary_pgf(mech: Mechanism, theta, cfg, s1: ExtendedReal):
    cache = functional_cache(mech, float(theta))
    s0 = _lim("S", mech, theta, 0, cfg)
    q0 = _lim("Q", mech, theta, 0, cfg)
    j_theta0 = math.exp(q0.value)
    total = j_theta0 * (s1.value - s0.value)  # S(0;1)
    pbar = _bar_poly(mech.pi)[1:]  # pi bar(x)/x coefficients
    bbar = _bar_poly(mech.bb)
    c = mech.c
    xg, wg = np.polynomial.legendre.leggauss(40)
    sg = 0.5 * (xg + 1.0)
    wg = 0.5 * wg

    def q_from_zero(x):
        # Q(0;x) along the segment [0, x]; the integrand -pibar(w)/(w (c - bbar(w))) is analytic there
        w = x[..., None] * sg
        num = np.polynomial.polynomial.polyval(w, pbar)
        den = c - np.polynomial.polynomial.polyval(w, bbar)
        return -x * np.sum(wg * num / den, axis=-1)

    def s_from_zero_small(x):
        w = x[:, None] * sg[None, :]
        vals = np.exp(-q_from_zero(w))
        return x * np.sum(wg * vals, axis=-1)

    def pgf(u):
        u = np.asarray(u)
        scalar = u.ndim == 0
        u = np.atleast_1d(u)
        out = np.empty(u.shape, dtype=complex if np.iscomplexobj(u) else float)
        small = np.abs(u) <= 0.5 + 1e-12
        if np.any(small):
            out[small] = s_from_zero_small(u[small].astype(complex)).real if not np.iscomplexobj(u) \
                else s_from_zero_small(u[small])
            out[small] = out[small] / total
        big = ~small
        if np.any(big):
            ub = u[big].real
            vals = np.empty(ub.shape)
            one = ub >= 1.0
            vals[one] = 1.0
            inner = ~one
            if np.any(inner):
                vals[inner] = (cache.at("S", ub[inner]) - s0.value) / (s1.value - s0.value)
            out[big] = vals
        return out[0] if scalar else out

    return pgf


def stationary_Z(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG) -> StationaryLaw:
    _check(mech)
    if mech.d != 0:
        raise PreconditionViolated("the stationary law of Z is defined for d = 0")
    if mech.rho == 0:
        return StationaryLaw(StationaryKind.PointMassOne, "no natural births: Z_inf = 1")
    e = _require_e(mech, theta, cfg)
    if e.kind == Kind.Inconclusive:
        return StationaryLaw(StationaryKind.Unknown, "assumption (E) undecided", diagnostics=[e.to_dict(True)])
    s1 = _lim("S", mech, theta, 1, cfg)
    if s1.kind == Kind.Finite:
        return StationaryLaw(StationaryKind.Distribution, "S(theta;1) finite: stationary pgf S(0;u)/S(0;1)",
                             _stationary_pgf(mech, theta, cfg, s1))
    if s1.kind == Kind.PlusInf:
        return StationaryLaw(StationaryKind.DivergesToInfinity, "S(theta;1) infinite: Z_t -> infinity")
    return StationaryLaw(StationaryKind.Unknown, "S(theta;1) undecided", diagnostics=[s1.to_dict(True)])


# ---------------------------------------------------------------------------
# coming down from infinity, the chain X, the dual diffusion

def cdi_check(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG) -> Ternary:
    _check(mech)
    i1 = _lim("I", mech, theta, 1, cfg)
    if i1.kind == Kind.Finite:
        return Ternary.yes("I(theta;1) finite: comes down from infinity")
    return Ternary.unknown("I(theta;1) not shown finite; the test is one-directional", i1)


def classify_X(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG):
    """(recurrent, has a stationary distribution) for the immigration chain X."""
    _check(mech)
    d, c, rho, b = mech.d, mech.c, mech.rho, mech.b
    if d == 0 and rho > 0:
        r1 = _lim("R", mech, theta, 1, cfg)
        rec = {Kind.PlusInf: Ternary.yes("d = 0: R(theta;1) infinite, recurrent on N"),
               Kind.Finite: Ternary.no("d = 0: R(theta;1) finite, transient on N")}.get(
            r1.kind, Ternary.unknown("d = 0: R(theta;1) undecided", r1))
    elif d == c and rho > 0 and b == 0:
        r1 = _lim("R", mech, theta, 1, cfg)
        rec = {Kind.PlusInf: Ternary.yes("d = c, b = 0: R(theta;1) infinite, recurrent on N_0"),
               Kind.Finite: Ternary.no("d = c, b = 0: R(theta;1) finite, transient on N_0")}.get(
            r1.kind, Ternary.unknown("d = c, b = 0: R(theta;1) undecided", r1))
    elif d == 0 and rho == 0:
        rec = Ternary.no("d = rho = 0: transient on N without state 1")
    elif c >= d > 0 and rho == 0:
        rec = Ternary.no("c >= d > 0, rho = 0: transient on N")
    else:
        rec = Ternary(Answer.Unknown, "state classification of X not covered for these parameters")

    if d == 0 or (d == c and b == 0):
        q1 = _lim("Q", mech, theta, 1, cfg)
        if q1.kind == Kind.Finite:
            stat = Ternary.yes("Q(theta;1) finite: X has a stationary distribution")
        elif q1.infinite:
            stat = Ternary.no("Q(theta;1) infinite: no stationary distribution for X")
        else:
            stat = Ternary.unknown("Q(theta;1) undecided", q1)
    else:
        stat = Ternary(Answer.Unknown, "stationarity of X not covered for these parameters")
    return rec, stat


REFLECTING = "Regular(Reflecting)"
UNREFINED = "Regular(Unrefined)"


def dual_boundaries(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG):
    """Feller class of the boundaries 0 and 1 for the dual diffusion."""
    _check(mech)
    d, c = mech.d, mech.c
    if d > c:
        b0 = "Entrance"
    elif 0 < d < c:
        b0 = REFLECTING
    elif d == 0:
        b0 = "Exit"
    else:
        s0 = _lim("S", mech, theta, 0, cfg)
        b0 = {Kind.MinusInf: "Entrance", Kind.Finite: REFLECTING}.get(s0.kind, "Unknown")

    e1 = _lim("E", mech, theta, 1, cfg)
    if mech.varsigma < 0:
        b1 = {Kind.PlusInf: "Exit", Kind.Finite: UNREFINED}.get(e1.kind, "Unknown")
    else:
        i1 = _lim("I", mech, theta, 1, cfg)
        table = {(True, True): "Exit", (True, False): UNREFINED,
                 (False, True): "Natural", (False, False): "Entrance"}
        if Kind.Inconclusive in (i1.kind, e1.kind):
            b1 = "Unknown"
        else:
            b1 = table[(i1.kind == Kind.Finite, e1.kind == Kind.PlusInf)]
    return b0, b1


class LongRunKind(str, Enum):
    AbsorbedAtZeroOrOne = "AbsorbedAtZeroOrOne"
    AbsorbedAtZero = "AbsorbedAtZero"
    TransientToOne = "TransientToOne"
    PositiveRecurrent = "PositiveRecurrent"
    NullRecurrent = "NullRecurrent"
    Unknown = "Unknown"


@dataclass
class DualLongRun:
    kind: LongRunKind
    basis: str
    prob_one: Optional[Callable[[float], float]] = None
    cdf: Optional[Callable[[float], float]] = None

    def to_dict(self, explain=False):
        out = {"kind": self.kind.value, "basis": self.basis}
        if self.prob_one is not None:
            out["P(U_inf=1 | u)"] = {str(u): self.prob_one(u) for u in (0.25, 0.5, 0.75)}
        if self.cdf is not None:
            out["nu_inf([0,x])"] = {str(x): self.cdf(x) for x in (0.25, 0.5, 0.75)}
        return out


def dual_longrun(mech: Mechanism, theta=0.5, cfg=DEFAULT_CFG) -> DualLongRun:
    _check(mech)
    cache = functional_cache(mech, float(theta))
    if mech.d == 0:
        if mech.rho == 0:
            return DualLongRun(LongRunKind.AbsorbedAtZeroOrOne, "rho = 0: P(U_inf = 1) = u", lambda u: float(u))
        s1 = _lim("S", mech, theta, 1, cfg)
        if s1.kind == Kind.Finite:
            s0 = _lim("S", mech, theta, 0, cfg)

            def prob_one(u):
                if u <= 0:
                    return 0.0
                if u >= 1:
                    return 1.0
                t = min(max(float(logit(u)), -T_MAX), T_MAX)
                return float((cache.at_t("S", np.array([t]))[0] - s0.value) / (s1.value - s0.value))

            return DualLongRun(LongRunKind.AbsorbedAtZeroOrOne, "S(theta;1) finite: U_inf in {0, 1}", prob_one)
        if s1.kind == Kind.PlusInf:
            return DualLongRun(LongRunKind.AbsorbedAtZero, "S(theta;1) infinite: U_inf = 0")
        return DualLongRun(LongRunKind.Unknown, "S(theta;1) undecided")
    s1 = _lim("S", mech, theta, 1, cfg)
    if s1.kind == Kind.Finite:
        return DualLongRun(LongRunKind.TransientToOne, "d > 0, S(theta;1) finite: U_t -> 1")
    if s1.kind != Kind.PlusInf:
        return DualLongRun(LongRunKind.Unknown, "S(theta;1) undecided")
    r1 = _lim("R", mech, theta, 1, cfg)
    if r1.kind == Kind.Finite:
        r0 = _lim("R", mech, theta, 0, cfg)

        def cdf(x):
            if x <= 0:
                return 0.0
            if x >= 1:
                return 1.0
            t = min(max(float(logit(x)), -T_MAX), T_MAX)  # beyond the cached range the ratio is at its limit
            return float((cache.at_t("R", np.array([t]))[0] - r0.value) / (r1.value - r0.value))

        return DualLongRun(LongRunKind.PositiveRecurrent, "R(theta;1) finite: stationary law nu_inf", cdf=cdf)
    if r1.kind == Kind.PlusInf:
        return DualLongRun(LongRunKind.NullRecurrent, "R(theta;1) infinite: null recurrent")
    return DualLongRun(LongRunKind.Unknown, "R(theta;1) undecided")


# ---------------------------------------------------------------------------
# full report

@dataclass
class BehaviorReport:
    mechanism: Mechanism
    regime: str
    conservative: Ternary
    explodes_as: Ternary
    extinction: ExtinctionLaw
    absorbed_at_one: Ternary
    stationary_Z: Optional[StationaryLaw]
    cdi: Ternary
    X_recurrent: Ternary
    X_stationary: Ternary
    dual_boundary_0: str
    dual_boundary_1: str
    dual_longrun: DualLongRun

    def to_dict(self, explain=False) -> dict:
        return {
            "mechanism": self.mechanism.to_dict(),
            "regime": self.regime,
            "conservative": self.conservative.to_dict(explain),
            "explodes_as": self.explodes_as.to_dict(explain),
            "extinction": self.extinction.to_dict(explain),
            "absorbed_at_one": self.absorbed_at_one.to_dict(explain),
            "stationary_Z": None if self.stationary_Z is None else self.stationary_Z.to_dict(explain),
            "cdi": self.cdi.to_dict(explain),
            "X_recurrent": self.X_recurrent.to_dict(explain),
            "X_stationary": self.X_stationary.to_dict(explain),
            "dual_boundary_0": self.dual_boundary_0,
            "dual_boundary_1": self.dual_boundary_1,
            "dual_longrun": self.dual_longrun.to_dict(explain),
        }

    def to_json(self, explain=False) -> str:
        return json.dumps(self.to_dict(explain), indent=2)


def classify(mech: Mechanism, theta=0.5, cfg: QuadratureConfig = DEFAULT_CFG) -> BehaviorReport:
    _check(mech)
    cons, explodes = classify_explosion(mech, theta, cfg)
    try:
        ext = extinction_law(mech, theta, cfg)
    except AssumptionEViolated as exc:
        ext = ExtinctionLaw(ExtinctionKind.Unknown, f"not covered: {exc}")
    if mech.rho == 0:
        one = Ternary.yes("rho = 0, d = 0: absorbed at 1") if mech.d == 0 else \
            Ternary.no("rho = 0, d > 0: absorbed at 0")
    else:
        one = Ternary.no("rho > 0: state 1 is not absorbing")
    stat = None
    if mech.d == 0:
        try:
            stat = stationary_Z(mech, theta, cfg)
        except AssumptionEViolated as exc:
            stat = StationaryLaw(StationaryKind.Unknown, f"not covered: {exc}")
    rec, xstat = classify_X(mech, theta, cfg)
    b0, b1 = dual_boundaries(mech, theta, cfg)
    e = assumption_e(mech, theta, cfg) if mech.rho > 0 else None
    if e is not None and e.kind == Kind.Finite:
        lr = DualLongRun(LongRunKind.Unknown, "assumption (E) fails")
    else:
        lr = dual_longrun(mech, theta, cfg)
    return BehaviorReport(mech, regime(mech).value, cons, explodes, ext, one, stat,
                          cdi_check(mech, theta, cfg), rec, xstat, b0, b1, lr)
