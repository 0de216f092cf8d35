"""Branching and interaction mechanisms of a BPI process.

A mechanism is the tuple (d, c, pi, b): natural death rate d, competition
rate c, branching offspring rates pi_k and cooperative offspring rates b_k.
Everything downstream (functionals, simulators, dual diffusion) reads the
model through this module so that Psi and Phi have a single definition.

Offspring laws are finite sequences with an optional power-law tail
``w_i = A * i**-(1 + alpha)`` for ``i > K``. Tail series are evaluated from
the polylogarithm expansion around u = 1, which keeps the factored forms
accurate right up to the boundary.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import special

from .errors import DegenerateDenominator

__all__ = [
    "OffspringLaw",
    "Mechanism",
    "Regime",
    "psi",
    "phi",
    "ratio_integrand",
    "regime",
    "log_moment_holds",
    "lb_mechanism",
    "kingman_mechanism",
    "sibuya_mechanism",
    "named_mechanism",
]

CROSSOVER = 0.5
VARSIGMA_TOL = 1e-12
_SERIES_TERMS = 40
_DIRECT_TERMS = 64


def _zeta_minus_polylog(s: float, mu: np.ndarray) -> np.ndarray:
    """zeta(s) - Li_s(exp(mu)) for mu <= 0 with |mu| < 2*pi.

    Uses the expansion of Li_s around 1; the constant term zeta(s) cancels
    analytically so there is no cancellation as mu -> 0.
    """
    mu = np.asarray(mu, dtype=float)
    x = -mu
    out = np.zeros_like(mu)
    n = int(round(s))
    is_int = abs(s - n) < 1e-12
    term = np.ones_like(mu)
    for k in range(1, _SERIES_TERMS):
        term = term * mu / k
        if is_int and k == n - 1:
            continue
        out -= special.zeta(s - k) * term
    pos = x > 0
    if is_int:
        harmonic = sum(1.0 / j for j in range(1, n))
        lead = np.zeros_like(mu)
        lead[pos] = mu[pos] ** (n - 1) / math.factorial(n - 1) * (harmonic - np.log(x[pos]))
        out -= lead
    else:
        lead = np.zeros_like(mu)
        lead[pos] = special.gamma(1.0 - s) * x[pos] ** (s - 1.0)
        out -= lead
    return out


def _split(u, v=None):
    """Return (u, v=1-u, was_scalar) as float arrays."""
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if v is None:
        v = 1.0 - u
    else:
        v = np.atleast_1d(np.asarray(v, dtype=float))
    return u, v, scalar


def _out(x, scalar):
    return float(x[0]) if scalar else x


def _times_gap(v, factor):
    """(1-u) * factor with the limit 0 at u = 1; a heavy tail makes factor(1) infinite."""
    with np.errstate(invalid="ignore"):
        return np.where(v > 0, v * factor, 0.0)


def _one_minus_pow(j: np.ndarray, v: np.ndarray) -> np.ndarray:
    """1 - (1-v)**j, accurate for small v. Shape (len(v), len(j))."""
    lu = np.log1p(-np.minimum(v, 1.0))[:, None]
    return -np.expm1(j[None, :] * lu)


@dataclass(frozen=True)
class OffspringLaw:
    """Rates w_1, w_2, ... of jumps of each size, optionally with a power-law tail."""

    weights: tuple = ()
    tail_amp: float = 0.0
    tail_alpha: float = 1.0
    tail_cutoff: int = 0

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        # trailing zeros carry no information
        while w and w[-1] == 0.0:
            w = w[:-1]
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "tail_amp", float(self.tail_amp))
        object.__setattr__(self, "tail_alpha", float(self.tail_alpha))
        object.__setattr__(self, "tail_cutoff", int(self.tail_cutoff))
        if any(x < 0 or not math.isfinite(x) for x in w):
            raise ValueError("offspring weights must be finite and nonnegative")
        if self.tail_amp < 0:
            raise ValueError("tail amplitude must be nonnegative")
        if self.tail_amp > 0:
            if self.tail_alpha <= 0:
                raise ValueError("tail exponent alpha must be positive")
            if self.tail_cutoff < len(w):
                raise ValueError("tail cutoff must be at least the number of explicit weights")

    # -- basic quantities -------------------------------------------------
    @property
    def has_tail(self) -> bool:
        return self.tail_amp > 0

    @property
    def s(self) -> float:
        return 1.0 + self.tail_alpha

    @cached_property
    def head(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    @cached_property
    def head_bar(self) -> np.ndarray:
        """Tail sums of the explicit weights: head_bar[k-1] = sum_{i>=k} w_i (head only)."""
        if not self.weights:
            return np.zeros(0)
        return np.cumsum(self.head[::-1])[::-1]

    @cached_property
    def tail_total(self) -> float:
        if not self.has_tail:
            return 0.0
        return self.tail_amp * float(special.zeta(self.s, self.tail_cutoff + 1))

    @cached_property
    def total(self) -> float:
        return float(self.head.sum()) + self.tail_total

    @property
    def finite_mean(self) -> bool:
        return (not self.has_tail) or self.tail_alpha > 1.0

    @cached_property
    def mean(self) -> float:
        """sum_i i * w_i (infinite for power-law tails with alpha <= 1)."""
        m = float(np.dot(np.arange(1, len(self.weights) + 1), self.head)) if self.weights else 0.0
        if self.has_tail:
            if self.tail_alpha <= 1.0:
                return math.inf
            m += self.tail_amp * float(special.zeta(self.s - 1.0, self.tail_cutoff + 1))
        return m

    def weight(self, i: int) -> float:
        if i < 1:
            return 0.0
        w = self.weights[i - 1] if i <= len(self.weights) else 0.0
        if self.has_tail and i > self.tail_cutoff:
            w += self.tail_amp * i ** (-self.s)
        return w

    def tail_sum(self, k: int) -> float:
        """bar w_k = sum_{i >= k} w_i."""
        k = max(int(k), 1)
        out = float(self.head_bar[k - 1]) if k <= len(self.weights) else 0.0
        if self.has_tail:
            out += self.tail_amp * float(special.zeta(self.s, max(k, self.tail_cutoff + 1)))
        return out

    # -- series in u ------------------------------------------------------
    def _powerlaw_parts(self, u, v):
        """(series, deficit) for the unit-amplitude tail j > K.

        series = sum_{j>K} j^-s u^j, deficit = sum_{j>K} j^-s (1 - u^j).
        """
        s, K = self.s, self.tail_cutoff
        series = np.empty_like(u)
        deficit = np.empty_like(u)
        lo = u <= CROSSOVER
        if np.any(lo):
            j = np.arange(K + 1, K + 1 + _DIRECT_TERMS, dtype=float)
            ser = (np.power.outer(u[lo], j) * j ** (-s)).sum(axis=1)
            series[lo] = ser
            deficit[lo] = special.zeta(s, K + 1) - ser
        hi = ~lo
        if np.any(hi):
            mu = np.log1p(-v[hi])
            full = _zeta_minus_polylog(s, mu)
            if K > 0:
                j = np.arange(1, K + 1, dtype=float)
                head = (_one_minus_pow(j, v[hi]) * j ** (-s)).sum(axis=1)
            else:
                head = 0.0
            deficit[hi] = full - head
            series[hi] = special.zeta(s, K + 1) - deficit[hi]
        return series, deficit

    def gen(self, u, v=None):
        """sum_i w_i u^i."""
        u, v, scalar = _split(u, v)
        out = np.zeros_like(u)
        if self.weights:
            out += np.polynomial.polynomial.polyval(u, np.concatenate(([0.0], self.head)))
        if self.has_tail:
            series, _ = self._powerlaw_parts(u, v)
            out += self.tail_amp * series
        return _out(out, scalar)

    def bar_gen(self, u, v=None):
        """sum_{i>=1} bar w_i u^i  (equals u (total - gen(u)) / (1 - u))."""
        u, v, scalar = _split(u, v)
        out = np.zeros_like(u)
        if self.weights:
            out += np.polynomial.polynomial.polyval(u, np.concatenate(([0.0], self.head_bar)))
        if self.has_tail:
            _, deficit = self._powerlaw_parts(u, v)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(v > 0, u * self.tail_amp * deficit / np.where(v > 0, v, 1.0), self.mean)
            out += t
        return _out(out, scalar)

    def bar_deficit(self, u, v=None):
        """sum_i bar w_i (1 - u^i) = mean - bar_gen(u), finite-mean laws only."""
        if not self.finite_mean:
            raise ValueError("bar_deficit needs a finite first moment")
        u, v, scalar = _split(u, v)
        out = np.zeros_like(u)
        if self.weights:
            j = np.arange(1, len(self.weights) + 1, dtype=float)
            out += (_one_minus_pow(j, v) * self.head_bar[None, :]).sum(axis=1)
        if self.has_tail:
            _, deficit = self._powerlaw_parts(u, v)
            m_tail = self.tail_amp * float(special.zeta(self.s - 1.0, self.tail_cutoff + 1))
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(v > 0, u * self.tail_amp * deficit / np.where(v > 0, v, 1.0), m_tail)
            out += m_tail - t
        return _out(out, scalar)

    def factor(self, const: float, u, v=None):
        """const - sum_i bar w_i u^i, evaluated without cancellation near u = 1."""
        u, v, scalar = _split(u, v)
        out = np.empty_like(u)
        lo = u <= CROSSOVER
        if np.any(lo):
            out[lo] = const - self.bar_gen(u[lo], v[lo])
        hi = ~lo
        if np.any(hi):
            if self.finite_mean:
                out[hi] = (const - self.mean) + self.bar_deficit(u[hi], v[hi])
            else:
                out[hi] = const - self.bar_gen(u[hi], v[hi])
        return _out(out, scalar)

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {"weights": list(self.weights)}

    def tail_dict(self) -> dict:
        return {"amp": self.tail_amp, "alpha": self.tail_alpha, "cutoff": self.tail_cutoff}


class Regime(str, Enum):
    SubcriticalCooperative = "SubcriticalCooperative"
    CriticalCooperative = "CriticalCooperative"
    SupercriticalCooperative = "SupercriticalCooperative"


@dataclass(frozen=True)
class Mechanism:
    """Parameters (d, c, pi, b) of a BPI process."""

    d: float
    c: float
    pi: OffspringLaw = field(default_factory=OffspringLaw)
    bb: OffspringLaw = field(default_factory=OffspringLaw)
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "c", float(self.c))
        if self.d < 0 or self.c < 0:
            raise ValueError("d and c must be nonnegative")

    @property
    def rho(self) -> float:
        return self.pi.total

    @property
    def b(self) -> float:
        return self.bb.total

    @property
    def varsigma(self) -> float:
        if not self.bb.finite_mean:
            return math.inf
        v = -self.c + self.bb.mean
        return 0.0 if abs(v) <= VARSIGMA_TOL else v

    @property
    def hypothesis_h(self) -> bool:
        return self.c > 0 and self.varsigma <= 0

    @property
    def nearest_neighbour(self) -> bool:
        """True when all up-jumps have size one (a birth-death chain)."""
        return (not self.pi.has_tail and len(self.pi.weights) <= 1
                and not self.bb.has_tail and len(self.bb.weights) <= 1)

    def variant(self, d=None, c=None, cooperation=True) -> "Mechanism":
        """Copy with d and/or c replaced, optionally dropping cooperation (b = 0)."""
        kw = {}
        if d is not None:
            kw["d"] = d
        if c is not None:
            kw["c"] = c
        if not cooperation:
            kw["bb"] = OffspringLaw()
        return replace(self, **kw)

    # -- mechanisms -------------------------------------------------------
    def branch_factor(self, u, v=None):
        """d - sum_i bar pi_i u^i, so that Psi(u) = (1-u) * branch_factor(u)."""
        return self.pi.factor(self.d, u, v)

    def interaction_factor(self, u, v=None):
        """c - sum_i bar b_i u^i, so that Phi(u) = (1-u) * interaction_factor(u)."""
        return self.bb.factor(self.c, u, v)

    def psi_direct(self, u, v=None):
        u, v, scalar = _split(u, v)
        out = self.d - (self.rho + self.d) * u + u * self.pi.gen(u, v)
        return _out(out, scalar)

    def psi_factored(self, u, v=None):
        u, v, scalar = _split(u, v)
        return _out(_times_gap(v, self.branch_factor(u, v)), scalar)

    def phi_direct(self, u, v=None):
        u, v, scalar = _split(u, v)
        out = self.c - (self.c + self.b) * u + u * self.bb.gen(u, v)
        return _out(out, scalar)

    def phi_factored(self, u, v=None):
        u, v, scalar = _split(u, v)
        return _out(_times_gap(v, self.interaction_factor(u, v)), scalar)

    def psi(self, u, v=None):
        u, v, scalar = _split(u, v)
        out = np.where(u > CROSSOVER, self.psi_factored(u, v), self.psi_direct(u, v))
        return _out(out, scalar)

    def phi(self, u, v=None):
        u, v, scalar = _split(u, v)
        out = np.where(u > CROSSOVER, self.phi_factored(u, v), self.phi_direct(u, v))
        return _out(out, scalar)

    def ratio_integrand(self, u, v=None):
        """Psi(u) / (u Phi(u)) with the (1-u) factors cancelled."""
        u, v, scalar = _split(u, v)
        den = self.interaction_factor(u, v)
        if self.varsigma > 0 and np.any(np.abs(den) < 1e-14):
            raise DegenerateDenominator("c - sum bar b_i u^i vanished in the supercritical regime")
        out = self.branch_factor(u, v) / (u * den)
        return _out(out, scalar)

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        out = {"d": self.d, "c": self.c, "pi": self.pi.to_dict(), "b": self.bb.to_dict(),
               "pi_tail": self.pi.tail_dict()}
        if self.bb.has_tail:
            out["b_tail"] = self.bb.tail_dict()
        if self.name:
            out["name"] = self.name
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: dict) -> "Mechanism":
        if "name" in obj and len(obj) == 1:
            return named_mechanism(obj["name"])

        def law(key, tail_key):
            w = obj.get(key, {}).get("weights", [])
            t = obj.get(tail_key) or {}
            return OffspringLaw(tuple(w), t.get("amp", 0.0), t.get("alpha", 1.0), t.get("cutoff", 0))

        return cls(d=obj["d"], c=obj["c"], pi=law("pi", "pi_tail"), bb=law("b", "b_tail"),
                   name=obj.get("name", ""))

    @classmethod
    def from_json(cls, text: str) -> "Mechanism":
        return cls.from_dict(json.loads(text))


# functional aliases -------------------------------------------------------

def psi(mech: Mechanism, u):
    return mech.psi(u)


def phi(mech: Mechanism, u):
    return mech.phi(u)


def ratio_integrand(mech: Mechanism, u):
    return mech.ratio_integrand(u)


def regime(mech: Mechanism) -> Regime:
    v = mech.varsigma
    if v < 0:
        return Regime.SubcriticalCooperative
    if v == 0:
        return Regime.CriticalCooperative
    return Regime.SupercriticalCooperative


def log_moment_holds(mech: Mechanism) -> bool:
    # finite support trivially; a power-law tail i^-(1+alpha) with alpha > 0
    # has sum log(i) i^-(1+alpha) < infinity.
    return True


# named instances ------------------------------------------------------------

def lb_mechanism(d=0.5, c=1.0, pi1=1.0) -> Mechanism:
    """Logistic branching: binary splitting at rate pi1, no cooperation."""
    return Mechanism(d, c, OffspringLaw((pi1,)), name="lb")


def kingman_mechanism(c=1.0) -> Mechanism:
    """Pure pairwise competition; the block-counting chain of Kingman's coalescent."""
    return Mechanism(0.0, c, name="kingman")


def sibuya_mechanism(rho=0.5) -> Mechanism:
    """d=0, c=1, pi_1=rho, b_1=1; stationary law is Sibuya(1-rho)."""
    return Mechanism(0.0, 1.0, OffspringLaw((rho,)), OffspringLaw((1.0,)), name="sibuya")


def named_mechanism(name: str) -> Mechanism:
    table = {"lb": lb_mechanism, "kingman": kingman_mechanism, "sibuya": sibuya_mechanism}
    try:
        return table[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown mechanism name {name!r}; known: {sorted(table)}") from None
