"""Exact simulation of the interaction chain Z and the immigration chain X.

Random streams are counter-based (Philox): a path or a block of paths is
addressed by (master seed, index), so results never depend on how work is
scheduled. Kernels are numba-compiled and release the GIL.

Besides plain Gillespie simulation there is a sampler specialised to
birth-death mechanisms (all jumps of size one) that resolves excursions
above a level L by sampling, level by level, how many times each edge is
crossed and how long the excursion lasts. It is exact for the state when
that state is at most L, and it turns the heavy-tailed excursions of the
critical regime into O(height) work instead of O(height^2) events.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numba
import numpy as np
from scipy import integrate

from .errors import (DomainError, EventCapExceeded, PreconditionViolated, SolverDiverged, ZeroState)
from .functionals import upsilon, upsilon_inv
from .mechanisms import Mechanism, OffspringLaw

__all__ = [
    "Terminal",
    "Trajectory",
    "SimConfig",
    "Rates",
    "rates_Z",
    "rates_X",
    "path_rng",
    "block_rng",
    "simulate_Z",
    "simulate_X",
    "sample_chain",
    "sample_birth_death",
    "lamperti_transform",
    "pgf_X_closed_form",
    "OracleResult",
    "absorption_oracle",
    "write_jsonl",
    "read_jsonl",
    "write_binary",
    "read_binary",
]

BLOCK = 1024  # paths per random stream in batch runs
ALIAS_MIN = 64
JUMP_CAP = 4e18  # jump sizes are int64; anything this large is past any ceiling


class Terminal(str, Enum):
    Extinct = "Extinct"
    AbsorbedOne = "AbsorbedOne"
    Ceiling = "Ceiling"
    HorizonReached = "HorizonReached"
    TargetHit = "TargetHit"


_CODES = [Terminal.HorizonReached, Terminal.Extinct, Terminal.AbsorbedOne, Terminal.Ceiling,
          Terminal.TargetHit]
_CAP_CODE = 5


@dataclass(frozen=True)
class SimConfig:
    ceiling: int = 10**6
    horizon: float = 1.0
    seed: int = 0
    event_cap: int = 10**8

    def __post_init__(self):
        if self.ceiling < 2:
            raise ValueError("ceiling must be at least 2")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    terminal: Terminal
    terminal_time: float
    seed: tuple = (0, 0)

    @property
    def n_events(self) -> int:
        return len(self.times) - 1

    def state_at(self, t: float) -> int:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return int(self.states[max(k, 0)])


# ---------------------------------------------------------------------------
# generator entries

@dataclass
class Rates:
    total: float
    down: float
    up_pi: float  # rate carried by natural births
    up_b: float  # rate carried by cooperation
    up: Callable[[int], float]  # k -> weight of an up-jump of size k

    @property
    def up_total(self):
        return self.up_pi + self.up_b


def rates_Z(mech: Mechanism, i: int) -> Rates:
    if i < 0:
        raise DomainError("states are nonnegative")
    if i == 0:
        return Rates(0.0, 0.0, 0.0, 0.0, lambda k: 0.0)
    pair = i * (i - 1.0)
    down = mech.d * i + mech.c * pair
    up_pi, up_b = i * mech.rho, pair * mech.b
    return Rates(down + up_pi + up_b, down, up_pi, up_b,
                 lambda k: i * mech.pi.weight(k) + pair * mech.bb.weight(k))


def rates_X(mech: Mechanism, i: int) -> Rates:
    if i < 0:
        raise DomainError("states are nonnegative")
    if i == 0:
        return Rates(mech.rho, 0.0, mech.rho, 0.0, lambda k: mech.pi.weight(k))
    down = mech.d + mech.c * (i - 1.0)
    up_b = (i - 1.0) * mech.b
    return Rates(down + mech.rho + up_b, down, mech.rho, up_b,
                 lambda k: mech.pi.weight(k) + (i - 1.0) * mech.bb.weight(k))


# ---------------------------------------------------------------------------
# random streams

def path_rng(seed: int, index: int) -> np.random.Generator:
    """Stream of a single addressed path."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(index), 1]))


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Stream shared by the paths of one batch block."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(block), 0]))


# ---------------------------------------------------------------------------
# jump-size samplers

def _alias_table(p: np.ndarray):
    """Vose alias table for probabilities p (summing to 1)."""
    n = len(p)
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    scaled = p * n
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large + small:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


def _law_arrays(law: OffspringLaw):
    """(alias prob, alias index, mass fraction on 1..K, tail exponent, K)."""
    if law.total == 0:
        return np.ones(1), np.zeros(1, dtype=np.int64), 1.0, 2.0, 1
    K = max(ALIAS_MIN, len(law.weights)) if law.has_tail else max(1, len(law.weights))
    w = np.array([law.weight(k) for k in range(1, K + 1)])
    head = float(w.sum())
    prob, alias = _alias_table(w / head)
    frac = head / law.total if law.has_tail else 1.0
    s = law.s if law.has_tail else 2.0
    return prob, alias, min(frac, 1.0), float(s), int(K)


@numba.njit(nogil=True, cache=True)
def _draw_size(rng, prob, alias, frac, s, K):
    if frac >= 1.0 or rng.random() < frac:
        i = int(rng.random() * K)
        if i >= K:
            i = K - 1
        if rng.random() < prob[i]:
            return i + 1
        return alias[i] + 1
    # power-law tail k > K: rounded continuous Pareto proposal, exact by rejection
    a = K + 0.5
    while True:
        x = a * rng.random() ** (-1.0 / (s - 1.0))
        if x >= JUMP_CAP:
            return np.int64(JUMP_CAP)
        k = math.floor(x + 0.5)
        mass = ((k - 0.5) ** (1.0 - s) - (k + 0.5) ** (1.0 - s)) / (s - 1.0)
        if rng.random() * mass <= k ** (-s):
            return np.int64(k)


@numba.njit(nogil=True, cache=True)
def _rates(is_x, i, d, c, rho, bsum):
    fi = float(i)
    if is_x:
        if i == 0:
            return 0.0, rho, 0.0
        return d + c * (fi - 1.0), rho, (fi - 1.0) * bsum
    if i == 0:
        return 0.0, 0.0, 0.0
    pair = fi * (fi - 1.0)
    return d * fi + c * pair, fi * rho, pair * bsum


@numba.njit(nogil=True, cache=True)
def _step(rng, is_x, z, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK):
    """One Gillespie step from z: returns (holding time, next state), inf time if absorbing."""
    down, upp, upb = _rates(is_x, z, d, c, rho, bsum)
    tot = down + upp + upb
    if tot <= 0.0:
        return np.inf, z
    h = rng.exponential(1.0 / tot)
    r = rng.random() * tot
    if r < down:
        return h, z - 1
    if r < down + upp:
        return h, z + _draw_size(rng, pp, pa, pf, ps, pK)
    return h, z + _draw_size(rng, bp, ba, bf, bs, bK)


@numba.njit(nogil=True, cache=True)
def _run(rng, is_x, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK,
         z0, obs, T, M, cap, target, stop0, out):
    """One path; writes states at obs times into out. Returns (code, end time, events)."""
    z = z0
    t = 0.0
    k = 0
    nobs = len(obs)
    ev = 0
    if z == target:
        for j in range(nobs):
            out[j] = z
        return 4, 0.0, 0
    while True:
        h, znew = _step(rng, is_x, z, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK)
        tn = t + h
        while k < nobs and obs[k] < tn and obs[k] <= T:
            out[k] = z
            k += 1
        if tn > T:
            code = 0
            if h == np.inf:
                code = 1 if z == 0 else 2  # t is the time the absorbing state was entered
            for j in range(k, nobs):
                out[j] = z
            return code, (T if code == 0 else t), ev
        t = tn
        z = znew
        ev += 1
        if z >= M:
            for j in range(k, nobs):
                out[j] = -2
            return 3, t, ev
        if z == target or (stop0 and z == 0):
            for j in range(k, nobs):
                out[j] = z
            return (4 if z == target else 1), t, ev
        if ev >= cap:
            for j in range(k, nobs):
                out[j] = -3
            return 5, t, ev


@numba.njit(nogil=True, cache=True)
def _batch(rng, n, is_x, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK,
           z0, obs, T, M, cap, target, stop0, states, codes, tend, events):
    for p in range(n):
        code, te, ev = _run(rng, is_x, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK,
                            z0, obs, T, M, cap, target, stop0, states[p])
        codes[p] = code
        tend[p] = te
        events[p] = ev


@numba.njit(nogil=True, cache=True)
def _record(rng, is_x, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK,
            z0, T, M, cap, target, stop0):
    times = np.empty(64)
    states = np.empty(64, dtype=np.int64)
    times[0] = 0.0
    states[0] = z0
    n = 1
    z = z0
    t = 0.0
    if z == target:
        return times[:1], states[:1], 4, 0.0
    while True:
        h, znew = _step(rng, is_x, z, d, c, rho, bsum, pp, pa, pf, ps, pK, bp, ba, bf, bs, bK)
        if t + h > T:
            if h == np.inf:
                return times[:n], states[:n], (1 if z == 0 else 2), t
            return times[:n], states[:n], 0, T
        t += h
        z = znew
        if n == len(times):
            times = np.concatenate((times, np.empty(n)))
            states = np.concatenate((states, np.empty(n, dtype=np.int64)))
        times[n] = t
        states[n] = z
        n += 1
        if z >= M:
            return times[:n], states[:n], 3, t
        if z == target:
            return times[:n], states[:n], 4, t
        if stop0 and z == 0:
            return times[:n], states[:n], 1, t
        if n - 1 >= cap:
            return times[:n], states[:n], 5, t


def _params(mech: Mechanism):
    pp, pa, pf, ps, pK = _law_arrays(mech.pi)
    bp, ba, bf, bs, bK = _law_arrays(mech.bb)
    return (float(mech.d), float(mech.c), float(mech.rho), float(mech.b),
            pp, pa, pf, ps, pK, bp, ba, bf, bs, bK)


def _simulate(mech, z0, cfg: SimConfig, is_x, index, target, stop0):
    if z0 < 0:
        raise DomainError("initial state must be nonnegative")
    rng = path_rng(cfg.seed, index)
    times, states, code, tend = _record(rng, is_x, *_params(mech), int(z0), float(cfg.horizon),
                                        int(cfg.ceiling), int(cfg.event_cap), int(target), stop0)
    if code == _CAP_CODE:
        raise EventCapExceeded(f"path {index} exceeded {cfg.event_cap} events")
    return Trajectory(times.copy(), states.copy(), _CODES[code], float(tend), (cfg.seed, index))


def simulate_Z(mech: Mechanism, z0: int, cfg: SimConfig = SimConfig(), index: int = 0,
               target: int = -1) -> Trajectory:
    """Gillespie path of Z; `target` adds a stopping state (terminal TargetHit)."""
    return _simulate(mech, z0, cfg, False, index, target, False)


def simulate_X(mech: Mechanism, x0: int, cfg: SimConfig = SimConfig(), index: int = 0,
               target: int = -1, stop_at_zero: bool = True) -> Trajectory:
    """Gillespie path of X, stopped at the first visit to 0 unless told otherwise."""
    return _simulate(mech, x0, cfg, True, index, target, stop_at_zero)


@dataclass
class ChainSample:
    states: np.ndarray  # (n, len(obs)); -2 marks paths past the ceiling
    codes: np.ndarray
    end_times: np.ndarray
    events: np.ndarray

    def terminal(self, p) -> Terminal:
        return _CODES[int(self.codes[p])]


def sample_chain(mech: Mechanism, z0: int, n: int, obs=(), *, chain="Z", horizon=math.inf,
                 ceiling=10**6, seed=0, target=-1, stop_at_zero=None, event_cap=10**8,
                 block=BLOCK) -> ChainSample:
    """n independent paths from z0; states recorded at the sorted times `obs`.

    Paths run until the horizon (default: the last observation time), a
    ceiling, a target state or absorption.
    """
    obs = np.sort(np.asarray(obs, dtype=float))
    T = float(obs[-1]) if (len(obs) and math.isinf(horizon)) else float(horizon)
    is_x = chain == "X"
    stop0 = is_x if stop_at_zero is None else bool(stop_at_zero)
    params = _params(mech)
    states = np.empty((n, len(obs)), dtype=np.int64)
    codes = np.empty(n, dtype=np.int64)
    tend = np.empty(n)
    events = np.empty(n, dtype=np.int64)
    for b0 in range(0, n, block):
        b1 = min(n, b0 + block)
        rng = block_rng(seed, b0 // block)
        _batch(rng, b1 - b0, is_x, *params, int(z0), obs, T, int(ceiling), int(event_cap), int(target),
               stop0, states[b0:b1], codes[b0:b1], tend[b0:b1], events[b0:b1])
    if np.any(codes == _CAP_CODE):
        raise EventCapExceeded(f"path {int(np.argmax(codes == _CAP_CODE))} exceeded {event_cap} events")
    return ChainSample(states, codes, tend, events)


# ---------------------------------------------------------------------------
# birth-death chains: exact excursions above a level

@numba.njit(nogil=True, cache=True)
def _bd_rates(j, d, c, rho, b):
    fj = float(j)
    return fj * rho + fj * (fj - 1.0) * b, fj * d + fj * (fj - 1.0) * c


@numba.njit(nogil=True, cache=True)
def _excursion(rng, L, H, d, c, rho, b, budget, nu, sigma2):
    """Duration of the excursion from L+1 back to L.

    Returns (duration, early stop flag, approx flag). Levels above H, if H > 0,
    are collapsed into one inverse-Gaussian draw (see ledger).
    """
    A = 1
    j = L + 1
    D = 0.0
    while A > 0:
        lam, mu = _bd_rates(j, d, c, rho, b)
        r = lam + mu
        q = mu / r
        if H > 0 and j == H + 1:
            n = float(A)
            delta = math.log((H + 1.0) / H)
            mean = n * delta / (-nu)
            shape = n * n * delta * delta / sigma2
            D += rng.wald(mean, shape)
            return D, D > budget, True
        Anext = rng.negative_binomial(A, q) if q < 1.0 else 0
        D += rng.gamma(A + Anext, 1.0 / r)
        if D > budget:
            return D, True, False
        A = Anext
        j += 1
    return D, False, False


@numba.njit(nogil=True, cache=True)
def _bd_batch(rng, n, d, c, rho, b, z0, obs, L, H, nu, sigma2, states, approx):
    T = obs[len(obs) - 1]
    nobs = len(obs)
    for p in range(n):
        z = z0
        t = 0.0
        k = 0
        used = False
        out = states[p]
        while True:
            lam, mu = _bd_rates(z, d, c, rho, b)
            tot = lam + mu
            if tot <= 0.0:
                for j in range(k, nobs):
                    out[j] = z
                break
            tn = t + rng.exponential(1.0 / tot)
            while k < nobs and obs[k] < tn:
                out[k] = z
                k += 1
            if k == nobs:
                break
            t = tn
            if rng.random() * tot < mu:
                z -= 1
                continue
            if z < L:
                z += 1
                continue
            # excursion above L: the state is > L until it returns
            D, stop, ap = _excursion(rng, L, H, d, c, rho, b, T - t, nu, sigma2)
            used = used or ap
            te = t + D
            while k < nobs and (stop or obs[k] < te):
                out[k] = -1
                k += 1
            if k == nobs:
                break
            t = te
        approx[p] = used


def sample_birth_death(mech: Mechanism, z0: int, n: int, obs, *, level=10, collapse_above=None,
                       seed=0, block=BLOCK):
    """States of Z at times `obs` for a birth-death mechanism, censored above `level`.

    Returns (states, approx) where states is (n, len(obs)) with -1 meaning
    "above level", and approx flags paths that used the collapsed tail.
    `collapse_above` (H) replaces the levels above H by a Brownian first-passage
    time in log scale; it needs b = c and a negative log-drift.
    """
    if not mech.nearest_neighbour:
        raise PreconditionViolated("excursion sampler needs unit up-jumps")
    if z0 > level:
        raise PreconditionViolated("initial state must not exceed the censoring level")
    obs = np.sort(np.asarray(obs, dtype=float))
    H = 0 if collapse_above is None else int(collapse_above)
    nu = (mech.rho - mech.d) - mech.c
    sigma2 = mech.b + mech.c
    if H > 0 and not (abs(mech.b - mech.c) < 1e-15 and nu < 0 and H > level):
        raise PreconditionViolated("collapsed tail needs b = c, rho < d + c and H above the level")
    states = np.empty((n, len(obs)), dtype=np.int64)
    approx = np.zeros(n, dtype=np.bool_)
    for b0 in range(0, n, block):
        b1 = min(n, b0 + block)
        _bd_batch(block_rng(seed, b0 // block), b1 - b0, float(mech.d), float(mech.c), float(mech.rho),
                  float(mech.b), int(z0), obs, int(level), H, float(nu), float(sigma2),
                  states[b0:b1], approx[b0:b1])
    return states, approx


# ---------------------------------------------------------------------------
# time change from X to Z

def lamperti_transform(xtraj: Trajectory) -> Trajectory:
    """Run the X path on the clock int ds / X_s; the state sequence is unchanged."""
    states = xtraj.states
    times = xtraj.times
    if len(states) == 0 or states[0] < 1:
        raise PreconditionViolated("Lamperti transform needs a path started at x0 >= 1")
    zero = np.nonzero(states == 0)[0]
    if len(zero) and zero[0] != len(states) - 1:
        raise ZeroState("X sits at 0 before the clock closes")
    live = states[:-1]
    durations = np.diff(times)
    clock = np.concatenate(([0.0], np.cumsum(durations / live)))
    if len(zero):
        return Trajectory(clock, states.copy(), Terminal.Extinct, float(clock[-1]), xtraj.seed)
    if xtraj.terminal == Terminal.HorizonReached:
        tend = clock[-1] + (xtraj.terminal_time - times[-1]) / states[-1]
        return Trajectory(clock, states.copy(), Terminal.HorizonReached, float(tend), xtraj.seed)
    return Trajectory(clock, states.copy(), xtraj.terminal, float(clock[-1]), xtraj.seed)


# ---------------------------------------------------------------------------
# closed-form pgf of X

def pgf_X_closed_form(mech: Mechanism, z: int, u: float, t: float) -> float:
    """E_z[u^{X_t}] when d = 0, or c = d with b = 0."""
    if not (mech.d == 0 or (mech.c == mech.d and mech.b == 0)):
        raise PreconditionViolated("closed form needs d = 0, or c = d and b = 0")
    if not 0 <= u <= 1 or t < 0:
        raise DomainError("need u in [0,1] and t >= 0")
    if t == 0:
        return float(u) ** z
    if u == 1:
        return 1.0
    v = upsilon_inv(mech, t + upsilon(mech, u))
    d, c = mech.d, mech.c
    k = (d - c) / c  # coefficient of the 1/w singularity of the exponent's integrand

    def regular(w):
        num = mech.branch_factor(w) - mech.interaction_factor(w)
        return (num / mech.interaction_factor(w) - k) / w

    rem, _ = integrate.quad(regular, u, v, epsabs=1e-13, epsrel=1e-12, limit=200)
    if u == 0:
        if k < 0:
            return 0.0
        return float(v ** z * math.exp(rem))
    logg = z * math.log(v) + k * (math.log(v) - math.log(u)) + rem
    return float(math.exp(logg))


# ---------------------------------------------------------------------------
# truncated-chain oracle

@dataclass
class OracleResult:
    target: int
    truncations: tuple
    p_values: np.ndarray  # (4, N0 + 2): value per truncation N0, 2N0, 4N0, 8N0 and state
    m_values: np.ndarray
    max_state: int

    @staticmethod
    def _aitken(a, b, c):
        d1, d2 = b - a, c - b
        if abs(d2) <= 1e-13 * max(abs(c), 1e-300) or d1 == 0:
            return c
        r = d2 / d1
        if not 0 < r < 1:
            return c
        return c + d2 * r / (1 - r)

    def _extrap(self, arr, z):
        if not self.target <= z <= self.max_state:
            raise DomainError("state outside the oracle range")
        v = [arr[k][z] for k in range(len(arr))]
        est = self._aitken(*v[-3:])
        return est, abs(est - self._aitken(*v[:3])), v[-1]

    def p(self, z: int) -> float:
        return float(self._extrap(self.p_values, z)[0])

    def m(self, z: int) -> float:
        return float(self._extrap(self.m_values, z)[0])

    def p_error(self, z: int) -> float:
        return float(self._extrap(self.p_values, z)[1])

    def m_error(self, z: int) -> float:
        return float(self._extrap(self.m_values, z)[1])


@numba.njit(cache=True)
def _oracle_sweep(a, N, d, c, pibar, bbar):
    """Increment recursions on {a..N+1}: homogeneous with top value 1, and with unit source."""
    hom = np.zeros(N + 2)
    src = np.zeros(N + 2)
    hom[N + 1] = 1.0
    scale_log = 0.0
    K = len(pibar)
    for i in range(N, a, -1):
        fi = float(i)
        mu = d * fi + c * fi * (fi - 1.0)
        if mu <= 0.0:
            return hom, src, -1.0
        sh = 0.0
        ss = 0.0
        mmax = min(N + 1 - i, K - 1)
        for m in range(1, mmax + 1):
            w = fi * pibar[m] + fi * (fi - 1.0) * bbar[m]
            sh += w * hom[i + m]
            ss += w * src[i + m]
        hom[i] = sh / mu
        src[i] = (1.0 + ss) / mu
        if hom[i] > 1e250:
            for j in range(i, N + 2):
                hom[j] *= 1e-250
            scale_log += 250.0
    return hom, src, scale_log


def absorption_oracle(mech: Mechanism, target: int = 0, N: int = 2000) -> OracleResult:
    """Absorption probability at `target` and mean absorption time on the chain cut at N.

    Jumps above N kill the path. With increments D_i = h_{i-1} - h_i the
    absorption equations become a one-sided recursion that only adds positive
    terms, solved from the top down; the mean absorption time
    (at target or killing) follows from the same recursion with a unit source.
    Heavy-tailed jumps make the truncation error algebraic in N, so the
    values for N, 2N, 4N, 8N are extrapolated with Aitken's delta-squared
    step along the doublings; the error is the spread between the two
    overlapping triples.
    """
    if N < 10:
        raise DomainError("truncation must be at least 10")
    a = int(target)
    Ns = (N, 2 * N, 4 * N, 8 * N)
    top = Ns[-1] + 2
    pibar = np.array([0.0] + [mech.pi.tail_sum(m) for m in range(1, top + 1)])
    bbar = np.array([0.0] + [mech.bb.tail_sum(m) for m in range(1, top + 1)])
    P = np.zeros((len(Ns), N + 2))
    Mt = np.zeros((len(Ns), N + 2))
    for r, n in enumerate(Ns):
        hom, src, flag = _oracle_sweep(a, n, float(mech.d), float(mech.c), pibar, bbar)
        if flag < 0:
            raise SolverDiverged("zero down-rate above the target: absorption equations degenerate")
        if not (np.all(np.isfinite(hom)) and np.all(np.isfinite(src))):
            raise SolverDiverged("increment recursion overflowed")
        inc_h = hom[a + 1:]
        inc_s = src[a + 1:]
        tail_h = np.cumsum(inc_h[::-1])[::-1]  # sum_{j >= i} of increments
        tot_h = tail_h[0]
        cum_s = np.concatenate(([0.0], np.cumsum(inc_s)))
        cum_h = np.concatenate(([0.0], np.cumsum(inc_h)))
        for z in range(a, N + 1):
            k = z - a
            P[r, z] = tail_h[k] / tot_h
            # mean time: sum of src increments up to z minus the share fixed by the top condition
            Mt[r, z] = cum_s[k] - cum_s[-1] * (cum_h[k] / cum_h[-1])
    return OracleResult(a, Ns, P, Mt, N)


# ---------------------------------------------------------------------------
# trajectory I/O

def write_jsonl(traj: Trajectory, fh) -> None:
    for t, x in zip(traj.times, traj.states):
        fh.write(json.dumps({"t": float(t), "x": int(x)}) + "\n")


def read_jsonl(fh) -> tuple:
    ts, xs = [], []
    for line in fh:
        line = line.strip()
        if line:
            rec = json.loads(line)
            ts.append(rec["t"])
            xs.append(rec["x"])
    return np.array(ts, dtype=float), np.array(xs, dtype=np.int64)


MAGIC = b"BPI1"


def write_binary(traj: Trajectory, fh) -> None:
    fh.write(MAGIC)
    buf = np.empty(len(traj.times), dtype=[("t", "<f8"), ("x", "<u8")])
    buf["t"] = traj.times
    buf["x"] = traj.states
    fh.write(buf.tobytes())


def read_binary(fh) -> tuple:
    data = fh.read()
    if data[:4] != MAGIC:
        raise ValueError("not a BPI1 stream")
    if (len(data) - 4) % 16:
        raise ValueError("truncated BPI1 stream")
    buf = np.frombuffer(data[4:], dtype=[("t", "<f8"), ("x", "<u8")])
    return buf["t"].astype(float), buf["x"].astype(np.int64)
