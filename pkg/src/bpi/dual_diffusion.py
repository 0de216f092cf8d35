"""The dual diffusion U on [0, 1]: drift Psi(u), squared dispersion 2 u Phi(u).

Paths are Euler-Maruyama with clamping to [0, 1]. Boundary handling follows
the Feller class of each boundary: exit (and unrefined regular) boundaries
absorb, a reflecting regular boundary reflects, entrance and natural
boundaries only clamp. Within each step an absorbing boundary, or an
interior level in exit experiments, also counts as hit with the
Brownian-bridge crossing probability exp(-2 (x0-b)(x1-b) / (sigma2 dt)).

Batches are vectorised over paths; each block of paths draws from its own
counter-based stream, so results do not depend on scheduling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import special

from .classifier import LongRunKind, dual_boundaries, dual_longrun
from .ctmc_sim import block_rng, sample_birth_death, sample_chain
from .errors import PreconditionViolated
from .functionals import functional_cache
from .mechanisms import Mechanism

__all__ = [
    "drift_dispersion",
    "boundary_policy",
    "DiffusionPath",
    "simulate_U",
    "sample_U",
    "exit_probability",
    "expected_exit_time",
    "exit_mc",
    "DualityReport",
    "duality_check",
    "duality_grid",
    "stationary_density_check",
]

U_BLOCK = 8192


def drift_dispersion(mech: Mechanism, u):
    """(Psi(u), 2 u Phi(u))."""
    u = np.asarray(u, dtype=float)
    mu = mech.psi(u)
    s2 = 2.0 * u * mech.phi(u)
    if u.ndim == 0:
        return float(mu), float(s2)
    return mu, s2


def boundary_policy(mech: Mechanism, theta=0.5):
    """Per-boundary action ('absorb', 'reflect' or 'clamp') from the Feller classes."""
    b0, b1 = dual_boundaries(mech, theta)

    def act(cls):
        if cls in ("Exit", "Regular(Unrefined)", "Unknown"):
            return "absorb"
        if cls == "Regular(Reflecting)":
            return "reflect"
        return "clamp"

    return act(b0), act(b1)


@dataclass
class DiffusionPath:
    times: np.ndarray
    states: np.ndarray
    dt: float
    scheme: str
    hit: str | None  # "0", "1" or None
    hit_time: float | None
    seed: tuple = (0, 0)


def _coeffs(mech, x):
    mu = mech.psi(x)
    s2 = np.maximum(2.0 * x * mech.phi(x), 0.0)
    return mu, s2


def _bridge(x0, x1, level, s2, dt):
    """Vectorised Brownian-bridge probability of touching `level` between x0 and x1."""
    g = (x0 - level) * (x1 - level)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        p = np.exp(-2.0 * g / (s2 * dt))
    return np.where((s2 > 0) & (g > 0), p, 0.0)


def _em_step(mech, x, alive, dt, dw, policy, rng):
    """Euler-Maruyama step for all paths; returns (y, hit0, hit1), hits only for alive paths."""
    mu, s2 = _coeffs(mech, x)
    y = x + mu * dt + np.sqrt(s2) * dw
    r0 = rng.random(len(x))
    r1 = rng.random(len(x))
    h0 = np.zeros(len(x), dtype=bool)
    h1 = np.zeros(len(x), dtype=bool)
    if policy[0] == "absorb":
        h0 = alive & ((y <= 0.0) | ((y < 1.0) & (r0 < _bridge(x, y, 0.0, s2, dt))))
    elif policy[0] == "reflect":
        y = np.abs(y)
    if policy[1] == "absorb":
        h1 = alive & ~h0 & ((y >= 1.0) | ((y > 0.0) & (r1 < _bridge(x, y, 1.0, s2, dt))))
    y = np.clip(y, 0.0, 1.0)
    y = np.where(h0, 0.0, np.where(h1, 1.0, y))
    return y, h0, h1


def _besq_step(mech, x, dt, policy, rng, alive):
    """Vectorised version of the frozen-coefficient squared-Bessel step (see _nb_besq_step)."""
    mu, _ = _coeffs(mech, x)
    k = np.maximum(mech.phi(x), 0.0)
    good = (mu > 0) & (k > 0)
    kk = np.where(good, k, 1.0)
    delta = np.where(good, 2.0 * mu / kk, 2.0)
    scale = 0.5 * kk * dt
    n = rng.poisson(np.where(good, 0.5 * x / scale, 0.0))
    y = np.where(good, 2.0 * scale * rng.gamma(0.5 * delta + n), x)
    h0 = np.zeros(len(x), dtype=bool)
    if policy[0] == "absorb":
        a = np.clip(1.0 - 0.5 * delta, 1e-12, 1 - 1e-12)
        z = 2.0 * np.sqrt(x * y) / (kk * dt)
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = np.where(z > 40, 1.0, special.ive(a, z) / special.ive(-a, z))
        h0 = alive & good & (delta < 2.0) & (rng.random(len(x)) >= np.nan_to_num(ratio, nan=0.0))
    if np.any(~good):
        dw = rng.standard_normal(len(x)) * math.sqrt(dt)
        ye, e0, _ = _em_step(mech, x, alive & ~good, dt, dw, (policy[0], "clamp"), rng)
        y = np.where(good, y, ye)
        h0 |= e0
    y = np.where(h0, 0.0, y)
    h1 = alive & ~h0 & (y >= 1.0) if policy[1] == "absorb" else np.zeros(len(x), dtype=bool)
    return np.clip(y, 0.0, 1.0), h0, h1


def _poly_coefs(mech):
    """Coefficient arrays of Psi/(1-u) and Phi/(1-u), or None when a law has a power-law tail."""
    if mech.pi.has_tail or mech.bb.has_tail:
        return None
    pc = np.concatenate(([mech.d], -mech.pi.head_bar))
    bc = np.concatenate(([mech.c], -mech.bb.head_bar))
    return pc, bc


_POLICY = {"absorb": 0, "reflect": 1, "clamp": 2}


@numba.njit(nogil=True, cache=True)
def _horner(coefs, u):
    acc = 0.0
    for k in range(len(coefs) - 1, -1, -1):
        acc = acc * u + coefs[k]
    return acc


@numba.njit(nogil=True, cache=True)
def _nb_coeffs(pc, bc, x):
    v = 1.0 - x
    s2 = 2.0 * x * v * _horner(bc, x)
    return v * _horner(pc, x), max(s2, 0.0)


@numba.njit(nogil=True, cache=True)
def _nb_bridge(x0, x1, level, s2, dt):
    g = (x0 - level) * (x1 - level)
    if s2 <= 0.0 or g <= 0.0:
        return 0.0
    return math.exp(-2.0 * g / (s2 * dt))


@numba.njit(nogil=True, cache=True)
def _nb_step(rng, pc, bc, x, dt, dw, pol0, pol1):
    """One step of an alive path: returns (x, flag) with flag 0 alive, 1 hit 0, 2 hit 1."""
    mu, s2 = _nb_coeffs(pc, bc, x)
    y = x + mu * dt + math.sqrt(s2) * dw
    if pol0 == 0:
        if y <= 0.0 or (y < 1.0 and rng.random() < _nb_bridge(x, y, 0.0, s2, dt)):
            return 0.0, 1
    elif pol0 == 1 and y < 0.0:
        y = -y
    if pol1 == 0:
        if y >= 1.0 or (y > 0.0 and rng.random() < _nb_bridge(x, y, 1.0, s2, dt)):
            return 1.0, 2
    return min(max(y, 0.0), 1.0), 0


@numba.njit(nogil=True, cache=True)
def _bessel_ratio(a, z):
    """I_a(z) / I_{-a}(z) for 0 < a < 1 by the power series; 1 to double precision past z = 40."""
    if z > 40.0:
        return 1.0
    if z <= 0.0:
        return 0.0
    lh = math.log(0.5 * z)
    num = 0.0
    den = 0.0
    for m in range(200):
        tp = (2 * m + a) * lh - math.lgamma(m + 1.0) - math.lgamma(m + a + 1.0)
        tm = (2 * m - a) * lh - math.lgamma(m + 1.0) - math.lgamma(m - a + 1.0)
        num += math.exp(tp)
        den += math.exp(tm)
        if m > z and tp < math.log(num) - 40.0 and tm < math.log(den) - 40.0:
            break
    return num / den


@numba.njit(nogil=True, cache=True)
def _nb_besq_step(rng, pc, bc, x, dt, pol0, pol1):
    """Exact step of dX = mu dt + sqrt(2 k X) dB with mu = Psi(x) and k = Phi(x) frozen at x.

    That local model is a scaled squared Bessel process of dimension
    delta = 2 mu / k, whose transition is noncentral chi-square (Poisson
    mixture of gammas). With an absorbing 0 and delta < 2, the bridge from x
    to the drawn endpoint y avoids 0 with probability I_a(z) / I_{-a}(z),
    a = 1 - delta/2, z = 2 sqrt(x y) / (k dt); for delta >= 2 it never hits 0.
    Falls back to Euler when the frozen drift is not positive.
    """
    v = 1.0 - x
    mu = v * _horner(pc, x)
    k = v * _horner(bc, x)
    if mu <= 0.0 or k <= 0.0:
        return _nb_step(rng, pc, bc, x, dt, rng.standard_normal() * math.sqrt(dt), pol0, pol1)
    delta = 2.0 * mu / k
    scale = 0.5 * k * dt
    n = rng.poisson(0.5 * x / scale)
    y = scale * 2.0 * rng.gamma(0.5 * delta + n, 1.0)
    if pol0 == 0 and delta < 2.0:
        if rng.random() >= _bessel_ratio(1.0 - 0.5 * delta, 2.0 * math.sqrt(x * y) / (k * dt)):
            return 0.0, 1
    if pol1 == 0 and y >= 1.0:
        return 1.0, 2
    return min(y, 1.0), 0


@numba.njit(nogil=True, cache=True)
def _nb_sample(rng, m, u0, dt, steps, pc, bc, pol0, pol1, paired, out_c, out_f, off, besq=False):
    h = dt / 2.0
    sh = math.sqrt(h)
    for p in range(m):
        xc = u0
        xf = u0
        ac = (0.0 < u0 < 1.0) or (u0 == 0.0 and pol0 != 0) or (u0 == 1.0 and pol1 != 0)
        af = ac
        k_obs = 0
        for k in range(1, steps[-1] + 1):
            if paired:
                dw1 = rng.standard_normal() * sh
                dw2 = rng.standard_normal() * sh
                if af:
                    xf, fl = _nb_step(rng, pc, bc, xf, h, dw1, pol0, pol1)
                    af = fl == 0
                if af:
                    xf, fl = _nb_step(rng, pc, bc, xf, h, dw2, pol0, pol1)
                    af = fl == 0
                if ac:
                    xc, fl = _nb_step(rng, pc, bc, xc, dt, dw1 + dw2, pol0, pol1)
                    ac = fl == 0
            elif ac and besq:
                xc, fl = _nb_besq_step(rng, pc, bc, xc, dt, pol0, pol1)
                ac = fl == 0
            elif ac:
                xc, fl = _nb_step(rng, pc, bc, xc, dt, rng.standard_normal() * math.sqrt(dt), pol0, pol1)
                ac = fl == 0
            while k_obs < len(steps) and steps[k_obs] == k:
                out_c[off + p, k_obs] = xc
                if paired:
                    out_f[off + p, k_obs] = xf
                k_obs += 1


@numba.njit(nogil=True, cache=True)
def _nb_exit(rng, m, u0, a, b, dt, t_max, pc, bc, up, tau, off):
    sdt = math.sqrt(dt)
    for p in range(m):
        x = u0
        t = 0.0
        while True:
            if t >= t_max:
                tau[off + p] = np.nan
                break
            mu, s2 = _nb_coeffs(pc, bc, x)
            y = x + mu * dt + math.sqrt(s2) * rng.standard_normal() * sdt
            ra = rng.random()
            rb = rng.random()
            if y <= a:
                tau[off + p] = t + dt * (x - a) / (x - y)
                break
            if ra < _nb_bridge(x, y, a, s2, dt):
                tau[off + p] = t + 0.5 * dt
                break
            if y >= b:
                tau[off + p] = t + dt * (b - x) / (y - x)
                up[off + p] = True
                break
            if rb < _nb_bridge(x, y, b, s2, dt):
                tau[off + p] = t + 0.5 * dt
                up[off + p] = True
                break
            x = y
            t += dt


def simulate_U(mech: Mechanism, u0: float, T: float, dt: float, boundary_policy_=None, seed=0,
               index=0) -> DiffusionPath:
    """One recorded path of U."""
    if not 0 <= u0 <= 1 or dt <= 0:
        raise PreconditionViolated("need u0 in [0,1] and dt > 0")
    policy = boundary_policy_ or boundary_policy(mech)
    rng = np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, int(index), 2]))
    n = int(math.ceil(T / dt - 1e-9))
    xs = np.empty(n + 1)
    xs[0] = u0
    x = np.array([u0])
    alive = np.array([0.0 < u0 < 1.0 or policy[0] != "absorb" and u0 == 0 or policy[1] != "absorb" and u0 == 1])
    hit, hit_time = None, None
    for k in range(n):
        if alive[0]:
            dw = rng.standard_normal(1) * math.sqrt(dt)
            x, h0, h1 = _em_step(mech, x, alive, dt, dw, policy, rng)
            if h0[0] or h1[0]:
                alive[0] = False
                hit, hit_time = ("0" if h0[0] else "1"), (k + 1) * dt
        xs[k + 1] = x[0]
    return DiffusionPath(np.arange(n + 1) * dt, xs, dt, "euler-maruyama+bridge", hit, hit_time, (seed, index))


def sample_U(mech: Mechanism, u0: float, n: int, obs, dt: float, *, seed=0, policy=None, paired=True,
             scheme="euler"):
    """U at the observation times for n paths.

    With `paired`, every path is run twice on shared Brownian increments, at
    step dt and dt/2 (the coarse increment is the sum of two fine ones).
    Returns (coarse, fine) arrays of shape (n, len(obs)); fine is None when
    not paired.

    scheme="besq" (unpaired only) replaces the Euler step by the exact
    transition of the squared-Bessel process with coefficients frozen at the
    current point. It resolves the u^(d/c - 1) boundary layer at 0 that Euler
    steps smear out, and detects hitting 0 from the local hitting-time law
    instead of a constant-coefficient bridge.
    """
    policy = policy or boundary_policy(mech)
    if scheme not in ("euler", "besq"):
        raise PreconditionViolated(f"unknown scheme {scheme!r}")
    besq = scheme == "besq"
    if besq and paired:
        raise PreconditionViolated("the squared-Bessel step has no shared-increment coupling; use paired=False")
    obs = np.sort(np.asarray(obs, dtype=float))
    steps = np.rint(obs / dt).astype(int)
    if np.any(np.abs(steps * dt - obs) > 1e-9 * np.maximum(obs, 1)):
        raise PreconditionViolated("observation times must be multiples of dt")
    out_c = np.empty((n, len(obs)))
    out_f = np.empty((n, len(obs))) if paired else None
    coefs = _poly_coefs(mech)
    for b0 in range(0, n, U_BLOCK):
        m = min(n, b0 + U_BLOCK) - b0
        rng = block_rng(seed, b0 // U_BLOCK)
        if coefs is not None:
            _nb_sample(rng, m, float(u0), float(dt), steps, coefs[0], coefs[1], _POLICY[policy[0]],
                       _POLICY[policy[1]], paired, out_c, out_f if paired else out_c, b0, besq)
            continue
        xc = np.full(m, float(u0))
        xf = xc.copy()
        start_alive = 0 < u0 < 1 or (u0 == 0 and policy[0] != "absorb") or (u0 == 1 and policy[1] != "absorb")
        ac = np.full(m, start_alive)
        af = ac.copy()
        k_obs = 0
        h = dt / 2
        for k in range(1, steps[-1] + 1):
            if paired:
                dw1 = rng.standard_normal(m) * math.sqrt(h)
                dw2 = rng.standard_normal(m) * math.sqrt(h)
                for dw in (dw1, dw2):
                    y, h0, h1 = _em_step(mech, xf, af, h, dw, policy, rng)
                    xf = np.where(af, y, xf)
                    af &= ~(h0 | h1)
                y, h0, h1 = _em_step(mech, xc, ac, dt, dw1 + dw2, policy, rng)
            elif besq:
                y, h0, h1 = _besq_step(mech, xc, dt, policy, rng, ac)
            else:
                y, h0, h1 = _em_step(mech, xc, ac, dt, rng.standard_normal(m) * math.sqrt(dt), policy, rng)
            xc = np.where(ac, y, xc)
            ac &= ~(h0 | h1)
            while k_obs < len(steps) and steps[k_obs] == k:
                out_c[b0:b0 + m, k_obs] = xc
                if paired:
                    out_f[b0:b0 + m, k_obs] = xf
                k_obs += 1
    return out_c, out_f


# ---------------------------------------------------------------------------
# exit statistics

def _exit_pre(mech, a, b, u):
    if not (0 < a <= u <= b < 1 and a < b):
        raise PreconditionViolated("need 0 < a <= u <= b < 1")


def exit_probability(mech: Mechanism, a: float, b: float, u: float, theta=0.5) -> float:
    """Probability that U started at u reaches b before a."""
    _exit_pre(mech, a, b, u)
    cache = functional_cache(mech, float(theta))
    sa, sb, su = cache.at("S", np.array([a, b, u]))
    return float((su - sa) / (sb - sa))


def expected_exit_time(mech: Mechanism, a: float, b: float, u: float, theta=0.5) -> float:
    """Mean exit time of (a, b), from the Green function of the scale and speed."""
    _exit_pre(mech, a, b, u)
    if u in (a, b):
        return 0.0
    cache = functional_cache(mech, float(theta))
    S = cache.at("S", np.array([a, u, b]))
    R = cache.at("R", np.array([a, u, b]))
    E = cache.at("E", np.array([a, u, b]))
    sa, su, sb = S
    ra, ru, rb = R
    ea, eu, eb = E
    upper = sb * (rb - ru) - (eb - eu)  # int_u^b (S(b) - S(x)) dR(x)
    lower = (eu - ea) - sa * (ru - ra)  # int_a^u (S(x) - S(a)) dR(x)
    p = (su - sa) / (sb - sa)
    return float(p * upper + (1 - p) * lower)


def _exit_run(mech, a, b, u, n, dt, rng, t_max):
    x = np.full(n, float(u))
    alive = np.full(n, True)
    up = np.zeros(n, dtype=bool)
    tau = np.full(n, np.nan)
    t = 0.0
    while alive.any() and t < t_max:
        idx = np.nonzero(alive)[0]
        xi = x[idx]
        mu, s2 = _coeffs(mech, xi)
        dw = rng.standard_normal(len(idx)) * math.sqrt(dt)
        y = xi + mu * dt + np.sqrt(s2) * dw
        ra = rng.random(len(idx))
        rb = rng.random(len(idx))
        cross_a = (y <= a) | (ra < _bridge(xi, y, a, s2, dt))
        cross_b = ~cross_a & ((y >= b) | (rb < _bridge(xi, y, b, s2, dt)))
        done = cross_a | cross_b
        # crossing time: linear interpolation for sign changes, mid-step for bridge hits
        frac = np.full(len(idx), 0.5)
        with np.errstate(divide="ignore", invalid="ignore"):
            fa = (xi - a) / (xi - y)
            fb = (b - xi) / (y - xi)
        frac = np.where(y <= a, fa, np.where(y >= b, fb, frac))
        tau[idx[done]] = t + dt * np.clip(frac[done], 0, 1)
        up[idx[cross_b]] = True
        x[idx] = np.clip(y, 0.0, 1.0)
        alive[idx[done]] = False
        t += dt
    return up, tau, alive


def exit_mc(mech: Mechanism, a, b, u, n=10**5, dt=1e-4, seed=0, t_max=1e3):
    """MC exit probability and mean exit time with standard errors.

    Returns a dict with estimates at dt and dt/2 (independent streams), so the
    dt-bias allowance can be computed.
    """
    _exit_pre(mech, a, b, u)
    res = {}
    for tag, h, s in (("dt", dt, 0), ("dt/2", dt / 2, 1)):
        ups, taus = [], []
        coefs = _poly_coefs(mech)
        for b0 in range(0, n, U_BLOCK):
            m = min(n, b0 + U_BLOCK) - b0
            rng = block_rng(seed + 7919 * s, b0 // U_BLOCK)
            if coefs is not None:
                up = np.zeros(m, dtype=bool)
                tau = np.empty(m)
                _nb_exit(rng, m, float(u), float(a), float(b), float(h), float(t_max), coefs[0], coefs[1],
                         up, tau, 0)
                alive = np.isnan(tau)
            else:
                up, tau, alive = _exit_run(mech, a, b, u, m, h, rng, t_max)
            if alive.any():
                raise PreconditionViolated("exit not reached within t_max")
            ups.append(up)
            taus.append(tau)
        up = np.concatenate(ups)
        tau = np.concatenate(taus)
        res[tag] = {"p": float(up.mean()), "p_se": float(up.std(ddof=1) / math.sqrt(n)),
                    "t": float(tau.mean()), "t_se": float(tau.std(ddof=1) / math.sqrt(n))}
        if tag == "dt" and n < 1000:
            break
    return res


# ---------------------------------------------------------------------------
# moment duality

@dataclass
class DualityReport:
    mechanism: str
    z: int
    u: float
    t: float
    lhs: float  # E_z[u^{Z_t}]
    lhs_se: float
    rhs: float  # E_u[U_t^z] at dt
    rhs_se: float
    rhs_fine: float
    dt: float
    bias: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = abs(self.lhs - self.rhs) <= 3 * math.hypot(self.lhs_se, self.rhs_se) + self.bias

    def to_dict(self):
        return dict(self.__dict__)


def _z_side(mech, z, us, ts, n, seed, level):
    """E_z[u^{Z_t}] and its standard error for all (u, t); censored states bounded by u^(level+1)."""
    if mech.nearest_neighbour:
        states, _ = sample_birth_death(mech, z, n, ts, level=level, seed=seed)
        cens = states < 0
    else:
        s = sample_chain(mech, z, n, ts, ceiling=10**6, seed=seed)
        states = s.states
        cens = states < 0
    out = {}
    for u in us:
        vals = np.where(cens, 0.5 * u ** (level + 1), np.power(u, np.maximum(states, 0)))
        # unresolved mass above the level contributes at most u^(level+1)
        for j, t in enumerate(ts):
            col = vals[:, j]
            out[(u, t)] = (float(col.mean()), float(col.std(ddof=1) / math.sqrt(n)),
                           float(0.5 * u ** (level + 1) * cens[:, j].mean()))
    return out


def duality_grid(mech: Mechanism, zs=(1, 2, 5), us=(0.2, 0.5, 0.8), ts=(0.5, 1.0), n=10**5, dt=1e-3,
                 seed=0, level=None):
    """Duality reports for every (z, u, t); paths are shared across z (and across u on the Z side)."""
    umax = max(us)
    if level is None:
        level = int(math.ceil(math.log(1e-7) / math.log(umax)))
    reports = []
    zside = {z: _z_side(mech, z, us, ts, n, seed + 1000 + z, level) for z in zs}
    for k, u in enumerate(us):
        coarse, fine = sample_U(mech, u, n, ts, dt, seed=seed + 17 * k)
        for z in zs:
            for j, t in enumerate(ts):
                lhs, lhs_se, cens_bias = zside[z][(u, t)]
                vc = coarse[:, j] ** z
                vf = fine[:, j] ** z
                rhs, rhs_se = float(vc.mean()), float(vc.std(ddof=1) / math.sqrt(n))
                rf = float(vf.mean())
                diff = vc - vf
                # first order in dt: bias(dt) ~ 2 (E_dt - E_dt/2); add the noise of that estimate
                bias = 2 * abs(rhs - rf) + 2 * float(diff.std(ddof=1) / math.sqrt(n)) + cens_bias
                reports.append(DualityReport(mech.name or "mechanism", z, u, t, lhs, lhs_se, rhs, rhs_se,
                                             rf, dt, bias))
    return reports


def duality_check(mech: Mechanism, z: int, u: float, t: float, n=10**5, dt=1e-3, seed=0) -> DualityReport:
    if t == 0:
        v = float(u) ** z
        return DualityReport(mech.name or "mechanism", z, u, 0.0, v, 0.0, v, 0.0, v, dt, 0.0)
    return duality_grid(mech, (z,), (u,), (t,), n=n, dt=dt, seed=seed)[0]


# ---------------------------------------------------------------------------
# stationary law of the dual

def stationary_density_check(mech: Mechanism, n=10**4, T=100.0, dt=1e-2, seed=0, u0=0.5, theta=0.5):
    """KS distance between U_T (many paths) and the stationary CDF from the R-ratio."""
    lr = dual_longrun(mech, theta)
    if lr.kind != LongRunKind.PositiveRecurrent:
        raise PreconditionViolated("stationary law needs a positive recurrent dual")
    scheme = "besq"
    coarse, _ = sample_U(mech, u0, n, [T], dt, seed=seed, paired=False, scheme=scheme)
    x = np.sort(coarse[:, 0])
    cdf = np.array([lr.cdf(v) for v in x])
    emp_hi = np.arange(1, n + 1) / n
    emp_lo = np.arange(0, n) / n
    ks = float(max(np.max(emp_hi - cdf), np.max(cdf - emp_lo)))
    return {"ks": ks, "n": n, "T": T, "dt": dt, "scheme": scheme, "critical_3sigma": 1.36 / math.sqrt(n)}
