"""Monte Carlo engine, experiment drivers and the command line.

Every experiment pairs an analytic computation with a Monte Carlo estimate
(or an exact oracle) and stores the numbers needed to recompute each pass
flag. The default rule is a 3-sigma test; diffusion experiments add a
dt-bias allowance calibrated by halving dt.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import classifier, ctmc_sim, dual_diffusion, extinction_time
from .errors import PreconditionViolated, WorkerPanic
from .functionals import Kind, limit_at
from .mechanisms import Mechanism, named_mechanism

__all__ = [
    "McConfig",
    "Check",
    "ExperimentReport",
    "run_mc",
    "experiment",
    "EXPERIMENTS",
    "load_mechanism",
    "main",
]

THREE_SIGMA = 0.9973002039367398  # two-sided coverage of +-3 standard deviations


@dataclass
class McConfig:
    n_paths: int = 10**4
    seed: int = 0
    workers: int = 1
    confidence: float = THREE_SIGMA
    dt: float = 1e-3
    ceiling: int = 10**6
    horizon: float = 1.0

    def __post_init__(self):
        if self.n_paths < 100:
            raise ValueError("n_paths must be at least 100")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")

    @property
    def sigmas(self) -> float:
        return float(stats.norm.ppf(0.5 + self.confidence / 2))


@dataclass
class Check:
    """One pass/fail rule with everything needed to recompute it.

    rule: 'sigma' (|est - target| <= k*stderr + allowance), 'abs', 'rel',
    'le' (est <= target), 'ge' (est >= target) or 'eq' (string equality).
    """
    name: str
    estimate: object
    target: object
    rule: str = "sigma"
    tol: float = 0.0
    stderr: float = 0.0
    allowance: float = 0.0

    @property
    def passed(self) -> bool:
        if self.rule == "eq":
            return self.estimate == self.target
        est, tgt = float(self.estimate), float(self.target)
        if not (math.isfinite(est) and math.isfinite(tgt)):
            return False
        if self.rule == "sigma":
            return abs(est - tgt) <= self.tol * self.stderr + self.allowance
        if self.rule == "abs":
            return abs(est - tgt) <= self.tol
        if self.rule == "rel":
            return abs(est - tgt) <= self.tol * abs(tgt)
        if self.rule == "le":
            return est <= tgt
        if self.rule == "ge":
            return est >= tgt
        raise ValueError(f"unknown rule {self.rule!r}")

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        return out


@dataclass
class ExperimentReport:
    experiment: str
    mechanism: dict
    inputs: dict
    checks: list
    tables: dict = field(default_factory=dict)
    wall_time: float = 0.0
    seed: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {"experiment": self.experiment, "mechanism": self.mechanism, "inputs": self.inputs,
                "checks": [c.to_dict() for c in self.checks], "passed": self.passed,
                "wall_time": self.wall_time, "seed": self.seed}

    def summary_lines(self):
        for c in self.checks:
            yield f"{'PASS' if c.passed else 'FAIL'}  {self.experiment}: {c.name}"

    def write(self, out_dir, fmt="csv"):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, default=_jsonable)
        for name, rows in self.tables.items():
            if fmt == "jsonl":
                with open(os.path.join(out_dir, f"{name}.jsonl"), "w") as fh:
                    for row in rows:
                        fh.write(json.dumps(row, default=_jsonable) + "\n")
                continue
            with open(os.path.join(out_dir, f"{name}.csv"), "w", newline="") as fh:
                if not rows:
                    continue
                w = csv.DictWriter(fh, fieldnames=list(rows[0]))
                w.writeheader()
                for row in rows:
                    w.writerow({k: _fmt(v) for k, v in row.items()})


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# ---------------------------------------------------------------------------
# Monte Carlo engine

def _welford(values):
    n, mean, m2 = 0, 0.0, 0.0
    for x in values:
        n += 1
        d = x - mean
        mean += d / n
        m2 += d * (x - mean)
    return n, mean, m2


def _merge(a, b):
    na, ma, sa = a
    nb, mb, sb = b
    if na == 0:
        return b
    n = na + nb
    d = mb - ma
    return n, ma + d * nb / n, sa + sb + d * d * na * nb / n


def run_mc(task, cfg: McConfig, chunk=1024):
    """Mean and standard error of task(seed, index) over index = 0..n_paths-1.

    Chunks are reduced in index order, so the result does not depend on the
    worker count.
    """
    n = cfg.n_paths

    def chunk_stats(lo):
        vals = []
        for i in range(lo, min(n, lo + chunk)):
            try:
                vals.append(float(task(cfg.seed, i)))
            except Exception as exc:  # surfaced with the failing index
                raise WorkerPanic(i, exc) from exc
        return _welford(vals)

    starts = list(range(0, n, chunk))
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            parts = list(pool.map(chunk_stats, starts))
    else:
        parts = [chunk_stats(s) for s in starts]
    acc = (0, 0.0, 0.0)
    for p in parts:
        acc = _merge(acc, p)
    cnt, mean, m2 = acc
    var = m2 / (cnt - 1) if cnt > 1 else 0.0
    return mean, math.sqrt(var / cnt), {"n": cnt, "variance": var}


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


# ---------------------------------------------------------------------------
# experiment drivers

def _exp_duality(mech, p, cfg):
    reps = dual_diffusion.duality_grid(mech, tuple(p.get("zs", (1, 2, 5))), tuple(p.get("us", (0.2, 0.5, 0.8))),
                                       tuple(p.get("ts", (0.5, 1.0))), n=cfg.n_paths, dt=p.get("dt", cfg.dt),
                                       seed=cfg.seed)
    k = cfg.sigmas
    checks, rows = [], []
    for r in reps:
        se = math.hypot(r.lhs_se, r.rhs_se)
        checks.append(Check(f"z={r.z} u={r.u} t={r.t}", r.lhs, r.rhs, "sigma", k, se, r.bias))
        rows.append({"z": r.z, "u": r.u, "t": r.t, "lhs": r.lhs, "lhs_se": r.lhs_se, "rhs": r.rhs,
                     "rhs_se": r.rhs_se, "rhs_half_dt": r.rhs_fine, "bias": r.bias})
    return checks, {"duality": rows}


def _exp_extinction_prob(mech, p, cfg):
    zs = list(p.get("zs", range(1, 11)))
    law = classifier.extinction_law(mech)
    orc = ctmc_sim.absorption_oracle(mech, 0, int(p.get("N", 2000)))
    checks, rows = [], []
    expected = p.get("expect_kind")
    if expected:
        checks.append(Check("extinction kind", law.kind.value, expected, "eq"))
    for z in zs:
        o = orc.p(z)
        if law.kind == classifier.ExtinctionKind.Probability:
            f = law.p(z)
            checks.append(Check(f"p({z}) formula vs oracle", f, o, "rel", p.get("rel_tol", 1e-3)))
        elif law.kind == classifier.ExtinctionKind.AlmostSure:
            f = 1.0
            checks.append(Check(f"p({z}) oracle equals 1", o, 1.0, "abs", p.get("abs_tol", 1e-6)))
        else:
            f = float("nan")
        rows.append({"z": z, "formula": f, "oracle": o, "oracle_error": orc.p_error(z)})
    return checks, {"extinction_prob": rows}


def _exp_extinction_time(mech, p, cfg):
    z = int(p.get("z", 3))
    qs = list(p.get("qs", (0.5, 1.0, 2.0)))
    T = float(p.get("horizon", 1e3))
    tol = float(p.get("rel_tol", 0.02))
    s = ctmc_sim.sample_chain(mech, z, cfg.n_paths, horizon=T, ceiling=cfg.ceiling, seed=cfg.seed)
    extinct = s.codes == 1
    frac = float(extinct.mean())
    te = np.where(extinct, s.end_times, np.inf)
    checks = [Check(f"extinct fraction by T={T:g}", frac, p.get("min_fraction", 0.999), "ge")]
    mean_a = extinction_time.mean_zeta0(mech, z)
    mc_mean, mc_se = _mean_se(s.end_times[extinct])
    checks.append(Check(f"mean zeta_0 from z={z}", mean_a, mc_mean, "rel", tol))
    rows = [{"quantity": "mean", "q": "", "analytic": mean_a, "mc": mc_mean, "mc_se": mc_se}]
    for q in qs:
        la = extinction_time.laplace_zeta0(mech, z, q)
        mc, se = _mean_se(np.exp(-q * te))
        checks.append(Check(f"Laplace at q={q}", la, mc, "rel", tol))
        rows.append({"quantity": "laplace", "q": q, "analytic": la, "mc": mc, "mc_se": se})
    return checks, {"extinction_time": rows}


def _sibuya_gamma(mech):
    if (mech.d == 0 and mech.c == 1 and not mech.pi.has_tail and not mech.bb.has_tail
            and len(mech.pi.weights) == 1 and mech.bb.weights == (1.0,)):
        return 1.0 - mech.pi.weights[0]
    return None


def _exp_stationary(mech, p, cfg):
    law = classifier.stationary_Z(mech)
    kmax = int(p.get("kmax", 5))
    T = float(p.get("T", 200.0))
    masses = law.coefficients(max(kmax, 10))
    checks = []
    gamma = _sibuya_gamma(mech)
    if gamma is not None:
        us = np.round(np.arange(1, 10) * 0.1, 10)
        ref = 1 - (1 - us) ** gamma
        err = float(np.max(np.abs(law.pgf(us) - ref)))
        checks.append(Check("pgf vs Sibuya closed form", err, 0.0, "abs", 1e-6))
        checks.append(Check("P(1)", masses[1], gamma, "abs", 1e-6))
        checks.append(Check("P(2)", masses[2], gamma * (1 - gamma) / 2, "abs", 1e-6))
    z0 = int(p.get("z0", 1))
    if mech.nearest_neighbour:
        collapse = p.get("collapse_above", 10**4 if abs(mech.b - mech.c) < 1e-15 else None)
        states, approx = ctmc_sim.sample_birth_death(mech, z0, cfg.n_paths, [T], level=max(kmax, z0),
                                                     collapse_above=collapse, seed=cfg.seed)
        approx_frac = float(approx.mean())
    else:
        states = ctmc_sim.sample_chain(mech, z0, cfg.n_paths, [T], ceiling=cfg.ceiling, seed=cfg.seed).states
        approx_frac = 0.0
    x = states[:, 0]
    rows = []
    for k in range(1, kmax + 1):
        mc, se = _mean_se(x == k)
        checks.append(Check(f"MC P(Z_{T:g}={k})", mc, masses[k], "sigma", cfg.sigmas, se))
        rows.append({"k": k, "analytic": masses[k], "mc": mc, "mc_se": se})
    rows.append({"k": "approx_fraction", "analytic": "", "mc": approx_frac, "mc_se": ""})
    return checks, {"stationary": rows}


def _exp_explosion(mech, p, cfg):
    Ms = [int(m) for m in p.get("Ms", (10**4, 10**5, 10**6))]
    t = float(p.get("t", 1.0))
    z0 = int(p.get("z0", 1))
    e1 = limit_at("E", mech, 0.5, 1)
    cons, explodes = classifier.classify_explosion(mech)
    rows, probs = [], []
    for M in Ms:
        s = ctmc_sim.sample_chain(mech, z0, cfg.n_paths, horizon=t, ceiling=M, seed=cfg.seed)
        ph, se = _mean_se(s.codes == 3)
        probs.append((ph, se))
        rows.append({"M": M, "p_hit": ph, "se": se})
    rows.append({"M": "E_verdict", "p_hit": e1.kind.value, "se": ""})
    checks = []
    expect = p.get("expect")
    if expect == "explosive":
        checks.append(Check("E(theta;1) verdict", e1.kind.value, Kind.Finite.value, "eq"))
        for M, (ph, se) in zip(Ms, probs):
            checks.append(Check(f"P(hit {M} before t={t:g}) above 0.1", ph, 0.1, "ge"))
        (a, sa), (b, sb) = probs[-2], probs[-1]
        checks.append(Check(f"stabilised between M={Ms[-2]} and M={Ms[-1]}", b, a, "sigma", cfg.sigmas,
                            math.hypot(sa, sb)))
    elif expect == "conservative":
        checks.append(Check("classifier: conservative", cons.value.value, "Yes", "eq"))
        ph, se = probs[-1]
        checks.append(Check(f"P(hit {Ms[-1]} before t={t:g}) below 1e-3", ph, p.get("max_p", 1e-3), "le"))
    return checks, {"explosion": rows}


def _exp_lamperti(mech, p, cfg):
    z0 = int(p.get("z0", 5))
    ts = list(p.get("ts", (0.1, 0.3, 1.0)))
    us = list(p.get("us", (0.2, 0.5, 0.8)))
    n = cfg.n_paths
    zs = ctmc_sim.sample_chain(mech, z0, n, ts, horizon=max(max(ts), 1e3), ceiling=cfg.ceiling,
                               seed=cfg.seed, target=1)
    zeta_direct = zs.end_times[zs.codes == 4]
    sc = ctmc_sim.SimConfig(ceiling=cfg.ceiling, horizon=1e6, seed=cfg.seed + 1)
    zeta_x, x_states = [], np.empty((n, len(ts)))
    for i in range(n):
        tr = ctmc_sim.lamperti_transform(ctmc_sim.simulate_X(mech, z0, sc, i, target=1))
        if tr.terminal == ctmc_sim.Terminal.TargetHit:
            zeta_x.append(tr.terminal_time)
        x_states[i] = [tr.state_at(t) for t in ts]
    zeta_x = np.array(zeta_x)
    ks = stats.ks_2samp(zeta_direct, zeta_x)
    checks = [Check("KS two-sample p-value on zeta_1", float(ks.pvalue), p.get("min_pvalue", 0.01), "ge")]
    # before zeta_1 the direct path is recorded on the same event sequence; after it Z sits in the target
    direct = np.where(zs.states >= 0, zs.states, 0)
    rows = [{"t": "zeta_1", "u": "", "direct": float(zeta_direct.mean()), "via_X": float(zeta_x.mean()),
             "se": float(ks.statistic)}]
    for j, t in enumerate(ts):
        for u in us:
            a, sa = _mean_se(np.power(u, direct[:, j]))
            b, sb = _mean_se(np.power(u, x_states[:, j]))
            checks.append(Check(f"pgf u={u} t={t}", a, b, "sigma", cfg.sigmas, math.hypot(sa, sb)))
            rows.append({"t": t, "u": u, "direct": a, "via_X": b, "se": math.hypot(sa, sb)})
    return checks, {"lamperti": rows}


def _exp_exit(mech, p, cfg):
    a, b, u = float(p.get("a", 0.2)), float(p.get("b", 0.8)), float(p.get("u", 0.5))
    dt = float(p.get("dt", 1e-4))
    pa = dual_diffusion.exit_probability(mech, a, b, u)
    ta = dual_diffusion.expected_exit_time(mech, a, b, u)
    mc = dual_diffusion.exit_mc(mech, a, b, u, n=cfg.n_paths, dt=dt, seed=cfg.seed)
    c, f = mc["dt"], mc["dt/2"]
    k = cfg.sigmas
    # first-order bias: E_dt - E_0 ~ 2 (E_dt - E_dt/2), less the noise of that difference
    bias_p = max(0.0, 2 * (abs(c["p"] - f["p"]) - k * math.hypot(c["p_se"], f["p_se"])))
    bias_t = max(0.0, 2 * (abs(c["t"] - f["t"]) - k * math.hypot(c["t_se"], f["t_se"])))
    checks = [Check("exit probability", c["p"], pa, "sigma", k, c["p_se"], bias_p),
              Check("mean exit time", c["t"], ta, "sigma", k, c["t_se"], bias_t)]
    if mech.d == 0 and mech.rho == 0 and mech.b == 0:
        checks.append(Check("scale is linear: (u-a)/(b-a)", pa, (u - a) / (b - a), "abs", 1e-12))
    rows = [{"quantity": "probability", "analytic": pa, "mc_dt": c["p"], "mc_dt_half": f["p"], "se": c["p_se"],
             "bias": bias_p},
            {"quantity": "mean_time", "analytic": ta, "mc_dt": c["t"], "mc_dt_half": f["t"], "se": c["t_se"],
             "bias": bias_t}]
    return checks, {"exit_stats": rows}


def _exp_cdi(mech, p, cfg):
    a = int(p.get("a", 1))
    zs = [int(z) for z in p.get("zs", (10**2, 10**3, 10**4))]
    verdict = classifier.cdi_check(mech)
    meds, rows = [], []
    for z in zs:
        s = ctmc_sim.sample_chain(mech, z, cfg.n_paths, horizon=1e6, ceiling=cfg.ceiling, seed=cfg.seed,
                                  target=a)
        med = float(np.median(s.end_times))
        meds.append(med)
        rows.append({"z": z, "median_zeta_a": med, "hit_fraction": float((s.codes == 4).mean())})
    checks = [Check("classifier: comes down from infinity", verdict.value.value, "Yes", "eq")]
    for (z1, m1), (z2, m2) in zip(zip(zs, meds), zip(zs[1:], meds[1:])):
        checks.append(Check(f"median change {z1}->{z2} below 10% of z={zs[0]}", abs(m2 - m1), 0.1 * meds[0], "le"))
    return checks, {"cdi": rows}


def _exp_pgfx(mech, p, cfg):
    z0 = int(p.get("z0", 2))
    us = list(p.get("us", (0.2, 0.5, 0.8)))
    ts = list(p.get("ts", (0.25, 0.5, 1.0)))
    s = ctmc_sim.sample_chain(mech, z0, cfg.n_paths, ts, chain="X", ceiling=cfg.ceiling, seed=cfg.seed,
                              stop_at_zero=False)
    if np.any(s.states < 0):
        raise PreconditionViolated("X paths passed the ceiling; raise it")
    checks, rows = [], []
    for j, t in enumerate(ts):
        for u in us:
            a = ctmc_sim.pgf_X_closed_form(mech, z0, u, t)
            mc, se = _mean_se(np.power(u, s.states[:, j]))
            checks.append(Check(f"u={u} t={t}", mc, a, "sigma", cfg.sigmas, se))
            rows.append({"t": t, "u": u, "closed_form": a, "mc": mc, "se": se})
    return checks, {"pgf_x": rows}


EXPERIMENTS = {
    "duality": _exp_duality,
    "extinction-prob": _exp_extinction_prob,
    "extinction-time": _exp_extinction_time,
    "stationary": _exp_stationary,
    "explosion-proxy": _exp_explosion,
    "lamperti-equivalence": _exp_lamperti,
    "exit-stats": _exp_exit,
    "cdi-proxy": _exp_cdi,
    "pgfX": _exp_pgfx,
}


def experiment(name: str, mech: Mechanism, params: dict | None = None, cfg: McConfig | None = None
               ) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
    cfg = cfg or McConfig()
    params = dict(params or {})
    t0 = time.perf_counter()
    checks, tables = EXPERIMENTS[name](mech, params, cfg)
    return ExperimentReport(name, mech.to_dict(), {"params": params, "mc": asdict(cfg)}, checks, tables,
                            time.perf_counter() - t0, cfg.seed)


# ---------------------------------------------------------------------------
# command line

def load_mechanism(source) -> Mechanism:
    """A mechanism from a name, a JSON string, '@file' or an already parsed dict."""
    if isinstance(source, Mechanism):
        return source
    if isinstance(source, dict):
        return Mechanism.from_dict(source)
    source = str(source)
    if source.startswith("@"):
        with open(source[1:]) as fh:
            return Mechanism.from_json(fh.read())
    if source.lstrip().startswith("{"):
        return Mechanism.from_json(source)
    return named_mechanism(source)


_SUBCOMMANDS = {
    "duality": "duality",
    "stationary": "stationary",
    "explosion": "explosion-proxy",
    "lamperti": "lamperti-equivalence",
    "exit-stats": "exit-stats",
    "cdi": "cdi-proxy",
}


def _parser():
    ap = argparse.ArgumentParser(prog="bpi", description="Branching processes with pairwise interactions.")
    ap.add_argument("--config", help="JSON file with mechanism, experiment, params and mc sections")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default="out")
    ap.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sub = ap.add_subparsers(dest="command")

    def common(p, n=10**4):
        p.add_argument("--mechanism", "-m", default=None, help="name (lb, kingman, sibuya), JSON or @file")
        p.add_argument("--n", type=int, default=n, help="Monte Carlo paths")
        p.add_argument("--params", default="{}", help="JSON object of experiment parameters")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("classify", help="qualitative behaviour report")
    p.add_argument("--mechanism", "-m", default="lb")
    p.add_argument("--explain", action="store_true")
    p.add_argument("--theta", type=float, default=0.5)

    p = sub.add_parser("simulate", help="one trajectory of Z or X")
    p.add_argument("--mechanism", "-m", default="lb")
    p.add_argument("--chain", choices=("Z", "X"), default="Z")
    p.add_argument("--z0", type=int, default=5)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--ceiling", type=int, default=10**6)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="write the compact binary format")

    for cmd in _SUBCOMMANDS:
        common(sub.add_parser(cmd, help=f"run the {_SUBCOMMANDS[cmd]} experiment"))
    p = sub.add_parser("extinction", help="extinction probability or extinction time experiment")
    common(p)
    p.add_argument("--what", choices=("prob", "time"), default="prob")

    p = sub.add_parser("riccati", help="tabulate w_q on its grid")
    p.add_argument("--mechanism", "-m", default="lb")
    p.add_argument("--q", type=float, default=1.0)
    return ap


def _run_experiment(name, mech, params, cfg, args):
    rep = experiment(name, mech, params, cfg)
    rep.write(args.out, args.format)
    for line in rep.summary_lines():
        print(line)
    return 0 if rep.passed else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
        mc = dict(conf.get("mc", {}))
        if args.seed is not None:
            mc["seed"] = args.seed
        return _run_experiment(conf["experiment"], load_mechanism(conf["mechanism"]), conf.get("params", {}),
                               McConfig(**mc), args)
    seed = 0 if args.seed is None else args.seed
    if args.command is None:
        _parser().print_help()
        return 2
    if args.command == "classify":
        rep = classifier.classify(load_mechanism(args.mechanism), args.theta)
        text = rep.to_json(args.explain)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "report.json"), "w") as fh:
            fh.write(text)
        print(text)
        return 0
    if args.command == "simulate":
        mech = load_mechanism(args.mechanism)
        sc = ctmc_sim.SimConfig(ceiling=args.ceiling, horizon=args.horizon, seed=seed)
        sim = ctmc_sim.simulate_Z if args.chain == "Z" else ctmc_sim.simulate_X
        tr = sim(mech, args.z0, sc, args.index)
        os.makedirs(args.out, exist_ok=True)
        if args.binary:
            with open(os.path.join(args.out, "trajectory.bin"), "wb") as fh:
                ctmc_sim.write_binary(tr, fh)
        else:
            with open(os.path.join(args.out, "trajectory.jsonl"), "w") as fh:
                ctmc_sim.write_jsonl(tr, fh)
        print(f"{tr.terminal.value} at t={tr.terminal_time:.6g} after {tr.n_events} events")
        return 0
    if args.command == "riccati":
        mech = load_mechanism(args.mechanism)
        rs = extinction_time.solve_wq(mech, args.q)
        rows = [{"x": float(x), "w": float(w), "envelope": float(e)} for x, w, e in zip(rs.grid, rs.w, rs.envelope)]
        rep = ExperimentReport("riccati", mech.to_dict(), {"q": args.q},
                               [Check("w vanishes at xi", rs.w[-1], 1e-6 * rs.w.max(), "le")],
                               {"riccati": rows}, 0.0, seed)
        rep.write(args.out, args.format)
        print(f"int w_q = {rs.integral():.10g}, E_inf[exp(-q zeta_0)] = {math.exp(-rs.integral()):.10g}")
        return 0 if rep.passed else 1
    mech = load_mechanism(args.mechanism or ("lb" if args.command in ("extinction", "cdi") else "kingman"))
    name = _SUBCOMMANDS.get(args.command)
    if args.command == "extinction":
        name = "extinction-prob" if args.what == "prob" else "extinction-time"
    cfg = McConfig(n_paths=args.n, seed=seed, workers=args.workers)
    return _run_experiment(name, mech, json.loads(args.params), cfg, args)


if __name__ == "__main__":
    sys.exit(main())
