"""Monte Carlo experiments for the limit theorems.

Three experiments share one configuration type:

``wlln``
    empirical energy at ``o`` over ``phi_n(o)``, and the error of the
    ball-restricted empirical Fréchet mean;
``euclidean``
    replicate cloud of ``(Y_1 + ... + Y_n) / sqrt(2 phi_n)`` against
    ``MVN(0, V_n)``;
``clt``
    replicate cloud of ``sqrt(2 phi_n) log_o(x_n)`` against
    ``MVN(0, H~_n^-1 V_n H~_n^-1)``.

Replicate ``r`` of row ``n`` uses the sample ``X_1..X_n`` drawn from the
streams ``(seed, r, i)``, so rows share their first observations and results
do not depend on thread count.
"""

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _rng
from .diagnostics import (FamilyMoments, clt_prediction, local_lindeberg,
                          clt_condition_report)
from .errors import ConfigError, CutLocus, DegenerateModel, NonConvergence
from .families import DistributionFamily, family_from_config
from .frechet import Sample, SolverOptions, frechet_mean
from .transport import MultivariateNormal, w1_sample_vs_mvn

MODES = ("wlln", "euclidean", "clt")
W1_TAG = 0x5731  # "W1"
MAX_FAILURE_FRACTION = 0.05
REPORT_SCHEDULE = (16, 64, 256, 1024)


@dataclass
class ExperimentConfig:
    family: DistributionFamily
    mode: str = "clt"
    n_schedule: tuple = (16, 64, 256, 1024)
    replicates: int = 256
    seed: int = 0
    solver: SolverOptions = None
    method: str = "gd"
    w1_reps: int = 8
    w1_cap: int = 512
    epsilon_list: tuple = (0.1, 0.01)
    oracle_draws: int = 50_000
    threads: int = 1
    source: dict = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        sched = [int(n) for n in self.n_schedule]
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] < 1:
            raise ConfigError("n_schedule must be a nonempty increasing list of positive integers")
        self.n_schedule = tuple(sched)
        if not 2 <= self.replicates <= self.w1_cap:
            raise ConfigError(f"replicates must lie in [2, {self.w1_cap}] (the W1 cloud size)")
        if self.method not in ("gd", "newton"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if self.solver is None:
            fam = self.family
            radius = fam.r_max if fam.r_max is not None else np.inf
            self.solver = SolverOptions(ball_center=fam.center, ball_radius=radius) \
                if np.isfinite(radius) else SolverOptions()

    def config_hash(self):
        return config_hash(self.source) if self.source is not None else None


@dataclass
class ExperimentResult:
    mode: str
    rows: list
    provenance: dict
    clouds: dict = field(default_factory=dict)
    report: dict = None

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(cfg):
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def config_from_dict(cfg, seed=None, threads=None):
    """Build an :class:`ExperimentConfig` from a parsed JSON document."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    try:
        fam = family_from_config(cfg["family"])
        sol = cfg.get("solver", {})
        radius = sol.get("ball_radius", fam.r_max)
        opts = SolverOptions(
            max_iters=int(sol.get("max_iters", 500)),
            grad_tol=float(sol.get("grad_tol", 1e-9)),
            step_shrink=float(sol.get("step_shrink", 0.5)),
            ball_center=None if radius is None else fam.center,
            ball_radius=None if radius is None else float(radius),
        )
        w1 = cfg.get("w1", {})
        return ExperimentConfig(
            family=fam,
            mode=cfg.get("mode", "clt"),
            n_schedule=tuple(cfg.get("n_schedule", (16, 64, 256, 1024))),
            replicates=int(cfg.get("replicates", 256)),
            seed=int(cfg.get("seed", 0) if seed is None else seed),
            solver=opts,
            method=sol.get("method", "gd"),
            w1_reps=int(w1.get("reps", 8)),
            w1_cap=int(w1.get("cap", 512)),
            epsilon_list=tuple(float(e) for e in cfg.get("epsilon_list", (0.1, 0.01))),
            oracle_draws=int(cfg.get("oracle_draws", 50_000)),
            threads=int(cfg.get("threads", 1) if threads is None else threads),
            source=cfg,
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc


def _threads(n):
    import os

    return max(1, os.cpu_count() or 1) if n == 0 else max(1, n)


def _map(fn, items, threads):
    """Ordered map; results come back indexed, so thread count does not matter."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return float("nan"), float("nan")
    if len(x) == 1:
        return float(x[0]), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def _provenance(cfg):
    return {"config_hash": cfg.config_hash(), "root_seed": cfg.seed, "library_version": __version__,
            "mode": cfg.mode, "replicates": cfg.replicates, "oracle_draws": cfg.oracle_draws,
            "w1_reps": cfg.w1_reps, "lindeberg_form": "unhalved"}


def _moments(cfg):
    return FamilyMoments(cfg.family, cfg.oracle_draws, cfg.seed)


def _coords(cfg, n):
    """Tangent draws for all replicates, shape ``(R, n, d)``."""
    return cfg.family.tangent_coords(cfg.seed, np.arange(cfg.replicates), np.arange(1, n + 1))


def _lindeberg_entries(mom, o, n, eps_list):
    out = {}
    for eps in eps_list:
        v, se = local_lindeberg(mom, o, eps, n, halved=False, return_se=True)
        out[f"lindeberg@{eps!r}"] = v
        out[f"lindeberg@{eps!r}_se"] = se
    return out


def _solve_replicates(cfg, pts):
    """Ball-restricted local means for each replicate sample; failures become ``None``."""
    m = cfg.family.manifold

    def one(r):
        try:
            return frechet_mean(Sample(m, pts[r]), None, cfg.solver, cfg.method).estimate
        except (NonConvergence, CutLocus):
            return None

    return _map(one, range(len(pts)), _threads(cfg.threads))


def _w1_seed(cfg, n):
    return _rng.derive_seed(cfg.seed, W1_TAG, n)


def run_wlln_experiment(cfg):
    """Weak-law ratio and consistency of the local empirical Fréchet mean.

    Per ``n``: ``ratio`` is the replicate mean of ``sum_i 1/2 dist(X_i, o)**2 /
    phi_n(o)`` with a standard error combining replicate scatter and the
    moment oracle's error; ``mean_error`` is the replicate mean of
    ``dist(x_n, o)`` over solves that converged.

    Raises
    ------
    DegenerateModel
        ``phi_n(o) = 0``.
    """
    fam = cfg.family
    m, o = fam.manifold, fam.center
    mom = _moments(cfg)
    rows = []
    for n in cfg.n_schedule:
        phi, phi_se = mom_energy(mom, o, n)
        pts = fam.points_from_coords(_coords(cfg, n))
        emp = 0.5 * np.sum(m.dist(o, pts) ** 2, axis=1)
        ratio, ratio_se = _mean_se(emp / phi)
        ratio_se = math.hypot(ratio_se, ratio * phi_se / phi)
        est = _solve_replicates(cfg, pts)
        errs = [float(m.dist(o, x)) for x in est if x is not None]
        err, err_se = _mean_se(errs)
        row = {"n": n, "ratio": ratio, "ratio_se": ratio_se, "phi_n": phi, "phi_se": phi_se,
               "mean_error": err, "mean_error_se": err_se,
               "failures": sum(x is None for x in est), "replicates": cfg.replicates}
        row.update(_lindeberg_entries(mom, o, n, cfg.epsilon_list))
        rows.append(row)
    return ExperimentResult("wlln", rows, _provenance(cfg))


def mom_energy(mom, o, n):
    from .diagnostics import aggregate_energy

    phi, se = aggregate_energy(mom, o, n, return_se=True)
    if phi <= 0:
        raise DegenerateModel("aggregate energy at the centre is zero")
    return phi, se


def _tail_ratio(mom, o, n, phi):
    """``E|Y_n|**2 / phi_n`` for the last index."""
    last = mom.family.law_keys([n])[0]
    key, first, _ = next(g for g in mom.family.law_groups(n) if g[0] == last)
    return 2.0 * float(mom.oracle(key, first).expected_half_dist_sq(o)) / phi


def _w1_row(cfg, cloud, cov, n):
    mvn = MultivariateNormal.centered(cov)
    est = w1_sample_vs_mvn(cloud, mvn, cfg.w1_reps, _w1_seed(cfg, n), cfg.w1_cap)
    return {"w1": est.value, "w1_se": est.std_error, "baseline": est.baseline,
            "baseline_se": est.baseline_se, "excess_se": est.excess_se, "w1_reps": est.reps}


def run_euclidean_approx_experiment(cfg):
    """Normalised sums of tangent vectors against ``MVN(0, V_n)``."""
    fam = cfg.family
    if not fam.is_tangent_only:
        raise ConfigError("the Euclidean approximation experiment needs a Euclidean family")
    o, frame = fam.center, fam.frame
    mom = _moments(cfg)
    rows, clouds = [], {}
    for n in cfg.n_schedule:
        pred = clt_prediction(mom, o, n, frame)
        phi = pred.phi_n_at_o
        if phi <= 0:
            raise DegenerateModel("aggregate energy at the centre is zero")
        c = _coords(cfg, n)
        cloud = c.sum(axis=1) / math.sqrt(2.0 * phi)
        clouds[n] = cloud
        row = {"n": n, "phi_n": phi, "phi_se": pred.phi_se, "V_n": pred.V_n.tolist(),
               "tail_ratio": _tail_ratio(mom, o, n, phi), "failures": 0, "replicates": cfg.replicates,
               "mean_error": float("nan"), "mean_error_se": float("nan"),
               "ratio": float("nan"), "ratio_se": float("nan")}
        row.update(_w1_row(cfg, cloud, pred.V_n, n))
        row.update(_lindeberg_entries(mom, o, n, cfg.epsilon_list))
        rows.append(row)
    return ExperimentResult("euclidean", rows, _provenance(cfg), clouds)


def replicate_covariance(w):
    """Sample covariance of the rows of ``w`` and entrywise standard errors."""
    w = np.asarray(w, float)
    r = len(w)
    z = w - w.mean(axis=0)
    prod = z[:, :, None] * z[:, None, :]
    cov = prod.sum(axis=0) / (r - 1)
    se = prod.std(axis=0, ddof=1) / math.sqrt(r)
    return cov, se


def run_manifold_clt_experiment(cfg, check_hypotheses=True):
    """Rescaled local Fréchet means against ``MVN(0, H~_n^-1 V_n H~_n^-1)``.

    Rows with more than 5% failed replicate solves are marked ``aborted`` and
    carry no distance estimate.
    """
    fam = cfg.family
    m, o, frame = fam.manifold, fam.center, fam.frame
    mom = _moments(cfg)
    report = None
    verified = None
    if check_hypotheses:
        sched = sorted(set(cfg.n_schedule) | set(REPORT_SCHEDULE))
        report = clt_condition_report(mom, o, frame, n_schedule=sched,
                                            epsilons=cfg.epsilon_list).to_dict()
        verified = report["flags"]["all"]
    rows, clouds = [], {}
    for n in cfg.n_schedule:
        pred = clt_prediction(mom, o, n, frame)
        phi = pred.phi_n_at_o
        pts = fam.points_from_coords(_coords(cfg, n))
        est = _solve_replicates(cfg, pts)
        ok = [x for x in est if x is not None]
        fails = len(est) - len(ok)
        row = {"n": n, "phi_n": phi, "phi_se": pred.phi_se, "failures": fails,
               "replicates": cfg.replicates, "predicted_cov": pred.predicted_cov.tolist(),
               "predicted_cov_se": pred.predicted_cov_se.tolist(), "H_tilde_n": pred.H_tilde_n.tolist(),
               "V_n": pred.V_n.tolist(), "hypotheses_verified": verified,
               "ratio": float("nan"), "ratio_se": float("nan")}
        errs = [float(m.dist(o, x)) for x in ok]
        row["mean_error"], row["mean_error_se"] = _mean_se(errs)
        if fails > MAX_FAILURE_FRACTION * len(est):
            row.update(aborted=True, w1=float("nan"), w1_se=float("nan"),
                       baseline=float("nan"), baseline_se=float("nan"))
        else:
            w = math.sqrt(2.0 * phi) * m.coords(frame, m.log(o, np.stack(ok)))
            clouds[n] = w
            cov, cov_se = replicate_covariance(w)
            tot_se = np.hypot(cov_se, pred.predicted_cov_se)
            row.update(aborted=False, sample_cov=cov.tolist(), sample_cov_se=cov_se.tolist(),
                       cov_within_3se=bool(np.all(np.abs(cov - pred.predicted_cov) <= 3 * tot_se)))
            row.update(_w1_row(cfg, w, pred.predicted_cov, n))
        row.update(_lindeberg_entries(mom, o, n, cfg.epsilon_list))
        rows.append(row)
    return ExperimentResult("clt", rows, _provenance(cfg), clouds, report)


def run_experiment(cfg):
    return {"wlln": run_wlln_experiment, "euclidean": run_euclidean_approx_experiment,
            "clt": run_manifold_clt_experiment}[cfg.mode](cfg)


# Trend logic ----------------------------------------------------------------------

def trend_ok(first, last, baseline=0.0, margin=0.0):
    """Last value no larger than the first and within ``margin`` of ``baseline``."""
    return bool(last <= first and last <= baseline + margin)


def feller_converse_check(n, tail_ratio, phi, lindeberg, w1, baseline, precond_tol=0.05,
                          growth_min=4.0, lindeberg_tol=0.05, w1_margin=0.05):
    """Finite-n consistency of the Feller converse.

    The converse applies when ``E|Y_n|**2 / phi_n`` trends to 0 and ``phi_n``
    grows.  Then a W1 curve that trends to its baseline forces the Lindeberg
    curve to trend to 0; the report is ``inconsistent`` only if the W1 curve
    settles while the Lindeberg curve does not.
    """
    tail_ratio, phi, lind = (np.asarray(a, float) for a in (tail_ratio, phi, lindeberg))
    w1, base = np.asarray(w1, float), np.asarray(baseline, float)
    pre = bool(trend_ok(tail_ratio[0], tail_ratio[-1], 0.0, precond_tol)
               and np.all(np.diff(phi) > 0) and phi[-1] >= growth_min * phi[0])
    lind_zero = trend_ok(lind[0], lind[-1], 0.0, lindeberg_tol)
    w1_zero = bool(w1[-1] <= base[-1] + w1_margin)
    w1_decreasing = bool(w1[-1] < w1[0])
    if not pre:
        status = "not_applicable"
    elif w1_zero and not lind_zero:
        status = "inconsistent"
    else:
        status = "consistent"
    return {"n": [int(k) for k in n], "preconditions_hold": pre, "lindeberg_to_zero": lind_zero,
            "lindeberg_violation_flag": not lind_zero, "w1_to_baseline": w1_zero,
            "w1_decreasing": w1_decreasing, "status": status}


def feller_from_result(result, epsilon=0.1, **kw):
    rows = result.rows
    return feller_converse_check([r["n"] for r in rows], [r["tail_ratio"] for r in rows],
                                 [r["phi_n"] for r in rows], [r[f"lindeberg@{epsilon!r}"] for r in rows],
                                 [r["w1"] for r in rows], [r["baseline"] for r in rows], **kw)


def mean_error_decreases(cfg, seeds):
    """For each root seed: does the mean error shrink from the first row to the last?"""
    out = []
    for s in seeds:
        c = ExperimentConfig(**{**cfg.__dict__, "seed": int(s)})
        res = run_wlln_experiment(c)
        out.append(bool(res.rows[-1]["mean_error"] < res.rows[0]["mean_error"]))
    return out
