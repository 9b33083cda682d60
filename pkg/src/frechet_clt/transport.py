"""Multivariate normal sampling and the truncated Wasserstein-1 distance.

For two equal-size point clouds the truncated distance is the optimal
matching cost with ground cost ``min(1, |u - v|)``, divided by the cloud size.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .errors import CapExceeded, ConfigError, SizeMismatch

ASSIGNMENT_CAP = 512
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MultivariateNormal:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        d = len(mean)
        if cov.shape != (d, d):
            raise ConfigError(f"covariance shape {cov.shape} does not match mean length {d}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
            raise ConfigError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        w, q = np.linalg.eigh(cov)
        if w.min(initial=0.0) < -PSD_TOL:
            raise ConfigError(f"covariance has eigenvalue {w.min():.3g} < -{PSD_TOL:g}")
        w = np.clip(w, 0.0, None)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (q * w) @ q.T)
        object.__setattr__(self, "_root", (q * np.sqrt(w)) @ q.T)

    @property
    def dim(self):
        return len(self.mean)

    @classmethod
    def centered(cls, cov):
        cov = np.atleast_2d(cov)
        return cls(np.zeros(len(cov)), cov)


def sample_mvn(m, count, seed):
    """``count`` iid draws ``mean + sqrtm(cov) z``; deterministic per ``seed``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    z = np.random.default_rng(seed).standard_normal((count, m.dim))
    return m.mean + z @ m._root


@dataclass
class WassersteinEstimate:
    value: float
    method: str = "exact_assignment"
    std_error: float = None
    baseline: float = None
    baseline_se: float = None
    excess_se: float = None
    reps: int = 1


def _cost(a, b):
    return np.minimum(1.0, cdist(a, b))


def truncated_w1_empirical(a, b, cap=ASSIGNMENT_CAP):
    """Exact truncated W1 between two equal-size clouds.

    Raises
    ------
    SizeMismatch
        Clouds of different size or dimension.
    CapExceeded
        More than ``cap`` points; use a resampled estimate instead.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise SizeMismatch(f"cloud shapes differ: {a.shape} vs {b.shape}")
    if len(a) > cap:
        raise CapExceeded(f"{len(a)} points exceed the exact-assignment cap {cap}")
    if b.tobytes() < a.tobytes():
        # fixed orientation: swapping the clouds solves the identical problem, so
        # near-tied optimal matchings cannot make the value asymmetric in the last bit
        a, b = b, a
    c = _cost(a, b)
    r, k = linear_sum_assignment(c)
    # exactly rounded sum: the value does not depend on the order of the matched pairs
    return WassersteinEstimate(math.fsum(c[r, k]) / len(a))


def _child_seeds(seed, reps):
    return np.random.SeedSequence(seed).spawn(reps)


def w1_sample_vs_mvn(a, m, reps=8, seed=0, cap=ASSIGNMENT_CAP, baseline=True):
    """Mean truncated W1 between ``a`` and ``reps`` fresh normal clouds of the same size.

    The estimator is biased upward relative to the distance between laws.  With
    ``baseline=True`` each repetition also matches an independent normal cloud
    against the same fresh cloud, giving the level a perfect fit would reach.
    Sharing the fresh clouds makes ``value - baseline`` much less noisy than
    either term; its standard error is ``excess_se``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[1] != m.dim:
        raise SizeMismatch(f"cloud dimension {a.shape[1]} does not match normal dimension {m.dim}")
    n = len(a)
    if n > cap:
        raise CapExceeded(f"{n} points exceed the exact-assignment cap {cap}")
    seeds = _child_seeds(seed, 2 * reps)
    fresh = [sample_mvn(m, n, seeds[r]) for r in range(reps)]
    vals = np.array([truncated_w1_empirical(a, f, cap).value for f in fresh])
    est = WassersteinEstimate(float(vals.mean()), "exact_assignment", _se(vals), reps=reps)
    if baseline:
        base = np.array([truncated_w1_empirical(sample_mvn(m, n, seeds[reps + r]), f, cap).value
                         for r, f in enumerate(fresh)])
        est.baseline = float(base.mean())
        est.baseline_se = _se(base)
        est.excess_se = _se(vals - base)
    return est


def _se(x):
    return float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("nan")
