"""Empirical energy functions and local Fréchet mean estimation.

The empirical energy of a sample ``X_1..X_n`` is ``sum_i 1/2 dist(X_i, x)**2``;
its Riemannian gradient is ``-sum_i log_x(X_i)``.  Two solvers are provided:

* :func:`frechet_mean_gd` iterates ``x <- exp_x(t * mean_i log_x(X_i))`` with
  Armijo backtracking (initial ``t = 1``, shrink 0.5);
* :func:`frechet_mean_newton` solves ``(sum_i H_i(x)) delta = sum_i log_x(X_i)``
  in an orthonormal frame, damped by the same backtracking.

Both accept an optional closed geodesic ball; a trial point outside the ball
is pulled back radially onto its boundary before the descent test.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CutLocus, DegenerateModel, InvalidPoint, NonConvergence

ARMIJO_C = 1e-4
MAX_SKIP_FRACTION = 0.01
MIN_STEP = 1e-12
ROUNDOFF = 1e-13


@dataclass
class Sample:
    manifold: object
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points)
        if pts.ndim != 2 or len(pts) == 0:
            raise InvalidPoint("a sample needs a nonempty (n, D) array of points")
        self.points = self.manifold.check_point(pts, tol=1e-8)

    def __len__(self):
        return len(self.points)


@dataclass
class EnergySummary:
    value: float
    gradient: np.ndarray
    gradient_norm: float
    at: np.ndarray
    skipped: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


@dataclass
class SolverOptions:
    max_iters: int = 500
    grad_tol: float = 1e-9
    step_shrink: float = 0.5
    ball_center: np.ndarray = None
    ball_radius: float = None

    def __post_init__(self):
        if self.grad_tol <= 0 or not 0 < self.step_shrink < 1 or self.max_iters < 1:
            raise ValueError("invalid solver options")
        if (self.ball_center is None) != (self.ball_radius is None):
            raise ValueError("ball_center and ball_radius must be given together")
        if self.ball_radius is not None and self.ball_radius <= 0:
            raise ValueError("ball_radius must be positive")


@dataclass
class SolveReport:
    estimate: np.ndarray
    iters: int
    final_grad_norm: float
    converged: bool
    hit_ball_boundary: bool = False
    singular_hessian: bool = False
    skipped_terms: int = 0
    energy: float = float("nan")

    def to_dict(self, manifold):
        return {
            "estimate": manifold.to_real(self.estimate).tolist(),
            "iters": self.iters,
            "final_grad_norm": float(self.final_grad_norm),
            "converged": bool(self.converged),
            "hit_ball_boundary": bool(self.hit_ball_boundary),
            "singular_hessian": bool(self.singular_hessian),
            "skipped_terms": int(self.skipped_terms),
            "energy": float(self.energy),
        }


def _logs(m, x, points):
    """Logs of the non-cut points and the indices that were skipped."""
    cut = m.cut_mask(x, points)
    if cut.any():
        keep = ~cut
        return m.log(x, points[keep]), np.nonzero(cut)[0], keep
    return m.log(x, points), np.zeros(0, dtype=int), None


def empirical_energy(sample, x):
    """Energy ``sum 1/2 dist(X_i, x)**2`` and its gradient ``-sum log_x(X_i)``.

    Sample points on the cut locus of ``x`` contribute to the value but are left
    out of the gradient; their indices are returned in ``skipped``.
    """
    m = sample.manifold
    d = m.dist(x, sample.points)
    logs, skipped, _ = _logs(m, x, sample.points)
    if skipped.size:
        warnings.warn(f"{skipped.size} sample point(s) on the cut locus excluded from the gradient",
                      RuntimeWarning, stacklevel=2)
    grad = -np.sum(logs, axis=0)
    return EnergySummary(value=0.5 * float(np.sum(d**2)), gradient=grad,
                         gradient_norm=float(m.norm(grad)), at=x, skipped=skipped)


def _energy(m, points, x):
    return 0.5 * float(np.sum(m.dist(x, points) ** 2))


def _clamp(m, x, opts):
    if opts.ball_center is None:
        return x, False
    r = float(m.dist(opts.ball_center, x))
    if r <= opts.ball_radius:
        return x, False
    v = m.log(opts.ball_center, x)
    return m.exp(opts.ball_center, v * (opts.ball_radius / r)), True


def _check_start(m, x0, opts):
    x0 = m.check_point(np.asarray(x0), tol=1e-8)
    if opts.ball_center is not None and m.dist(opts.ball_center, x0) > opts.ball_radius + 1e-12:
        raise InvalidPoint("starting point lies outside the restriction ball")
    return x0


def _stationary_state(m, points, x):
    logs, skipped, _ = _logs(m, x, points)
    if skipped.size > MAX_SKIP_FRACTION * len(points):
        raise CutLocus(f"{skipped.size} of {len(points)} sample points on the cut locus of the iterate")
    s = np.sum(logs, axis=0)
    return logs, s, float(m.norm(s)), skipped.size


def _gradient_norm(m, points, x):
    logs, _, _ = _logs(m, x, points)
    return float(m.norm(np.sum(logs, axis=0)))


def _line_search(m, points, x, direction, slope, e0, gnorm, opts):
    """Backtrack on ``t`` until the Armijo condition holds; ``slope`` = -<grad, direction>.

    Near a minimiser the predicted decrease falls below the rounding error of
    the energy sum.  There a step is accepted when the energy is unchanged to
    rounding and the gradient norm drops.
    """
    t = 1.0
    noise = ROUNDOFF * max(e0, 1.0)
    while t >= MIN_STEP:
        trial, clamped = _clamp(m, m.exp(x, t * direction), opts)
        e1 = _energy(m, points, trial)
        if e1 < e0 - ARMIJO_C * t * slope * (0.0 if clamped else 1.0) and e1 < e0:
            return trial, e1, clamped
        if (ARMIJO_C * t * slope < noise and e1 <= e0 + noise
                and _gradient_norm(m, points, trial) < gnorm):
            return trial, e1, clamped
        t *= opts.step_shrink
    return None, e0, False


def _solve(sample, x0, opts, newton):
    m = sample.manifold
    pts = sample.points
    opts = opts or SolverOptions()
    x = _check_start(m, pts[0] if x0 is None else x0, opts)
    e = _energy(m, pts, x)
    hit = singular = False
    skipped = 0
    for it in range(opts.max_iters + 1):
        logs, s, gnorm, skipped = _stationary_state(m, pts, x)
        if gnorm <= opts.grad_tol:
            return SolveReport(x, it, gnorm, True, hit, singular, skipped, e)
        if it == opts.max_iters:
            break
        direction = None
        if newton:
            direction, ok = _newton_direction(m, x, pts, s)
            singular |= not ok
        if direction is None:
            direction = s / len(pts)
        slope = float(m.inner(s, direction))
        trial, e_new, clamped = _line_search(m, pts, x, direction, slope, e, gnorm, opts)
        if trial is None and newton and not np.allclose(direction, s / len(pts)):
            direction = s / len(pts)
            singular = True
            trial, e_new, clamped = _line_search(m, pts, x, direction, float(m.inner(s, direction)), e,
                                                  gnorm, opts)
        if trial is None:
            # no descent possible: numerically stationary or pinned to the ball boundary
            return SolveReport(x, it, gnorm, False, hit, singular, skipped, e)
        hit |= clamped
        x, e = trial, e_new
    report = SolveReport(x, opts.max_iters, gnorm, False, hit, singular, skipped, e)
    raise NonConvergence(f"no convergence after {opts.max_iters} iterations "
                         f"(gradient norm {gnorm:.3g})", report)


def _newton_direction(m, x, pts, s):
    frame = m.frame(x)
    cut = m.cut_mask(x, pts)
    h = np.sum(m.hessian_matrix(x, pts[~cut], frame), axis=0)
    w, q = np.linalg.eigh(0.5 * (h + h.T))
    if w.min() <= 0 or w.max() / w.min() > 1e8:
        return None, False
    c = m.coords(frame, s)
    delta = q @ ((q.T @ c) / w)
    return m.from_coords(frame, delta), True


def frechet_mean_gd(sample, x0=None, opts=None):
    """Local empirical Fréchet mean by Riemannian gradient descent.

    Parameters
    ----------
    sample : Sample
    x0 : array, optional
        Starting point; defaults to the first sample point.
    opts : SolverOptions, optional

    Returns
    -------
    SolveReport
        ``converged`` is set when ``|sum_i log_x(X_i)| <= grad_tol``.  If the
        iterate is pinned against the ball boundary the report comes back with
        ``converged=False`` instead of raising.

    Raises
    ------
    NonConvergence
        ``max_iters`` exhausted; the partial report is attached as ``.report``.
    """
    return _solve(sample, x0, opts, newton=False)


def frechet_mean_newton(sample, x0=None, opts=None):
    """Local empirical Fréchet mean by damped Riemannian Newton iteration.

    Falls back to a gradient step (and flags ``singular_hessian``) when the
    summed Hessian is not safely positive definite.
    """
    return _solve(sample, x0, opts, newton=True)


def frechet_mean(sample, x0=None, opts=None, method="gd"):
    if method == "gd":
        return frechet_mean_gd(sample, x0, opts)
    if method == "newton":
        return frechet_mean_newton(sample, x0, opts)
    raise ValueError(f"unknown method {method!r}")


# Certificates -----------------------------------------------------------------

def annulus_grid(m, o, rho0, rho1, grid):
    """Deterministic points ``exp_o(r u)`` with ``r`` in ``linspace(rho0, rho1, grid)``."""
    d = m.dim
    if d == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif d == 2:
        ang = 2.0 * np.pi * np.arange(4 * grid) / (4 * grid)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        from scipy.stats import qmc

        u = qmc.Sobol(d, scramble=False).random(4 * grid + 1)[1:]
        from scipy.special import ndtri

        z = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
        dirs = np.concatenate([np.eye(d), -np.eye(d), z / np.linalg.norm(z, axis=1, keepdims=True)])
    radii = np.linspace(rho0, rho1, grid)
    coords = (radii[:, None, None] * dirs[None]).reshape(-1, d)
    frame = m.frame(o)
    return m.exp(o, m.from_coords(frame, coords))


def strict_local_min_certificate(model, o, rho0, rho1, grid=8, mc_draws=4000, seed=0,
                                 n_schedule=(16, 64, 256, 1024)):
    """Estimate the uniform-minimum constant ``min_annulus phi_n(y)/phi_n(o) - 1``.

    ``model`` is a :class:`~frechet_clt.families.DistributionFamily` or a
    :class:`~frechet_clt.diagnostics.FamilyMoments`.  Returns one row per ``n``
    with the estimate, a delta-method standard error at the minimising grid
    point and that point.  A negative estimate flags a violated hypothesis.
    """
    from .diagnostics import FamilyMoments, aggregate_energy

    moments = model if isinstance(model, FamilyMoments) else FamilyMoments(model, mc_draws, seed)
    m = moments.family.manifold
    if not 0 < rho0 <= rho1 < m.injectivity_radius():
        raise ValueError("need 0 < rho0 <= rho1 < injectivity radius")
    ys = annulus_grid(m, o, rho0, rho1, grid)
    rows = []
    for n in n_schedule:
        phi_o, se_o = aggregate_energy(moments, o, n, return_se=True)
        if phi_o <= 0:
            raise DegenerateModel("phi_n(o) = 0: the annulus constant is undefined")
        best = None
        for y in ys:
            phi_y, se_y, cov = moments.energy_pair(o, y, n)
            ratio = phi_y / phi_o
            if best is None or ratio < best[0]:
                var = (se_y**2 - 2 * ratio * cov + ratio**2 * se_o**2) / phi_o**2
                best = (ratio, np.sqrt(max(var, 0.0)), y)
        rows.append({"n": n, "kappa_hat": best[0] - 1.0, "se": best[1], "argmin": best[2]})
    return rows


def growth_bound_check(source, o, test_points, n=None):
    """Check ``phi_n(y) >= dist(y, o)**2 * n / 16`` at each test point.

    ``source`` is a :class:`Sample` (empirical energy, ``n = len(sample)``) or
    a moment model together with ``n``.
    """
    if isinstance(source, Sample):
        m = source.manifold
        n = len(source)

        def phi(y):
            return _energy(m, source.points, y)
    else:
        from .diagnostics import aggregate_energy

        m = source.family.manifold
        if n is None:
            raise ValueError("n is required for a model source")

        def phi(y):
            return aggregate_energy(source, y, n)

    out = []
    for y in test_points:
        lhs = phi(y)
        rhs = float(m.dist(y, o)) ** 2 * n / 16.0
        out.append((y, lhs, rhs, bool(lhs >= rhs)))
    return out
