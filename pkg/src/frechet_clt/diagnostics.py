"""Limit-theorem functionals for families of independent manifold random variables.

Every expectation is taken against a :class:`MomentOracle`: a weighted set of
atoms standing in for the law of one ``X_i``.  Atoms are exact for two-point
and point-mass laws and Monte Carlo draws (uniform weights) otherwise, in which
case every returned value carries a standard error.

Normalisations, for ``phi_n(x) = sum_i E[1/2 dist(X_i, x)**2]``:

* local Lindeberg, halved form:
  ``(1/phi_n) sum_i E[q_i; q_i > eps phi_n]`` with ``q_i = 1/2 dist(X_i, o)**2``;
* local Lindeberg, unhalved form: the same with ``q_i = dist(X_i, o)**2``;
* semi-global: ``(1/(n phi_n(x))) sum_{i != j} E[q_ij; q_ij > eps phi_n(x)]``
  with ``q_ij = 1/2 dist(X_i, X_j)**2`` over independent pairs;
* ``V_n = sum_i E[y_i y_i^T] / (2 phi_n)`` with ``y_i`` the frame coordinates of
  ``log_o X_i`` (unit trace);
* ``H~_n = sum_i E[H_i(o)] / (2 phi_n)``.
"""

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from . import _rng
from .errors import DegenerateModel, SingularCorrection
from .families import DistributionFamily, TangentLaw

ORACLE_TAG = 0x4D4F4D454E5453  # "MOMENTS"
COND_LIMIT = 1e8
GRID_POINTS = 64
PAIR_CHUNK = 1 << 22


def _wmean(values, w):
    """Weighted mean over the leading axis."""
    return np.tensordot(w, values, axes=(0, 0))


class MomentOracle:
    """Expectations under one law, represented by weighted atoms.

    Parameters
    ----------
    manifold : Manifold
    points : array (N, D)
        Atoms of the law.
    weights : array (N,), optional
        Probabilities; uniform when omitted.
    exact : bool
        True when the atoms *are* the law, so standard errors are zero.
    """

    def __init__(self, manifold, points, weights=None, exact=False, draws=None, seed=None):
        self.manifold = manifold
        self.points = np.asarray(points)
        n = len(self.points)
        self.weights = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, float)
        self.exact = bool(exact)
        self.draws = n if draws is None else draws
        self.seed = seed
        self._cache = {}

    def __len__(self):
        return len(self.points)

    def subset(self, m):
        """Oracle over the first ``m`` atoms (the whole law if exact)."""
        if self.exact or m >= len(self):
            return self
        return MomentOracle(self.manifold, self.points[:m], exact=False, draws=m, seed=self.seed)

    def batches(self, k):
        """Split Monte Carlo atoms into ``k`` disjoint oracles for batch-means errors."""
        if self.exact:
            return [self] * k
        return [MomentOracle(self.manifold, p, exact=False, draws=len(p), seed=self.seed)
                for p in np.array_split(self.points, k)]

    def _se(self, values):
        """Standard error of the weighted mean of ``values`` (leading axis)."""
        if self.exact:
            return np.zeros(values.shape[1:])
        return np.std(values, axis=0, ddof=1) / np.sqrt(len(values))

    def _stat(self, values, return_se):
        mean = _wmean(values, self.weights)
        return (mean, self._se(values)) if return_se else mean

    def _dist(self, x):
        key = ("d", np.asarray(x).tobytes())
        if key not in self._cache:
            self._cache[key] = np.asarray(self.manifold.dist(x, self.points), dtype=float)
        return self._cache[key]

    def _coords(self, o, frame):
        key = ("c", np.asarray(o).tobytes(), np.asarray(frame).tobytes())
        if key not in self._cache:
            self._cache[key] = self.manifold.coords(frame, self.manifold.log(o, self.points))
        return self._cache[key]

    def _hessians(self, o, frame):
        key = ("h", np.asarray(o).tobytes(), np.asarray(frame).tobytes())
        if key not in self._cache:
            self._cache[key] = self.manifold.hessian_matrix(o, self.points, frame)
        return self._cache[key]

    def half_sq_dists(self, x):
        return 0.5 * self._dist(x) ** 2

    def expected_half_dist_sq(self, x, return_se=False):
        """``E[1/2 dist(X, x)**2]``."""
        return self._stat(self.half_sq_dists(x), return_se)

    def tangent_second_moments(self, o, frame, return_se=False):
        """``E[<e_r, Y><e_s, Y>]`` with ``Y = log_o X``."""
        c = self._coords(o, frame)
        return self._stat(c[:, :, None] * c[:, None, :], return_se)

    def expected_hessian(self, o, frame, return_se=False):
        return self._stat(self._hessians(o, frame), return_se)

    def expected_hessian_sq_norm(self, o, frame, return_se=False):
        """``E[|H(o)|_F**2]``."""
        h = self._hessians(o, frame)
        return self._stat(np.sum(h**2, axis=(-2, -1)), return_se)

    def lindeberg_term(self, o, threshold, halved=True, return_se=False):
        """``E[q; q > threshold]`` with ``q = 1/2 dist**2`` (halved) or ``dist**2``."""
        q = self.half_sq_dists(o) * (1.0 if halved else 2.0)
        return self._stat(np.where(q > threshold, q, 0.0), return_se)

    def tail_probability(self, o, threshold, halved=True):
        q = self.half_sq_dists(o) * (1.0 if halved else 2.0)
        return float(_wmean((q > threshold).astype(float), self.weights))

    def pair_term(self, other, threshold):
        """``E[q; q > threshold]`` for ``q = 1/2 dist(X, X')**2``, X ~ self, X' ~ other independent.

        Evaluated on the full product of the two atom sets; the standard error is
        the first-order (Hoeffding) approximation from row and column means.
        """
        m = self.manifold
        rows = np.empty(len(self))
        cols = np.zeros(len(other))
        step = max(1, PAIR_CHUNK // max(len(other), 1))
        for a in range(0, len(self), step):
            blk = self.points[a:a + step]
            q = 0.5 * m.dist(blk[:, None, :], other.points[None, :, :]) ** 2
            g = np.where(q > threshold, q, 0.0)
            rows[a:a + step] = g @ other.weights
            cols += self.weights[a:a + step] @ g
        value = float(self.weights @ rows)
        var = 0.0
        if not self.exact:
            var += np.var(rows, ddof=1) / len(rows)
        if not other.exact:
            var += np.var(cols, ddof=1) / len(cols)
        return value, float(np.sqrt(var))


class FamilyMoments:
    """One :class:`MomentOracle` per distinct law of a :class:`DistributionFamily`.

    Monte Carlo atoms for the law of index ``i`` are the family's own tangent
    draws for ``i`` on an independent stream (``derive_seed(seed, ORACLE_TAG)``)
    with replicates ``0..draws-1``.
    """

    def __init__(self, family, draws=50_000, seed=0, _oracles=None):
        self.family = family
        self.draws = int(draws)
        self.seed = int(seed)
        self._oracles = {} if _oracles is None else _oracles
        self._lock = threading.Lock()

    @property
    def manifold(self):
        return self.family.manifold

    def oracle(self, key, first_index):
        with self._lock:
            if key not in self._oracles:
                self._oracles[key] = self._build(key, first_index)
            return self._oracles[key]

    def _build(self, key, first_index):
        fam = self.family
        sigma = key[0]
        if sigma == 0.0:
            return MomentOracle(fam.manifold, fam.center[None, :], exact=True)
        if fam.law is TangentLaw.TWO_POINT:
            v = sigma * fam.law_root(key)[:, 0]
            if fam.r_max is not None and np.linalg.norm(v) > fam.r_max:
                raise DegenerateModel("two-point atoms lie outside r_max")
            pts = fam.points_from_coords(np.stack([v, -v]))
            return MomentOracle(fam.manifold, pts, np.array([0.5, 0.5]), exact=True)
        root = _rng.derive_seed(self.seed, ORACLE_TAG)
        c = fam.tangent_coords(root, np.arange(self.draws), [first_index])[:, 0, :]
        return MomentOracle(fam.manifold, fam.points_from_coords(c), draws=self.draws, seed=self.seed)

    def groups(self, n):
        """``[(oracle, count)]`` covering indices ``1..n``."""
        return [(self.oracle(k, first), cnt) for k, first, cnt in self.family.law_groups(n)]

    def restricted(self, m):
        """Moments over the first ``m`` Monte Carlo atoms of each law."""
        sub = FamilyMoments(self.family, min(m, self.draws), self.seed)
        for k, o in list(self._oracles.items()):
            sub._oracles[k] = o.subset(m)
        parent = self

        def build(key, first_index, _m=m):
            return parent.oracle(key, first_index).subset(_m)

        sub._build = build
        return sub

    def batch_views(self, n, k):
        """``k`` disjoint-atom views, each a list ``[(oracle, count)]`` for ``1..n``."""
        gs = self.groups(n)
        split = [o.batches(k) for o, _ in gs]
        return [[(split[g][b], gs[g][1]) for g in range(len(gs))] for b in range(k)]

    def energy_pair(self, o, y, n):
        """``phi_n(y)``, its standard error and its covariance with ``phi_n(o)``."""
        val = var = cov = 0.0
        for orc, c in self.groups(n):
            qy = orc.half_sq_dists(y)
            val += c * float(orc.weights @ qy)
            if not orc.exact:
                qo = orc.half_sq_dists(o)
                nn = len(qy)
                var += c**2 * np.var(qy, ddof=1) / nn
                cov += c**2 * np.cov(qy, qo, ddof=1)[0, 1] / nn
        return val, float(np.sqrt(var)), float(cov)


def as_moments(model, draws=50_000, seed=0):
    if isinstance(model, FamilyMoments):
        return model
    if isinstance(model, DistributionFamily):
        return FamilyMoments(model, draws, seed)
    raise TypeError("expected a DistributionFamily or FamilyMoments")


def _sum_groups(groups, fn):
    """Sum ``count * value`` over law groups, combining standard errors in quadrature."""
    total = 0.0
    var = 0.0
    for orc, c in groups:
        v, se = fn(orc)
        total = total + c * np.asarray(v)
        var = var + (c * np.asarray(se)) ** 2
    return total, np.sqrt(var)


def _ret(value, se, return_se):
    if np.ndim(value) == 0:
        value, se = float(value), float(se)
    return (value, se) if return_se else value


# Functionals -------------------------------------------------------------------

def aggregate_energy(model, x, n, return_se=False):
    """``phi_n(x) = sum_{i<=n} E[1/2 dist(X_i, x)**2]``."""
    mom = as_moments(model)
    v, se = _sum_groups(mom.groups(n), lambda o: o.expected_half_dist_sq(x, return_se=True))
    return _ret(v, se, return_se)


def _phi_positive(mom, x, n):
    phi, se = aggregate_energy(mom, x, n, return_se=True)
    if phi <= 0.0:
        raise DegenerateModel("aggregate energy is zero: the normalisation is undefined")
    return phi, se


def local_lindeberg(model, o, epsilon, n, halved=True, return_se=False):
    """Local Lindeberg functional at ``o``.

    ``halved=True`` uses ``q = 1/2 dist**2`` (the form equivalent to the
    semi-global condition); ``halved=False`` uses ``q = dist**2`` (the form
    in the consistency and CLT hypotheses).  Both are divided by ``phi_n(o)``
    and truncate at ``epsilon * phi_n(o)``.
    """
    mom = as_moments(model)
    phi, _ = _phi_positive(mom, o, n)
    t = epsilon * phi
    v, se = _sum_groups(mom.groups(n), lambda orc: orc.lindeberg_term(o, t, halved, return_se=True))
    return _ret(v / phi, se / phi, return_se)


def semi_global_lindeberg(model, x, epsilon, n, pair_draws=2000, return_se=False):
    """Semi-global Lindeberg functional at ``x`` over independent pairs ``i != j``.

    Monte Carlo laws use their first ``pair_draws`` atoms, and the full product
    of atom sets is evaluated for every ordered pair of law groups; ``phi_n``
    is taken from the same atoms.
    """
    mom = as_moments(model).restricted(pair_draws)
    phi, _ = _phi_positive(mom, x, n)
    t = epsilon * phi
    gs = mom.groups(n)
    total, var = 0.0, 0.0
    for a, (oa, ca) in enumerate(gs):
        for b, (ob, cb) in enumerate(gs):
            pairs = ca * (ca - 1) if a == b else ca * cb
            if pairs == 0:
                continue
            v, se = oa.pair_term(ob, t)
            total += pairs * v
            var += (pairs * se) ** 2
    scale = n * phi
    return _ret(total / scale, np.sqrt(var) / scale, return_se)


def lindeberg_comparison_check(model, x, epsilon, n, pair_draws=2000, rtol=1e-12):
    """Evaluate both sides of the two local/semi-global comparison inequalities.

    Upper: ``SG(eps) <= 4 (1 + 4/(eps n)) L(eps/4)``.
    Lower (for ``n >= 2 (1 + 4/eps)``): ``L(eps) <= 8 SG(eps/4)``.

    ``L`` is the halved local functional and ``SG`` the semi-global one, all
    computed over the same atoms so that the inequalities hold exactly for the
    atom laws, not just up to Monte Carlo error.
    """
    mom = as_moments(model).restricted(pair_draws)
    sg_eps = semi_global_lindeberg(mom, x, epsilon, n, pair_draws)
    sg_q = semi_global_lindeberg(mom, x, epsilon / 4, n, pair_draws)
    l_eps = local_lindeberg(mom, x, epsilon, n, halved=True)
    l_q = local_lindeberg(mom, x, epsilon / 4, n, halved=True)
    upper = 4.0 * (1.0 + 4.0 / (epsilon * n)) * l_q
    applicable = n >= 2.0 * (1.0 + 4.0 / epsilon)
    slack = rtol * max(1.0, upper)
    return {
        "n": n, "epsilon": epsilon,
        "semi_global": sg_eps, "local_quarter": l_q, "upper_bound": upper,
        "upper_holds": bool(sg_eps <= upper + slack),
        "local": l_eps, "semi_global_quarter": sg_q, "lower_bound": 8.0 * sg_q,
        "lower_applicable": bool(applicable),
        "lower_holds": bool(l_eps <= 8.0 * sg_q + rtol * max(1.0, l_eps)) if applicable else None,
    }


def covariance_Vn(model, o, frame, n, return_se=False):
    """``V_n = sum_i E[y_i y_i^T] / (2 phi_n(o))``; unit trace."""
    mom = as_moments(model)
    phi, _ = _phi_positive(mom, o, n)
    s, se = _sum_groups(mom.groups(n), lambda orc: orc.tangent_second_moments(o, frame, return_se=True))
    return _ret(s / (2 * phi), se / (2 * phi), return_se)


def h_tilde_n(model, o, frame, n, return_se=False):
    """``H~_n = sum_i E[H_i(o)] / (2 phi_n(o))``."""
    mom = as_moments(model)
    phi, _ = _phi_positive(mom, o, n)
    s, se = _sum_groups(mom.groups(n), lambda orc: orc.expected_hessian(o, frame, return_se=True))
    return _ret(s / (2 * phi), se / (2 * phi), return_se)


def condition_number(h):
    w = np.linalg.eigvalsh(0.5 * (h + h.T))
    lo = np.min(np.abs(w))
    return np.inf if lo == 0 else float(np.max(np.abs(w)) / lo)


def _inverse_sym(h):
    h = 0.5 * (h + h.T)
    w, q = np.linalg.eigh(h)
    lo = np.min(np.abs(w))
    if lo == 0 or np.max(np.abs(w)) / lo > COND_LIMIT:
        raise SingularCorrection(f"H~_n is singular or ill-conditioned (condition number > {COND_LIMIT:g})")
    return (q / w) @ q.T


def predicted_clt_covariance(h_tilde, v):
    """``H~^-1 V H~^-1``, symmetrised."""
    hinv = _inverse_sym(np.asarray(h_tilde, float))
    c = hinv @ np.asarray(v, float) @ hinv
    return 0.5 * (c + c.T)


@dataclass
class CltPrediction:
    n: int
    phi_n_at_o: float
    V_n: np.ndarray
    H_tilde_n: np.ndarray
    predicted_cov: np.ndarray
    h_condition: float
    phi_se: float = 0.0
    V_se: np.ndarray = None
    H_se: np.ndarray = None
    predicted_cov_se: np.ndarray = None
    draws: int = 0
    seed: int = 0

    def to_dict(self):
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def _prediction_from_groups(groups, o, frame):
    phi = sum(c * orc.expected_half_dist_sq(o) for orc, c in groups)
    if phi <= 0:
        raise DegenerateModel("aggregate energy is zero: the normalisation is undefined")
    s = sum(c * orc.tangent_second_moments(o, frame) for orc, c in groups)
    h = sum(c * orc.expected_hessian(o, frame) for orc, c in groups)
    v, ht = s / (2 * phi), h / (2 * phi)
    return phi, v, ht, predicted_clt_covariance(ht, v)


def clt_prediction(model, o, n, frame=None, batches=10):
    """The triple ``(phi_n, V_n, H~_n)`` at ``o`` and the covariance ``H~^-1 V H~^-1``.

    Standard errors of the predicted covariance come from ``batches``
    disjoint-atom batch means.
    """
    mom = as_moments(model)
    m = mom.manifold
    frame = m.frame(o) if frame is None else frame
    phi, v, ht, pc = _prediction_from_groups(mom.groups(n), o, frame)
    _, phi_se = aggregate_energy(mom, o, n, return_se=True)
    _, v_se = covariance_Vn(mom, o, frame, n, return_se=True)
    _, h_se = h_tilde_n(mom, o, frame, n, return_se=True)
    views = mom.batch_views(n, batches)
    if all(orc.exact for orc, _ in views[0]):
        pc_se = np.zeros_like(pc)
    else:
        reps = np.stack([_prediction_from_groups(g, o, frame)[3] for g in views])
        pc_se = reps.std(axis=0, ddof=1) / np.sqrt(batches)
    return CltPrediction(n=n, phi_n_at_o=float(phi), V_n=v, H_tilde_n=ht, predicted_cov=pc,
                         h_condition=condition_number(ht), phi_se=float(phi_se), V_se=v_se,
                         H_se=h_se, predicted_cov_se=pc_se, draws=mom.draws, seed=mom.seed)


# Condition report ----------------------------------------------------------------

def ball_grid(m, o, rho, frame=None, count=GRID_POINTS):
    """Deterministic low-discrepancy points in ``ball(o, rho)``.

    Unscrambled Sobol points ``1..count`` in ``[0,1)^(d+1)``: the first coordinate
    sets the radius ``rho u**(1/d)`` and the rest, through the normal quantile,
    the direction.
    """
    d = m.dim
    frame = m.frame(o) if frame is None else frame
    u = qmc.Sobol(d + 1, scramble=False).random_base2(int(np.ceil(np.log2(count + 1))))[1:count + 1]
    z = ndtri(np.clip(u[:, 1:], 1e-12, 1 - 1e-12))
    nz = np.linalg.norm(z, axis=1, keepdims=True)
    z = np.where(nz > 0, z / np.where(nz > 0, nz, 1.0), np.eye(d)[0])
    r = rho * u[:, :1] ** (1.0 / d)
    return m.exp(o, m.from_coords(frame, r * z))


def condition2_functional(mom, o, frame, rho, n, draws=2000):
    """Transported-Hessian deviation over ``ball(o, rho)``, normalised by ``phi_n(o)``.

    Returns ``(sup_mean, mean_sup)``: the sum over laws of ``max_grid E|.|``
    and of ``E[max_grid |.|]`` (Frobenius norms), each divided by ``phi_n(o)``.
    The grid maximum is a lower bound of the supremum inside the expectation.
    """
    m = mom.manifold
    phi, _ = _phi_positive(mom, o, n)
    grid = ball_grid(m, o, rho, frame)
    sub = mom.restricted(draws)
    sup_mean = mean_sup = 0.0
    for orc, c in sub.groups(n):
        h0 = orc._hessians(o, frame)
        per = np.empty((len(grid), len(orc)))
        for g, xp in enumerate(grid):
            fr = m.transport(o, xp, frame)
            pts = orc.points
            ok = ~m.cut_mask(xp, pts)
            dev = np.zeros(len(pts))
            if ok.any():
                hx = m.hessian_matrix(xp, pts[ok], fr)
                dev[ok] = np.linalg.norm(hx - h0[ok], axis=(-2, -1))
            per[g] = dev
        sup_mean += c * float(np.max(per @ orc.weights))
        mean_sup += c * float(np.max(per, axis=0) @ orc.weights)
    return sup_mean / phi, mean_sup / phi


@dataclass
class ReportThresholds:
    c1_min: float = 1e-9
    cond2_max: float = 1.0
    c2_max: float = 1e6
    hinv_max: float = 1e6
    lindeberg_max: float = 0.05


@dataclass
class ConditionReport:
    rows: list
    flags: dict
    thresholds: ReportThresholds
    lindeberg_form: str = "unhalved"
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"rows": self.rows, "flags": self.flags, "thresholds": self.thresholds.__dict__,
                "lindeberg_form": self.lindeberg_form, "notes": self.notes}


def clt_condition_report(model, o, frame=None, rho_list=(0.05, 0.1), n_schedule=(16, 64, 256, 1024),
                               epsilons=(0.1, 0.01), thresholds=None, cond2_draws=2000):
    """Estimate the five CLT hypotheses along ``n_schedule``.

    Per ``n``: ``C1 = phi_n(o)/n``; the condition-2 functional for each ``rho``;
    ``C2 = sum_i E|H_i(o)|_F**2 / phi_n(o)``; ``|H~_n^-1|`` (spectral norm); and
    the unhalved local Lindeberg functional for each epsilon.  Flags compare the
    final row against ``thresholds``; the Lindeberg flag additionally requires
    the curve to end no higher than it started.  A zero aggregate energy fails
    condition 1 and leaves the remaining entries undefined.
    """
    mom = as_moments(model)
    m = mom.manifold
    frame = m.frame(o) if frame is None else frame
    th = thresholds or ReportThresholds()
    rows = []
    for n in n_schedule:
        phi, phi_se = aggregate_energy(mom, o, n, return_se=True)
        row = {"n": int(n), "phi_n": phi, "phi_se": phi_se, "C1": phi / n, "C1_se": phi_se / n}
        if phi <= 0:
            row.update(degenerate=True)
            rows.append(row)
            continue
        c2, c2_se = _sum_groups(mom.groups(n), lambda orc: orc.expected_hessian_sq_norm(o, frame, True))
        row["C2"] = float(c2 / phi)
        # ratio estimator: the relative error of phi_n dominates when |H|_F is nearly constant
        row["C2_se"] = float(row["C2"] * np.hypot(c2_se / c2, phi_se / phi)) if c2 > 0 else 0.0
        ht = h_tilde_n(mom, o, frame, n)
        cond = condition_number(ht)
        row["H_tilde_condition"] = cond
        row["H_tilde_inv_norm"] = (float(1.0 / np.min(np.abs(np.linalg.eigvalsh(ht))))
                                   if cond < COND_LIMIT else float("inf"))
        row["cond2"] = {}
        for rho in rho_list:
            sm, ms = condition2_functional(mom, o, frame, rho, n, cond2_draws)
            row["cond2"][repr(float(rho))] = {"sup_of_mean": sm, "mean_of_sup": ms}
        row["lindeberg"] = {}
        for eps in epsilons:
            v, se = local_lindeberg(mom, o, eps, n, halved=False, return_se=True)
            row["lindeberg"][repr(float(eps))] = {"value": v, "se": se}
        rows.append(row)

    last, first = rows[-1], rows[0]
    degenerate = last.get("degenerate", False)
    flags = {"condition1": bool(not degenerate and last["C1"] >= th.c1_min)}
    if degenerate:
        flags.update(condition2=False, condition3=False, condition4=False, condition5=False)
    else:
        rho0 = repr(float(min(rho_list)))
        flags["condition2"] = bool(last["cond2"][rho0]["mean_of_sup"] <= th.cond2_max)
        flags["condition3"] = bool(np.isfinite(last["C2"]) and last["C2"] <= th.c2_max)
        flags["condition4"] = bool(last["H_tilde_inv_norm"] <= th.hinv_max)
        ok5 = True
        for eps in epsilons:
            k = repr(float(eps))
            a, b = first["lindeberg"][k]["value"], last["lindeberg"][k]["value"]
            ok5 &= b <= a and b <= th.lindeberg_max
        flags["condition5"] = bool(ok5)
    flags["all"] = bool(all(flags.values()))
    notes = ["condition 2 uses a 64-point grid maximum, a lower bound of the supremum"]
    return ConditionReport(rows=rows, flags=flags, thresholds=th, notes=notes)


def lindeberg_curve(model, o, epsilon, n_schedule, halved=True):
    """``[(n, value, se)]`` of the local Lindeberg functional."""
    mom = as_moments(model)
    out = []
    for n in n_schedule:
        v, se = local_lindeberg(mom, o, epsilon, n, halved=halved, return_se=True)
        out.append((int(n), v, se))
    return out
