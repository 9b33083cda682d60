"""Families of independent, non-identically distributed manifold random variables.

Each ``X_i`` is ``exp_o(v_i)`` where ``v_i`` is drawn in an orthonormal frame at
the common centre ``o``::

    v_i = sigma_i * sqrtm(S_i) @ g,   optionally times an independent random sign,

rejected and redrawn until ``|v_i| <= r_max``.  The base draw ``g`` has identity
covariance for the Gaussian and uniform-ball laws; the two-point law is
``g = +-e_1`` so ``v_i = +-sigma_i * sqrtm(S_i) e_1``.

Because every base law is symmetric and truncation is radial, ``E[v_i] = 0``
and ``o`` is a critical point of every energy function.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _rng
from .errors import ConfigError
from .manifolds import Euclidean, Manifold, make_manifold

MAX_ATTEMPTS = 10_000


class TangentLaw(str, Enum):
    TRUNCATED_GAUSSIAN = "truncated_gaussian"
    TWO_POINT = "two_point"
    UNIFORM_BALL = "uniform_ball"


@dataclass(frozen=True)
class ScaleSchedule:
    """Per-index scale ``sigma_i`` for 1-based indices.

    ``constant``: ``values[0]``; ``cycle``: ``values[(i - 1) % len]``;
    ``geometric``: ``values[0] * values[1] ** i``.
    """

    kind: str = "constant"
    values: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in ("constant", "cycle", "geometric"):
            raise ConfigError(f"unknown scale schedule kind {self.kind!r}")
        if self.kind == "geometric" and len(self.values) != 2:
            raise ConfigError("geometric schedule needs values = [base, ratio]")
        if not self.values:
            raise ConfigError("scale schedule needs at least one value")

    def __call__(self, indices):
        i = np.asarray(indices)
        v = np.asarray(self.values, dtype=float)
        if self.kind == "constant":
            return np.full(i.shape, v[0])
        if self.kind == "cycle":
            return v[(i - 1) % len(v)]
        return v[0] * v[1] ** i.astype(float)


@dataclass(frozen=True)
class ShapeSchedule:
    """Per-index covariance shape.

    ``constant``: ``matrices[0]`` everywhere.  ``alternating_blocks``: index
    ``i`` falls in block ``k`` where block lengths are ``growth**k``
    (1, g, g^2, ...), and block ``k`` uses ``matrices[k % len(matrices)]``.
    """

    kind: str = "constant"
    matrices: tuple = None
    growth: int = 4

    def __post_init__(self):
        if self.kind not in ("constant", "alternating_blocks"):
            raise ConfigError(f"unknown shape schedule kind {self.kind!r}")
        if self.growth < 2:
            raise ConfigError("block growth must be >= 2")

    def block_of(self, indices):
        i = np.asarray(indices, dtype=np.int64)
        if self.kind == "constant":
            return np.zeros(i.shape, dtype=np.int64)
        g = self.growth
        # cumulative block ends: (g^(k+1) - 1) / (g - 1)
        ends = [1]
        while ends[-1] < i.max(initial=1):
            ends.append(ends[-1] + g ** len(ends))
        return np.searchsorted(np.asarray(ends), i, side="left")

    def block_boundaries(self, upto):
        """Indices at which a block ends, up to ``upto``."""
        if self.kind == "constant":
            return []
        out, k, end = [], 0, 1
        while end <= upto:
            out.append(end)
            k += 1
            end += self.growth ** k
        return out

    def matrix_index(self, indices):
        b = self.block_of(indices)
        n = 1 if self.matrices is None else len(self.matrices)
        return b % n


def _sqrtm_psd(a):
    w, q = np.linalg.eigh(a)
    if w.min() < -1e-10:
        raise ConfigError("shape matrix is not positive semi-definite")
    return (q * np.sqrt(np.clip(w, 0.0, None))) @ q.T


@dataclass(frozen=True, eq=False)
class DistributionFamily:
    manifold: Manifold
    center: np.ndarray = None
    law: TangentLaw = TangentLaw.TRUNCATED_GAUSSIAN
    scales: ScaleSchedule = field(default_factory=ScaleSchedule)
    shapes: ShapeSchedule = field(default_factory=ShapeSchedule)
    r_max: float = None
    symmetrize: bool = True

    def __post_init__(self):
        m = self.manifold
        center = m.base_point() if self.center is None else m.check_point(np.asarray(self.center))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "law", TangentLaw(self.law))
        inj = m.injectivity_radius()
        if np.isfinite(inj):
            if self.r_max is None or not self.r_max < inj / 2:
                raise ConfigError(f"r_max must be set below injectivity radius / 2 = {inj / 2:.6g}")
        if self.r_max is not None and self.r_max <= 0:
            raise ConfigError("r_max must be positive")
        mats = self.shapes.matrices
        if mats is None:
            mats = (np.eye(m.dim),)
        mats = tuple(np.asarray(a, dtype=float).reshape(m.dim, m.dim) for a in mats)
        object.__setattr__(self, "_roots", tuple(_sqrtm_psd(a) for a in mats))
        object.__setattr__(self, "_frame", m.frame(center))

    @property
    def frame(self):
        return self._frame

    @property
    def dim(self):
        return self.manifold.dim

    @property
    def is_tangent_only(self):
        """Euclidean family: the tangent draws are the observations themselves."""
        return isinstance(self.manifold, Euclidean)

    # per-index laws -------------------------------------------------------
    def law_keys(self, indices):
        """Hashable law identifier per index; equal keys mean equal laws."""
        i = np.asarray(indices)
        sig = self.scales(i)
        mat = self.shapes.matrix_index(i)
        return list(zip(sig.tolist(), mat.tolist()))

    def law_groups(self, n):
        """``[(key, first_index, count)]`` for indices ``1..n`` in order of first appearance."""
        keys = self.law_keys(np.arange(1, n + 1))
        seen = {}
        for idx, k in enumerate(keys, start=1):
            if k in seen:
                seen[k][1] += 1
            else:
                seen[k] = [idx, 1]
        return [(k, v[0], v[1]) for k, v in seen.items()]

    def law_root(self, key):
        return self._roots[key[1]]

    # drawing ----------------------------------------------------------------
    def tangent_coords(self, root, replicates, indices):
        """Frame coordinates of ``v_i``, shape ``(len(replicates), len(indices), d)``."""
        reps = np.atleast_1d(np.asarray(replicates, dtype=np.int64))
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        d = self.dim
        keys = _rng.stream_keys(root, reps, idx)
        sig = self.scales(idx)
        roots = np.stack(self._roots)[self.shapes.matrix_index(idx)]
        out = np.empty((len(reps), len(idx), d))
        todo = np.ones((len(reps), len(idx)), dtype=bool)
        width = 2 * d + 2
        for attempt in range(MAX_ATTEMPTS):
            r_i, c_i = np.nonzero(todo)
            if r_i.size == 0:
                return out
            k = keys[r_i, c_i]
            base = attempt * width
            g = self._base_draw(k, base, d)
            if self.symmetrize:
                sgn = np.where(_rng.uniforms(k, [base + 2 * d + 1])[:, 0] < 0.5, -1.0, 1.0)
                g = g * sgn[:, None]
            v = sig[c_i, None] * np.einsum("kij,kj->ki", roots[c_i], g)
            if self.r_max is None:
                ok = np.ones(len(k), dtype=bool)
            else:
                ok = np.linalg.norm(v, axis=-1) <= self.r_max
            if self.law is TangentLaw.TWO_POINT and not ok.all():
                raise ConfigError("two-point atoms lie outside r_max; the law cannot be truncated")
            out[r_i[ok], c_i[ok]] = v[ok]
            todo[r_i[ok], c_i[ok]] = False
        raise ConfigError("truncation rejects almost every draw; r_max is too small for the scales")

    def _base_draw(self, keys, base, d):
        if self.law is TangentLaw.TRUNCATED_GAUSSIAN:
            return _rng.normals(keys, base, d)
        if self.law is TangentLaw.TWO_POINT:
            s = np.where(_rng.uniforms(keys, [base + 2 * d])[:, 0] < 0.5, -1.0, 1.0)
            g = np.zeros((len(keys), d))
            g[:, 0] = s
            return g
        z = _rng.normals(keys, base, d)
        z /= np.linalg.norm(z, axis=-1, keepdims=True)
        u = _rng.uniforms(keys, [base + 2 * d])[:, 0]
        return z * (u ** (1.0 / d) * np.sqrt(d + 2.0))[:, None]

    def points_from_coords(self, coords):
        """Map frame coordinates at the centre to points ``exp_o(v)``."""
        m = self.manifold
        v = m.from_coords(self._frame, coords)
        return m.exp(self.center, v)


def draw_tangents(fam, n, seed, replicates=(0,)):
    return fam.tangent_coords(seed, replicates, np.arange(1, n + 1))


def draw_samples(fam, n, seed, replicates):
    """Points of shape ``(len(replicates), n, D)``."""
    return fam.points_from_coords(draw_tangents(fam, n, seed, replicates))


def draw_sample(fam, n, seed, replicate=0):
    """One realised sample ``X_1..X_n``; deterministic in ``(seed, replicate, i)``."""
    from .frechet import Sample

    pts = draw_samples(fam, n, seed, [replicate])[0]
    return Sample(fam.manifold, pts)


def family_from_config(cfg):
    """Build a :class:`DistributionFamily` from a plain dict (JSON config)."""
    try:
        mcfg = cfg["manifold"]
        m = make_manifold(mcfg["family"], mcfg["dim"], mcfg.get("kappa"))
        center = cfg.get("center")
        if center is not None:
            center = m.from_real(np.asarray(center, dtype=float))
        sc = cfg.get("scales", {"kind": "constant", "values": [1.0]})
        if isinstance(sc, (int, float)):
            sc = {"kind": "constant", "values": [sc]}
        scales = ScaleSchedule(sc.get("kind", "constant"), tuple(float(v) for v in sc["values"]))
        sh = cfg.get("shapes")
        if sh is None:
            shapes = ShapeSchedule()
        else:
            shapes = ShapeSchedule(sh.get("kind", "constant"),
                                   tuple(np.asarray(a, dtype=float) for a in sh["matrices"]),
                                   int(sh.get("growth", 4)))
        r_max = cfg.get("r_max")
        return DistributionFamily(
            manifold=m,
            center=center,
            law=TangentLaw(cfg.get("law", "truncated_gaussian")),
            scales=scales,
            shapes=shapes,
            r_max=None if r_max is None else float(r_max),
            symmetrize=bool(cfg.get("symmetrize", True)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid family config: {exc}") from exc
