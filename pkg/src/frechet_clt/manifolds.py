"""Exact geometry kernels for the four model spaces.

Points and tangent vectors are plain numpy arrays in an ambient
representation:

* ``Euclidean(d)``: points and tangents in R^d.
* ``Sphere(d, kappa)``: unit vectors in R^(d+1).  The metric is scaled so that
  ``dist(x, y) = arccos(<x, y>) / sqrt(kappa)``; tangent vectors at ``x`` are
  ambient vectors orthogonal to ``x`` whose Euclidean norm *is* their
  Riemannian norm.
* ``Hyperbolic(d, kappa)``: hyperboloid ``<x, x>_L = -1/|kappa|``, ``x_0 > 0``,
  with the Minkowski form as metric.
* ``ComplexProjective(d, kappa)``: unit vectors in C^(d/2 + 1), phase-fixed
  so the first nonzero entry is real and positive.  Tangent vectors are
  horizontal lifts (Hermitian-orthogonal to the representative) and the metric
  is ``Re(u^H v)``, so ``dist = (2/sqrt(kappa)) arccos |<z, w>|`` and ``kappa``
  is the holomorphic sectional curvature.

All methods broadcast over leading axes of the second argument, so a batch of
sample points can be handled in one call with a single base point.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CutLocus, DomainError, InvalidPoint, InvalidTangent, UnsupportedManifold

CUT_TOL = 1e-8
SERIES_CUTOFF = 1e-4


def f_kappa(kappa, s):
    """Radial Jacobi-field ratio ``sqrt|k| s C_k(s) / S_k(s)``.

    Equal to ``s * sqrt(k) * cot(sqrt(k) s)`` for ``k > 0``,
    ``s * sqrt(-k) * coth(sqrt(-k) s)`` for ``k < 0`` and 1 for ``k = 0``.
    The value at ``s = 0`` is the limit 1.
    """
    s = np.asarray(s, dtype=float)
    if kappa == 0:
        return np.ones_like(s)
    rk = np.sqrt(abs(kappa))
    t = rk * s
    if kappa > 0 and np.any(t >= np.pi):
        raise DomainError(f"f_kappa undefined for s >= pi/sqrt(kappa) (kappa={kappa})")
    small = t < SERIES_CUTOFF
    tt = np.where(small, 1.0, t)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kappa > 0:
            val = tt / np.tan(tt)
        else:
            val = tt / np.tanh(tt)
    sign = 1.0 if kappa > 0 else -1.0
    series = 1.0 - sign * t**2 / 3.0 - t**4 / 45.0
    return np.where(small, series, val)


def one_minus_f_over_sq(kappa, s):
    """``(1 - f_kappa(s)) / s**2`` with the removable singularity at 0 filled in."""
    s = np.asarray(s, dtype=float)
    if kappa == 0:
        return np.zeros_like(s)
    small = np.sqrt(abs(kappa)) * s < SERIES_CUTOFF
    ss = np.where(small, 1.0, s)
    direct = (1.0 - f_kappa(kappa, ss)) / ss**2
    series = kappa / 3.0 + kappa**2 * s**2 / 45.0 + 2.0 * kappa**3 * s**4 / 945.0
    return np.where(small, series, direct)


def _rdot(u, v):
    return np.sum(np.real(np.conj(u) * v), axis=-1)


class Manifold:
    """Common interface; concrete subclasses below."""

    family = None
    is_complex = False

    def __init__(self, dim, kappa):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {dim}")
        self.dim = int(dim)
        self.kappa = float(kappa)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, kappa={self.kappa:g})"

    def __eq__(self, other):
        return (type(self) is type(other) and self.dim == other.dim
                and self.kappa == other.kappa)

    def __hash__(self):
        return hash((type(self).__name__, self.dim, self.kappa))

    @property
    def ambient_dim(self):
        return self.dim

    def injectivity_radius(self):
        return np.inf

    def diameter(self):
        return np.inf

    # metric ------------------------------------------------------------
    def inner(self, u, v):
        return _rdot(u, v)

    def norm(self, v):
        return np.sqrt(np.maximum(self.inner(v, v), 0.0))

    def coords(self, frame, v):
        """Coordinates of tangent vector(s) ``v`` in an orthonormal ``frame`` (d, D)."""
        v = np.asarray(v)
        return self.inner(frame, v[..., None, :])

    def from_coords(self, frame, c):
        return np.asarray(c) @ frame

    # validation ----------------------------------------------------------
    def _check_shape(self, x, what="point"):
        x = np.asarray(x)
        if x.shape[-1:] != (self.ambient_dim,):
            raise InvalidPoint(
                f"{what} has trailing dimension {x.shape[-1:]} but {self!r} "
                f"expects {self.ambient_dim}")
        return x

    def check_point(self, x, tol=1e-10):
        x = self._check_shape(x)
        if not np.all(np.isfinite(x)):
            raise InvalidPoint("point has non-finite coordinates")
        return x

    def check_tangent(self, x, v, tol=1e-9):
        self._check_shape(v, "tangent vector")
        return v

    def project(self, x):
        return np.asarray(x, dtype=float)

    def cut_mask(self, x, y):
        y = np.asarray(y)
        return np.zeros(y.shape[:-1], dtype=bool)

    def _raise_if_cut(self, x, y):
        if np.any(self.cut_mask(x, y)):
            raise CutLocus(f"point within {CUT_TOL:g} of the cut locus on {self!r}")

    # points ----------------------------------------------------------------
    def base_point(self):
        raise NotImplementedError

    def random_point(self, rng, scale=1.0):
        """Point at geodesic distance ~scale from the base point."""
        o = self.base_point()
        return self.exp(o, self.random_tangent(o, rng, scale))

    def random_tangent(self, x, rng, scale=1.0):
        return self.from_coords(self.frame(x), scale * rng.standard_normal(self.dim))

    def to_real(self, x):
        return np.asarray(x, dtype=float)

    def from_real(self, a):
        return self.project(np.asarray(a, dtype=float))

    # operators --------------------------------------------------------------
    def phi(self, x, y, frame):
        """Matrix of ``v -> <log_x y, v> log_x y`` in ``frame``."""
        c = self.coords(frame, self.log(x, y))
        return c[..., :, None] * c[..., None, :]

    def hessian_matrix(self, x, src, frame):
        """Matrix of the Hessian of ``1/2 dist(., src)**2`` at ``x`` in ``frame``.

        Broadcasts over leading axes of ``src``.
        """
        u = self.log(x, src)
        r = self.norm(u)
        c = self.coords(frame, u)
        eye = np.eye(self.dim)
        f = f_kappa(self.kappa, r)[..., None, None]
        a = one_minus_f_over_sq(self.kappa, r)[..., None, None]
        return a * (c[..., :, None] * c[..., None, :]) + f * eye


class Euclidean(Manifold):
    family = "euclidean"

    def __init__(self, dim, kappa=0.0):
        if kappa != 0:
            raise ValueError("Euclidean space has kappa = 0")
        super().__init__(dim, 0.0)

    def base_point(self):
        return np.zeros(self.dim)

    def dist(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        return np.linalg.norm(y - x, axis=-1)

    def exp(self, x, v):
        return self._check_shape(x) + self._check_shape(v, "tangent vector")

    def log(self, x, y):
        return self._check_shape(y) - self._check_shape(x)

    def transport(self, x, y, v):
        return np.array(v, dtype=float, copy=True)

    def frame(self, x):
        return np.eye(self.dim)

    def hessian_matrix(self, x, src, frame):
        src = self._check_shape(src)
        return np.broadcast_to(np.eye(self.dim), src.shape[:-1] + (self.dim, self.dim)).copy()


class Sphere(Manifold):
    family = "sphere"

    def __init__(self, dim, kappa=1.0):
        if kappa <= 0:
            raise ValueError("Sphere requires kappa > 0")
        super().__init__(dim, kappa)
        self._rk = np.sqrt(self.kappa)

    @property
    def ambient_dim(self):
        return self.dim + 1

    def injectivity_radius(self):
        return np.pi / self._rk

    def diameter(self):
        return np.pi / self._rk

    def base_point(self):
        o = np.zeros(self.dim + 1)
        o[-1] = 1.0
        return o

    def check_point(self, x, tol=1e-10):
        x = super().check_point(x)
        if np.any(np.abs(np.linalg.norm(x, axis=-1) - 1.0) > tol):
            raise InvalidPoint("sphere point is not a unit vector")
        return x

    def check_tangent(self, x, v, tol=1e-9):
        v = super().check_tangent(x, v)
        if np.any(np.abs(np.sum(x * v, axis=-1)) > tol * (1.0 + np.linalg.norm(v, axis=-1))):
            raise InvalidTangent("vector is not orthogonal to the base point")
        return v

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def _angle(self, x, y):
        c = np.sum(x * y, axis=-1)
        u = y - c[..., None] * x
        s = np.linalg.norm(u, axis=-1)
        return np.arctan2(s, c), u, s

    def dist(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        return self._angle(x, y)[0] / self._rk

    def cut_mask(self, x, y):
        theta = self._angle(np.asarray(x), np.asarray(y))[0]
        return theta / np.pi > 1.0 - CUT_TOL

    def exp(self, x, v):
        x = self._check_shape(x)
        v = self.check_tangent(x, v)
        n = np.linalg.norm(v, axis=-1)[..., None]
        t = self._rk * n
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = np.where(n > 0, v / np.where(n > 0, n, 1.0), 0.0)
        y = np.cos(t) * x + np.sin(t) * direction
        return self.project(y)

    def log(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        theta, u, s = self._angle(x, y)
        if np.any(theta / np.pi > 1.0 - CUT_TOL):
            raise CutLocus("antipodal point: log map undefined")
        scale = np.where(s > 0, theta / (self._rk * np.where(s > 0, s, 1.0)), 0.0)
        return scale[..., None] * u

    def transport(self, x, y, v):
        u = self.log(x, y)
        r = np.linalg.norm(u, axis=-1)[..., None]
        e = np.where(r > 0, u / np.where(r > 0, r, 1.0), 0.0)
        t = self._rk * r
        a = np.sum(e * v, axis=-1)[..., None]
        return v + a * ((np.cos(t) - 1.0) * e - np.sin(t) * x)

    def frame(self, x):
        x = self._check_shape(x)
        q, _ = np.linalg.qr(x.reshape(-1, 1), mode="complete")
        return np.ascontiguousarray(q[:, 1:].T)


class Hyperbolic(Manifold):
    family = "hyperbolic"

    def __init__(self, dim, kappa=-1.0):
        if kappa >= 0:
            raise ValueError("Hyperbolic space requires kappa < 0")
        super().__init__(dim, kappa)
        self.radius = 1.0 / np.sqrt(-self.kappa)

    @property
    def ambient_dim(self):
        return self.dim + 1

    def base_point(self):
        o = np.zeros(self.dim + 1)
        o[0] = self.radius
        return o

    def inner(self, u, v):
        return np.sum(u[..., 1:] * v[..., 1:], axis=-1) - u[..., 0] * v[..., 0]

    def check_point(self, x, tol=1e-10):
        x = super().check_point(x)
        R2 = self.radius**2
        q = self.inner(x, x)
        if np.any(np.abs(q + R2) > tol * (R2 + np.sum(x * x, axis=-1))) or np.any(x[..., 0] <= 0):
            raise InvalidPoint("point is not on the upper hyperboloid sheet")
        return x

    def check_tangent(self, x, v, tol=1e-9):
        v = super().check_tangent(x, v)
        scale = (1.0 + np.linalg.norm(v, axis=-1)) * (1.0 + np.linalg.norm(x, axis=-1))
        if np.any(np.abs(self.inner(x, v)) > tol * scale):
            raise InvalidTangent("vector is not Minkowski-orthogonal to the base point")
        return v

    def project(self, x):
        x = np.array(x, dtype=float, copy=True)
        x[..., 0] = np.sqrt(self.radius**2 + np.sum(x[..., 1:] ** 2, axis=-1))
        return x

    def dist(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        diff = y - x
        q = np.maximum(self.inner(diff, diff), 0.0)
        R = self.radius
        return 2.0 * R * np.arcsinh(np.sqrt(q) / (2.0 * R))

    def exp(self, x, v):
        x = self._check_shape(x)
        v = self.check_tangent(x, v)
        n = self.norm(v)[..., None]
        R = self.radius
        t = n / R
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = np.where(n > 0, v / np.where(n > 0, n, 1.0), 0.0)
        return self.project(np.cosh(t) * x + R * np.sinh(t) * direction)

    def log(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        R2 = self.radius**2
        c = -self.inner(x, y) / R2
        u = y - c[..., None] * x
        s = self.norm(u)
        d = self.dist(x, y)
        scale = np.where(s > 0, d / np.where(s > 0, s, 1.0), 0.0)
        return scale[..., None] * u

    def transport(self, x, y, v):
        x = self._check_shape(x)
        y = self._check_shape(y)
        R2 = self.radius**2
        # closed form without the log map; avoids cancellation in y - cosh(t) x
        a = (self.inner(y, v) / (R2 - self.inner(x, y)))[..., None]
        return v + a * (x + y)

    def frame(self, x):
        x = self._check_shape(x)
        p = x / self.radius
        ps = p[1:]
        cols = np.empty((self.dim, self.dim + 1))
        cols[:, 0] = ps
        cols[:, 1:] = np.eye(self.dim) + np.outer(ps, ps) / (1.0 + p[0])
        return cols


class ComplexProjective(Manifold):
    family = "complex_projective"
    is_complex = True

    def __init__(self, dim, kappa=4.0):
        if dim % 2 or dim < 2:
            raise ValueError("ComplexProjective needs an even real dimension >= 2")
        if kappa <= 0:
            raise ValueError("ComplexProjective requires kappa > 0")
        super().__init__(dim, kappa)
        self._half_rk = np.sqrt(self.kappa) / 2.0

    @property
    def ambient_dim(self):
        return self.dim // 2 + 1

    def injectivity_radius(self):
        return np.pi / np.sqrt(self.kappa)

    def diameter(self):
        return np.pi / np.sqrt(self.kappa)

    def base_point(self):
        o = np.zeros(self.ambient_dim, dtype=complex)
        o[0] = 1.0
        return o

    def canonical(self, z):
        """Phase-fix each representative: first nonzero entry real positive."""
        z = np.asarray(z, dtype=complex)
        mag = np.abs(z)
        k = np.argmax(mag > 1e-12, axis=-1)
        lead = np.take_along_axis(z, k[..., None], axis=-1)
        phase = lead / np.abs(lead)
        return z / phase

    def project(self, z):
        z = np.asarray(z, dtype=complex)
        z = z / np.linalg.norm(z, axis=-1, keepdims=True)
        return self.canonical(z)

    def check_point(self, x, tol=1e-10):
        x = super().check_point(x)
        if np.any(np.abs(np.linalg.norm(x, axis=-1) - 1.0) > tol):
            raise InvalidPoint("representative is not a unit vector")
        return x

    def check_tangent(self, x, v, tol=1e-9):
        v = super().check_tangent(x, v)
        h = np.sum(np.conj(x) * v, axis=-1)
        if np.any(np.abs(h) > tol * (1.0 + np.linalg.norm(v, axis=-1))):
            raise InvalidTangent("vector is not Hermitian-orthogonal to the representative")
        return v

    def to_real(self, x):
        x = np.asarray(x, dtype=complex)
        return np.concatenate([x.real, x.imag], axis=-1)

    def from_real(self, a):
        a = np.asarray(a, dtype=float)
        m = self.ambient_dim
        if a.shape[-1] != 2 * m:
            raise InvalidPoint(f"expected {2 * m} real coordinates, got {a.shape[-1]}")
        return self.project(a[..., :m] + 1j * a[..., m:])

    def _aligned(self, x, y):
        h = np.sum(np.conj(x) * y, axis=-1)
        c = np.abs(h)
        phase = np.where(c > 0, h / np.where(c > 0, c, 1.0), 1.0)
        y_al = y * np.conj(phase)[..., None]
        u = y_al - c[..., None] * x
        s = np.linalg.norm(u, axis=-1)
        return np.arctan2(s, c), u, s, phase

    def dist(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        return self._aligned(x, y)[0] / self._half_rk

    def cut_mask(self, x, y):
        theta = self._aligned(np.asarray(x), np.asarray(y))[0]
        return theta / (np.pi / 2.0) > 1.0 - CUT_TOL

    def exp(self, x, v):
        x = self._check_shape(x)
        v = self.check_tangent(x, v)
        n = np.linalg.norm(v, axis=-1)[..., None]
        t = self._half_rk * n
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = np.where(n > 0, v / np.where(n > 0, n, 1.0), 0.0)
        return self.project(np.cos(t) * x + np.sin(t) * direction)

    def log(self, x, y):
        x = self._check_shape(x)
        y = self._check_shape(y)
        theta, u, s, _ = self._aligned(x, y)
        if np.any(theta / (np.pi / 2.0) > 1.0 - CUT_TOL):
            raise CutLocus("point on the cut locus (orthogonal representatives)")
        scale = np.where(s > 0, theta / (self._half_rk * np.where(s > 0, s, 1.0)), 0.0)
        return scale[..., None] * u

    def complex_structure(self, v):
        return 1j * np.asarray(v)

    def transport(self, x, y, v):
        x = self._check_shape(x)
        y = self._check_shape(y)
        theta, u, s, phase = self._aligned(x, y)
        if np.any(theta / (np.pi / 2.0) > 1.0 - CUT_TOL):
            raise CutLocus("point on the cut locus (orthogonal representatives)")
        s_ = s[..., None]
        e = np.where(s_ > 0, u / np.where(s_ > 0, s_, 1.0), 0.0)
        t = theta[..., None]
        vel = -np.sin(t) * x + np.cos(t) * e
        a1 = _rdot(e, v)[..., None]
        a2 = _rdot(1j * e, v)[..., None]
        perp = v - a1 * e - a2 * (1j * e)
        return phase[..., None] * (perp + a1 * vel + a2 * (1j * vel))

    def frame(self, x):
        x = self._check_shape(x)
        q, _ = np.linalg.qr(x.reshape(-1, 1), mode="complete")
        basis = q[:, 1:].T
        out = np.empty((self.dim, self.ambient_dim), dtype=complex)
        out[0::2] = basis
        out[1::2] = 1j * basis
        return out

    def random_point(self, rng, scale=None):
        if scale is not None:
            return super().random_point(rng, scale)
        z = rng.standard_normal(self.ambient_dim) + 1j * rng.standard_normal(self.ambient_dim)
        return self.project(z)

    def phi_j(self, x, y, frame):
        """As :meth:`phi` with ``log_x y`` replaced by ``J log_x y``."""
        c = self.coords(frame, 1j * self.log(x, y))
        return c[..., :, None] * c[..., None, :]

    def hessian_matrix(self, x, src, frame):
        u = self.log(x, src)
        r = self.norm(u)
        c = self.coords(frame, u)
        cj = self.coords(frame, 1j * u)
        k = self.kappa
        f_full = f_kappa(k, r)[..., None, None]
        f_quarter = f_kappa(k / 4.0, r)[..., None, None]
        a = one_minus_f_over_sq(k / 4.0, r)[..., None, None]
        # (f_k - f_{k/4}) / r^2 = (1 - f_{k/4})/r^2 - (1 - f_k)/r^2
        b = a - one_minus_f_over_sq(k, r)[..., None, None]
        outer = c[..., :, None] * c[..., None, :]
        outer_j = cj[..., :, None] * cj[..., None, :]
        return f_quarter * np.eye(self.dim) + a * outer + b * outer_j


_FAMILIES = {
    "euclidean": Euclidean,
    "sphere": Sphere,
    "hyperbolic": Hyperbolic,
    "complex_projective": ComplexProjective,
}


def make_manifold(family, dim, kappa=None):
    """Build a manifold from a family name (as used in config files)."""
    key = str(family).lower().replace("-", "_")
    aliases = {"cp": "complex_projective", "complexprojective": "complex_projective",
               "r": "euclidean", "h": "hyperbolic", "s": "sphere"}
    key = aliases.get(key, key)
    if key not in _FAMILIES:
        raise UnsupportedManifold(f"unknown manifold family {family!r}")
    cls = _FAMILIES[key]
    if kappa is None:
        return cls(dim)
    return cls(dim, kappa)


@dataclass(frozen=True)
class HessianOperator:
    base: np.ndarray
    frame: np.ndarray
    matrix: np.ndarray


# Functional aliases ---------------------------------------------------------

def dist(m, x, y):
    return m.dist(x, y)


def exp_map(m, x, v):
    return m.exp(x, v)


def log_map(m, x, y):
    return m.log(x, y)


def parallel_transport(m, x, y, v):
    return m.transport(x, y, v)


def orthonormal_frame(m, x):
    return m.frame(x)


def phi_operator(m, x, y, frame):
    return m.phi(x, y, frame)


def complex_structure(m, v):
    if not isinstance(m, ComplexProjective):
        raise UnsupportedManifold("the complex structure exists only on ComplexProjective")
    return m.complex_structure(v)


def hessian_operator(m, x, src, frame=None):
    """Closed-form Hessian of ``1/2 dist(., src)**2`` at ``x`` as a :class:`HessianOperator`."""
    if frame is None:
        frame = m.frame(x)
    return HessianOperator(base=np.asarray(x), frame=frame,
                           matrix=m.hessian_matrix(x, src, frame))


def hessian_fd(m, x, src, frame=None, h=1e-4):
    """Central finite-difference Hessian of ``1/2 dist(., src)**2`` in normal coordinates.

    For tests only.
    """
    if frame is None:
        frame = m.frame(x)
    d = m.dim

    def energy(t):
        return 0.5 * m.dist(m.exp(x, m.from_coords(frame, t)), src) ** 2

    out = np.empty((d, d))
    eye = np.eye(d)
    f0 = energy(np.zeros(d))
    for r in range(d):
        out[r, r] = (energy(h * eye[r]) - 2.0 * f0 + energy(-h * eye[r])) / h**2
        for s in range(r + 1, d):
            pp = energy(h * (eye[r] + eye[s]))
            pm = energy(h * (eye[r] - eye[s]))
            mp = energy(h * (-eye[r] + eye[s]))
            mm = energy(-h * (eye[r] + eye[s]))
            out[r, s] = out[s, r] = (pp - pm - mp + mm) / (4.0 * h**2)
    return out


def hopf_map(z):
    """CP^1 representative (a, b) -> unit vector in R^3; an isometry CP^1(4) -> S^2(4)."""
    z = np.asarray(z, dtype=complex)
    a, b = z[..., 0], z[..., 1]
    ab = a * np.conj(b)
    return np.stack([2.0 * ab.real, 2.0 * ab.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1)


def hopf_pushforward(z, v):
    """Image of a horizontal tangent ``v`` at ``z`` under :func:`hopf_map`, in the S^2(4) model."""
    z = np.asarray(z, dtype=complex)
    v = np.asarray(v, dtype=complex)
    a, b = z[..., 0], z[..., 1]
    da, db = v[..., 0], v[..., 1]
    dab = da * np.conj(b) + a * np.conj(db)
    dn = 2.0 * np.real(np.conj(a) * da) - 2.0 * np.real(np.conj(b) * db)
    w = np.stack([2.0 * dab.real, 2.0 * dab.imag, dn], axis=-1)
    # ambient unit-sphere velocity -> Riemannian tangent of the kappa=4 model
    return w / 2.0
