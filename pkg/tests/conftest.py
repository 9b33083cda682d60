import sys
from pathlib import Path

import numpy as np
import pytest

from frechet_clt.manifolds import make_manifold

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"
sys.path.insert(0, str(Path(__file__).resolve().parent))

FAMILY_PARAMS = [
    ("euclidean", 3, None),
    ("sphere", 2, 1.0),
    ("sphere", 3, 2.5),
    ("hyperbolic", 2, -1.0),
    ("hyperbolic", 3, -0.5),
    ("complex_projective", 2, 4.0),
    ("complex_projective", 4, 1.0),
]


def family_id(p):
    return f"{p[0]}-d{p[1]}-k{p[2]}"


@pytest.fixture(params=FAMILY_PARAMS, ids=family_id)
def manifold(request):
    fam, dim, kappa = request.param
    return make_manifold(fam, dim, kappa)


def random_tangent(m, x, rng, max_norm):
    """Tangent at ``x`` with norm uniform in ``[0, max_norm)`` and uniform direction."""
    c = rng.standard_normal(m.dim)
    c *= rng.uniform(0, max_norm) / np.linalg.norm(c)
    return m.from_coords(m.frame(x), c)


def random_pairs(m, rng, count, margin=0.1, reach=None):
    """``count`` pairs ``(x, y)`` with ``dist(x, y) < min(inj - margin, reach)``."""
    inj = m.injectivity_radius()
    lim = min(inj - margin if np.isfinite(inj) else 3.0, reach or np.inf)
    out = []
    for _ in range(count):
        # base points stay near the model origin; every family is homogeneous, and far
        # out on the hyperboloid the ambient coordinates lose digits to cancellation
        x = m.random_point(rng, 0.5)
        out.append((x, m.exp(x, random_tangent(m, x, rng, lim))))
    return out
