"""Fréchet means on the unit sphere, step by step.

Run with ``python3 demos/sphere_mean_walkthrough.py``.
"""

import numpy as np

from frechet_clt.frechet import Sample, SolverOptions, frechet_mean_gd, frechet_mean_newton
from frechet_clt.manifolds import Sphere

s = Sphere(2)
north = s.base_point()  # e3
rng = np.random.default_rng(1)

# a cloud of 50 points within geodesic distance 0.5 of the north pole
tangents = [s.random_tangent(north, rng, 0.2) for _ in range(50)]
pts = np.stack([s.exp(north, v) for v in tangents])
print("largest distance from the pole:", s.dist(north, pts).max())

# the ambient average leaves the sphere; projecting it back is a decent first guess
guess = s.project(pts.mean(axis=0))

gd = frechet_mean_gd(Sample(s, pts), guess)
nt = frechet_mean_newton(Sample(s, pts), guess)
print("gradient descent:", gd.estimate, "iterations", gd.iters)
print("newton:          ", nt.estimate, "iterations", nt.iters)
print("solvers differ by", s.dist(gd.estimate, nt.estimate))
print("projected guess is off by", s.dist(guess, nt.estimate))

# at the mean the tangent logs sum to zero
print("|sum log|:", np.linalg.norm(s.log(nt.estimate, pts).sum(axis=0)))

# restricting to a small ball around a far-away centre pins the iterate to the boundary
far = s.exp(north, np.array([0.9, 0.0, 0.0]))
opts = SolverOptions(ball_center=far, ball_radius=0.2)
pinned = frechet_mean_gd(Sample(s, pts), far, opts)
print("ball-restricted:", pinned.estimate, "on boundary", pinned.hit_ball_boundary,
      "distance to centre", s.dist(far, pinned.estimate))
