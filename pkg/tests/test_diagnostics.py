import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from oracles import dominating_tail_local_lindeberg
from frechet_clt.diagnostics import (FamilyMoments, MomentOracle, aggregate_energy, ball_grid,
                                     clt_prediction, condition2_functional, covariance_Vn,
                                     h_tilde_n, lindeberg_comparison_check, lindeberg_curve, local_lindeberg,
                                     predicted_clt_covariance, semi_global_lindeberg,
                                     clt_condition_report)
from frechet_clt.errors import DegenerateModel, SingularCorrection
from frechet_clt.families import family_from_config
from frechet_clt.manifolds import Sphere


def fam(manifold, law="truncated_gaussian", scales=1.0, **extra):
    return family_from_config({"manifold": manifold, "law": law, "scales": scales, **extra})


EUCLID2 = {"family": "euclidean", "dim": 2}
SPHERE2 = {"family": "sphere", "dim": 2, "kappa": 1.0}


def fixture_family(name):
    return family_from_config(json.loads((FIXTURES / name).read_text())["family"])


# aggregate energy --------------------------------------------------------------

def test_aggregate_energy_point_mass_zero():
    f = fam(SPHERE2, scales=0.0, r_max=0.6)
    assert aggregate_energy(FamilyMoments(f, 100), f.center, 50) == 0.0


def test_aggregate_energy_two_point_exact():
    f = fam({"family": "euclidean", "dim": 3}, law="two_point", scales=0.7)
    v, se = aggregate_energy(f, f.center, 11, return_se=True)
    # atoms are +-sigma e1
    assert v == pytest.approx(11 * 0.49 / 2, rel=1e-14)
    assert se == 0.0


@pytest.mark.parametrize("n", [1, 10, 100])
def test_aggregate_energy_euclid_normal(n):
    f = fam(EUCLID2)
    v, se = aggregate_energy(FamilyMoments(f, 20000, 3), f.center, n, return_se=True)
    assert abs(v - n) <= 3 * se


def test_energy_second_moment_identity():
    for f in (fam(SPHERE2, scales=0.3, r_max=0.6), fam(EUCLID2, law="uniform_ball", scales=2.0),
              fam({"family": "complex_projective", "dim": 4, "kappa": 4.0}, scales=0.2, r_max=0.5)):
        mom = FamilyMoments(f, 5000, 1)
        o, fr = f.center, f.frame
        for orc, _ in mom.groups(8):
            assert 2 * orc.expected_half_dist_sq(o) == pytest.approx(
                np.trace(orc.tangent_second_moments(o, fr)), rel=1e-10)


# local Lindeberg ---------------------------------------------------------------

def test_local_lindeberg_bounded_support_is_zero():
    f = fam(SPHERE2, scales=0.3, r_max=0.6)
    mom = FamilyMoments(f, 5000, 0)
    c1 = aggregate_energy(mom, f.center, 1)
    # dist**2 <= r_max**2 = 0.36 and the threshold is eps * n * c1
    n = int(np.ceil(0.36 / (0.1 * c1))) + 1
    assert local_lindeberg(mom, f.center, 0.1, n) == 0.0
    assert local_lindeberg(mom, f.center, 0.1, n, halved=False) == 0.0


def test_local_lindeberg_single_two_point_summand():
    f = fam({"family": "euclidean", "dim": 2}, law="two_point", scales=1.3)
    for eps in (0.1, 0.5, 0.99):
        assert local_lindeberg(f, f.center, eps, 1) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5, 10, 40])
def test_dominating_tail_matches_direct_summation(n):
    f = fixture_family("dominating_tail.json")
    v = local_lindeberg(f, f.center, 0.1, n)
    assert v == pytest.approx(dominating_tail_local_lindeberg(n, 0.1), rel=1e-12)
    assert v >= 0.5


def test_local_lindeberg_degenerate():
    f = fam(SPHERE2, scales=0.0, r_max=0.6)
    with pytest.raises(DegenerateModel):
        local_lindeberg(f, f.center, 0.1, 4)


def test_lindeberg_curve_bounds():
    f = fixture_family("sphere_noniid_wlln.json")
    mom = FamilyMoments(f, 4000, 0)
    for halved in (True, False):
        curve = lindeberg_curve(mom, f.center, 0.01, (1, 4, 16, 64), halved=halved)
        vals = [v for _, v, _ in curve]
        assert all(0 <= v <= 2 for v in vals)


# semi-global and the comparison inequalities -----------------------------------

def test_semi_global_point_mass_zero():
    f = fam(SPHERE2, scales=0.0, r_max=0.6)
    f2 = fam(SPHERE2, scales={"kind": "cycle", "values": [0.0, 0.2]}, r_max=0.6)
    assert semi_global_lindeberg(f2, f2.center, 0.5, 2, pair_draws=200) >= 0.0
    with pytest.raises(DegenerateModel):
        semi_global_lindeberg(f, f.center, 0.1, 4)


def test_semi_global_bounded_large_n_zero():
    f = fam(SPHERE2, scales=0.3, r_max=0.6)
    mom = FamilyMoments(f, 3000, 0)
    # pairwise half squared distance <= 1/2 (2 r_max)**2 = 0.72
    c1 = aggregate_energy(mom, f.center, 1)
    n = int(np.ceil(0.72 / (0.1 * c1))) + 1
    assert semi_global_lindeberg(mom, f.center, 0.1, n, pair_draws=500) == 0.0


@pytest.mark.parametrize("eps,n", [(0.5, 4), (0.5, 20), (0.1, 8), (0.1, 100), (0.02, 500)])
def test_lindeberg_comparison_bounds_sphere_iid(eps, n):
    f = fam(SPHERE2, scales=0.3, r_max=0.6)
    res = lindeberg_comparison_check(FamilyMoments(f, 3000, 0), f.center, eps, n, pair_draws=400)
    assert res["upper_holds"]
    if res["lower_applicable"]:
        assert res["lower_holds"]


@pytest.mark.parametrize("n", [3, 12, 30])
def test_lindeberg_comparison_bounds_heavy_noniid(n):
    f = fixture_family("dominating_tail.json")
    res = lindeberg_comparison_check(f, f.center, 0.5, n)
    assert res["upper_holds"]
    assert res["semi_global"] > 0
    if res["lower_applicable"]:
        assert res["lower_holds"]


def test_semi_global_curves_vanish_for_bounded_model():
    f = fam(SPHERE2, scales=0.3, r_max=0.6)
    mom = FamilyMoments(f, 2000, 0)
    vals = [semi_global_lindeberg(mom, f.center, 0.05, n, pair_draws=300) for n in (2, 20, 300)]
    assert vals[-1] <= vals[0] and vals[-1] == 0.0


# V_n and H~_n -------------------------------------------------------------------

def test_vn_two_point_direction():
    f = fam(EUCLID2, law="two_point", scales=1.0,
            shapes={"kind": "constant", "matrices": [[[1.0, 2.0], [2.0, 4.0]]]})
    v = covariance_Vn(f, f.center, f.frame, 7)
    u = np.array([1.0, 2.0]) / np.sqrt(5)
    assert np.allclose(v, np.outer(u, u), atol=1e-14)
    assert np.trace(v) == pytest.approx(1.0, abs=1e-12)


def test_vn_isotropic():
    f = fam({"family": "euclidean", "dim": 3}, law="uniform_ball", scales=1.0)
    v, se = covariance_Vn(FamilyMoments(f, 40000, 0), f.center, f.frame, 10, return_se=True)
    assert np.all(np.abs(v - np.eye(3) / 3) <= 3 * se + 1e-15)


def test_vn_alternating_blocks_by_direct_summation():
    f = fixture_family("euclid_alternating.json")
    mom = FamilyMoments(f, 20000, 0)
    counts = np.zeros(2)
    block, size, done = 0, 1, 0
    for n in (5, 21, 85, 341, 1365):
        while done < n:
            counts[block % 2] += size
            done += size
            block += 1
            size *= 4
        assert done == n
        expect = np.diag(counts / n)
        v, se = covariance_Vn(mom, f.center, f.frame, n, return_se=True)
        assert np.all(np.abs(v - expect) <= 3 * se + 1e-15)
    # the heavy coordinate flips at every block boundary
    v5 = covariance_Vn(mom, f.center, f.frame, 5)
    v21 = covariance_Vn(mom, f.center, f.frame, 21)
    assert v5[1, 1] > 0.75 and v21[0, 0] > 0.75


@pytest.mark.parametrize("config", [
    {"manifold": SPHERE2, "scales": {"kind": "cycle", "values": [0.1, 0.3]}, "r_max": 0.6},
    {"manifold": {"family": "hyperbolic", "dim": 3, "kappa": -1.0}, "law": "uniform_ball", "scales": 0.5},
    {"manifold": {"family": "complex_projective", "dim": 4, "kappa": 4.0}, "scales": 0.2, "r_max": 0.5},
    {"manifold": EUCLID2, "law": "two_point", "scales": {"kind": "geometric", "values": [1.0, 1.5]}},
])
def test_vn_unit_trace(config):
    f = family_from_config(config)
    mom = FamilyMoments(f, 3000, 0)
    for n in (1, 7, 64):
        assert np.trace(covariance_Vn(mom, f.center, f.frame, n)) == pytest.approx(1.0, abs=1e-9)


def test_h_tilde_euclidean():
    f = fam(EUCLID2, scales={"kind": "cycle", "values": [0.5, 2.0]})
    mom = FamilyMoments(f, 2000, 0)
    for n in (3, 10):
        phi = aggregate_energy(mom, f.center, n)
        assert np.allclose(h_tilde_n(mom, f.center, f.frame, n), n * np.eye(2) / (2 * phi), rtol=0, atol=1e-14)
    g = fam(EUCLID2, law="two_point", scales=1.5)
    c = 1.5**2
    assert np.allclose(h_tilde_n(g, g.center, g.frame, 9), np.eye(2) / c, atol=1e-14)


def test_expected_hessian_circle_closed_form():
    s = Sphere(2)
    o = s.base_point()
    fr = s.frame(o)
    r = 0.5
    a = np.random.default_rng(0).uniform(0, 2 * np.pi, 20000)
    pts = s.exp(o, s.from_coords(fr, r * np.stack([np.cos(a), np.sin(a)], axis=1)))
    orc = MomentOracle(s, pts)
    h, se = orc.expected_hessian(o, fr, return_se=True)
    expect = 0.5 * (1 + r / np.tan(r)) * np.eye(2)
    assert np.all(np.abs(h - expect) <= 3 * se + 1e-12)
    ht = h / (2 * orc.expected_half_dist_sq(o))
    assert np.allclose(ht, expect / r**2, atol=3 * se.max() / r**2 + 1e-12)


# predicted covariance ----------------------------------------------------------

def test_predicted_covariance_examples():
    f = fam({"family": "euclidean", "dim": 1}, law="two_point", scales=1.0)
    p = clt_prediction(f, f.center, 50)
    assert p.phi_n_at_o == pytest.approx(25.0)
    assert np.allclose(p.V_n, 1.0) and np.allclose(p.H_tilde_n, 1.0)
    assert np.allclose(p.predicted_cov, 1.0, atol=1e-14)
    v = np.array([[0.7, 0.1], [0.1, 0.3]])
    assert np.allclose(predicted_clt_covariance(np.eye(2), v), v)


def test_predicted_covariance_diag_ab():
    a, b = 0.5, 2.0
    f = fam(EUCLID2, shapes={"kind": "constant", "matrices": [[[a, 0.0], [0.0, b]]]})
    # five independent oracle seeds pooled: 200k draws, standard error of the pooled mean
    preds = [clt_prediction(FamilyMoments(f, 40000, s), f.center, 16, batches=50) for s in range(5)]
    est = np.mean([p.predicted_cov for p in preds], axis=0)
    se = np.sqrt(np.sum([p.predicted_cov_se**2 for p in preds], axis=0)) / len(preds)
    expect = (a + b) * np.diag([a, b])
    assert np.all(np.abs(est - expect) <= 3 * se + 1e-12)


def test_predicted_covariance_singular():
    with pytest.raises(SingularCorrection):
        predicted_clt_covariance(np.diag([1.0, 1e-10]), np.eye(2) / 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_predicted_covariance_symmetric_psd(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(d, d))
    h = a @ a.T + 0.1 * np.eye(d)
    b = rng.normal(size=(d, d))
    v = b @ b.T
    v /= np.trace(v)
    c = predicted_clt_covariance(h, v)
    assert np.array_equal(c, c.T)
    assert np.linalg.eigvalsh(c).min() >= -1e-12 * np.abs(c).max()


# condition report --------------------------------------------------------------

def test_condition_report_euclid_normal():
    f = fixture_family("euclid_normal.json")
    mom = FamilyMoments(f, 20000, 0)
    rep = clt_condition_report(mom, f.center, f.frame, (0.05, 0.1), (16, 64), (0.1, 0.01))
    for row in rep.rows:
        assert abs(row["C1"] - 1.0) <= 3 * row["C1_se"]
        for v in row["cond2"].values():
            assert v["sup_of_mean"] == 0.0 and v["mean_of_sup"] == 0.0
        assert row["H_tilde_inv_norm"] == pytest.approx(2 * row["C1"], rel=1e-12)
        assert abs(row["H_tilde_inv_norm"] - 2.0) <= 6 * row["C1_se"]
    assert rep.flags["condition1"] and rep.flags["condition2"] and rep.flags["condition4"]


def test_condition_report_point_mass():
    f = fam(SPHERE2, scales=0.0, r_max=0.6)
    rep = clt_condition_report(f, f.center, n_schedule=(4, 16))
    assert rep.flags["condition1"] is False and rep.flags["all"] is False
    assert all(r.get("degenerate") for r in rep.rows)


def test_condition_report_sphere_bounded_all_pass_and_seed_stable():
    f = fixture_family("sphere_noniid_wlln.json")
    reps = [clt_condition_report(FamilyMoments(f, 5000, s), f.center, n_schedule=(16, 64, 256, 1024))
            for s in (0, 1)]
    for r in reps:
        assert r.flags["all"], r.flags
        for row in r.rows:
            assert all(np.isfinite(row[k]) for k in ("C1", "C2", "H_tilde_inv_norm"))
    for a, b in zip(reps[0].rows, reps[1].rows):
        assert abs(a["C1"] - b["C1"]) <= 3 * np.hypot(a["C1_se"], b["C1_se"])
        assert abs(a["C2"] - b["C2"]) <= 3 * np.hypot(a["C2_se"], b["C2_se"])


def test_condition2_grows_with_radius_on_sphere():
    f = fam(SPHERE2, scales=0.3, r_max=0.6)
    mom = FamilyMoments(f, 2000, 0)
    small = condition2_functional(mom, f.center, f.frame, 0.05, 16, 500)
    large = condition2_functional(mom, f.center, f.frame, 0.2, 16, 500)
    assert 0 < small[0] <= small[1] + 1e-15
    assert large[0] > small[0]


def test_ball_grid_deterministic_and_inside():
    s = Sphere(2)
    o = s.base_point()
    g = ball_grid(s, o, 0.3)
    assert g.shape == (64, 3)
    assert np.array_equal(g, ball_grid(s, o, 0.3))
    assert np.all(s.dist(o, g) <= 0.3 + 1e-12)
