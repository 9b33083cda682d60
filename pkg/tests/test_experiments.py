import json

import numpy as np
import pytest

from conftest import FIXTURES
from frechet_clt.errors import ConfigError, DegenerateModel
from frechet_clt.experiments import (config_from_dict, config_hash,
                                     feller_converse_check, feller_from_result,
                                     replicate_covariance, run_euclidean_approx_experiment,
                                     run_experiment, run_manifold_clt_experiment,
                                     run_wlln_experiment, trend_ok)


def load(name, **over):
    cfg = json.loads((FIXTURES / name).read_text())
    cfg.update(over)
    return cfg


def small(name, **over):
    return config_from_dict(load(name, **over))


# config ------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ConfigError):
        config_from_dict(load("sphere_small.json", mode="bogus"))
    with pytest.raises(ConfigError):
        config_from_dict(load("sphere_small.json", n_schedule=[64, 16]))
    with pytest.raises(ConfigError):
        config_from_dict(load("sphere_small.json", replicates=1000))
    with pytest.raises(ConfigError):
        config_from_dict({"mode": "clt"})


def test_config_hash_canonical():
    a = {"b": 1, "a": [1.0, 2]}
    b = json.loads('{"a": [1.0, 2], "b": 1}')
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({**a, "b": 2})


# wlln --------------------------------------------------------------------------

def test_wlln_point_mass_degenerate():
    with pytest.raises(DegenerateModel):
        run_wlln_experiment(small("point_mass.json"))


def test_wlln_rows_and_errors():
    res = run_wlln_experiment(small("sphere_noniid_wlln.json", n_schedule=[16, 64, 256], replicates=64))
    assert [r["n"] for r in res.rows] == [16, 64, 256]
    for r in res.rows:
        assert r["ratio_se"] > 0 and r["mean_error_se"] > 0 and r["failures"] == 0
        assert abs(r["ratio"] - 1) <= 4 * r["ratio_se"]
    assert res.rows[-1]["mean_error"] < res.rows[0]["mean_error"]
    assert res.provenance["root_seed"] == 0 and len(res.provenance["config_hash"]) == 64


# euclidean approximation and the flat reduction -------------------------------

def test_flat_reduction_pm1_literal():
    cfg = load("euclid_pm1.json", n_schedule=[16, 64], replicates=128)
    e = run_euclidean_approx_experiment(config_from_dict({**cfg, "mode": "euclidean"}))
    c = run_manifold_clt_experiment(config_from_dict({**cfg, "mode": "clt"}), check_hypotheses=False)
    for n in (16, 64):
        assert np.max(np.abs(e.clouds[n] - c.clouds[n])) <= 1e-9


def test_flat_reduction_general_scaling():
    cfg = load("euclid_normal.json", n_schedule=[16, 64], replicates=64, oracle_draws=5000)
    e = run_euclidean_approx_experiment(config_from_dict({**cfg, "mode": "euclidean"}))
    c = run_manifold_clt_experiment(config_from_dict({**cfg, "mode": "clt"}), check_hypotheses=False)
    for re, rc in zip(e.rows, c.rows):
        n = re["n"]
        hinv = np.linalg.inv(np.asarray(rc["H_tilde_n"]))
        assert np.max(np.abs(c.clouds[n] - e.clouds[n] @ hinv.T)) <= 1e-9


def test_euclidean_needs_flat_family():
    with pytest.raises(ConfigError):
        run_euclidean_approx_experiment(small("sphere_small.json", mode="euclidean"))


def test_alternating_vn_swings():
    res = run_euclidean_approx_experiment(small("euclid_alternating.json", replicates=64,
                                                n_schedule=[5, 21, 85]))
    v = [np.asarray(r["V_n"]) for r in res.rows]
    assert np.linalg.norm(v[0] - v[1], 2) >= 0.5


# manifold CLT ------------------------------------------------------------------

def test_clt_small_fixture_rows():
    res = run_manifold_clt_experiment(small("sphere_small.json"))
    assert res.report is not None and res.report["flags"]["all"]
    for r in res.rows:
        assert not r["aborted"] and r["failures"] == 0 and r["hypotheses_verified"]
        assert len(res.clouds[r["n"]]) == 64
        assert 0 <= r["w1"] <= 1 and r["w1_se"] > 0
        assert np.array(r["sample_cov"]).shape == (2, 2)


def test_clt_hyperbolic_and_cp_run():
    for name in ("hyperbolic_iid.json", "cp2_noniid.json"):
        cfg = load(name, n_schedule=[32], replicates=32, oracle_draws=3000)
        res = run_manifold_clt_experiment(config_from_dict(cfg), check_hypotheses=False)
        r = res.rows[0]
        assert not r["aborted"]
        assert np.all(np.isfinite(r["sample_cov"]))


def test_replicate_covariance():
    a = np.array([[1.0, 0.0], [0.5, 2.0]])
    w = np.random.default_rng(0).normal(size=(4000, 2)) @ a
    cov, se = replicate_covariance(w)
    assert np.allclose(cov, np.cov(w.T))
    expect = a.T @ a
    assert np.all(np.abs(cov - expect) <= 4 * se)


# Feller converse ---------------------------------------------------------------

def test_trend_ok():
    assert trend_ok(0.5, 0.01, 0.0, 0.05)
    assert not trend_ok(0.5, 0.6, 0.0, 1.0)
    assert not trend_ok(0.5, 0.2, 0.0, 0.05)


def test_feller_statuses():
    n = [16, 64, 256]
    base = [0.1, 0.05, 0.03]
    ok = feller_converse_check(n, [0.06, 0.02, 0.004], [8, 32, 128], [0.2, 0.01, 0.0],
                               [0.12, 0.06, 0.031], base)
    assert ok["status"] == "consistent" and ok["preconditions_hold"]
    bad = feller_converse_check(n, [0.06, 0.02, 0.004], [8, 32, 128], [0.6, 0.6, 0.6],
                                [0.12, 0.06, 0.031], base)
    assert bad["status"] == "inconsistent"
    na = feller_converse_check(n, [0.5, 0.5, 0.5], [8, 32, 128], [1.8, 1.8, 1.8],
                               [0.5, 0.5, 0.5], base)
    assert na["status"] == "not_applicable" and na["lindeberg_violation_flag"]


def test_feller_dominating_tail_not_applicable():
    res = run_experiment(small("dominating_tail.json", replicates=64))
    rep = feller_from_result(res, 0.1)
    assert rep["status"] == "not_applicable"
    assert rep["lindeberg_violation_flag"]
    assert all(r["tail_ratio"] >= 0.5 for r in res.rows)
    assert all(r["lindeberg@0.1"] >= 1.0 for r in res.rows)


def test_feller_bounded_iid_consistent():
    res = run_experiment(small("euclid_pm1.json", replicates=128, n_schedule=[16, 64, 256]))
    rep = feller_from_result(res, 0.1)
    assert rep["preconditions_hold"] and rep["lindeberg_to_zero"]
    assert rep["status"] == "consistent"


# determinism -------------------------------------------------------------------

def _strip(res):
    return json.dumps(res.rows, sort_keys=True, default=lambda o: np.asarray(o).tolist())


@pytest.mark.parametrize("mode", ["wlln", "clt"])
def test_threads_do_not_change_results(mode):
    base = load("sphere_small.json", mode=mode)
    one = run_experiment(config_from_dict(base, threads=1))
    many = run_experiment(config_from_dict(base, threads=8))
    assert _strip(one) == _strip(many)
    for n in one.clouds:
        assert np.array_equal(one.clouds[n], many.clouds[n])


def test_seed_changes_results():
    a = run_experiment(config_from_dict(load("sphere_small.json", mode="wlln"), seed=1))
    b = run_experiment(config_from_dict(load("sphere_small.json", mode="wlln"), seed=2))
    assert _strip(a) != _strip(b)
