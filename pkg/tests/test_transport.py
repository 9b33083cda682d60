import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_truncated_w1
from frechet_clt.errors import CapExceeded, ConfigError, SizeMismatch
from frechet_clt.transport import (MultivariateNormal, sample_mvn, truncated_w1_empirical,
                                   w1_sample_vs_mvn)


# normal sampling ---------------------------------------------------------------

def test_zero_covariance_gives_mean():
    m = MultivariateNormal([1.0, -2.0], np.zeros((2, 2)))
    assert np.array_equal(sample_mvn(m, 50, 0), np.tile([1.0, -2.0], (50, 1)))


def test_unit_variance_concentration():
    x = sample_mvn(MultivariateNormal.centered([[1.0]]), 100_000, 7)
    assert 0.97 <= x.var(ddof=1) <= 1.03


def test_degenerate_direction_is_constant():
    x = sample_mvn(MultivariateNormal([0.0, 3.0], np.diag([1.0, 0.0])), 1000, 1)
    assert np.all(x[:, 1] == 3.0)
    assert x[:, 0].std() > 0.5


def test_sampling_deterministic_per_seed():
    m = MultivariateNormal.centered(np.array([[2.0, 0.5], [0.5, 1.0]]))
    assert np.array_equal(sample_mvn(m, 10, 3), sample_mvn(m, 10, 3))
    assert not np.array_equal(sample_mvn(m, 10, 3), sample_mvn(m, 10, 4))


def test_psd_repair_and_rejection():
    m = MultivariateNormal.centered(np.diag([1.0, -5e-11]))
    assert m.cov[1, 1] == 0.0
    with pytest.raises(ConfigError):
        MultivariateNormal.centered(np.diag([1.0, -1e-6]))
    with pytest.raises(ConfigError):
        MultivariateNormal.centered(np.array([[1.0, 0.2], [0.0, 1.0]]))
    with pytest.raises(ConfigError):
        MultivariateNormal([0.0], np.eye(2))
    with pytest.raises(ValueError):
        sample_mvn(m, 0, 0)


# truncated W1 ------------------------------------------------------------------

def test_w1_examples():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(20, 3))
    assert truncated_w1_empirical(a, a).value == 0.0
    assert truncated_w1_empirical(a, a[::-1]).value == 0.0
    assert truncated_w1_empirical([[0.0, 0.0]], [[0.3, 0.4]]).value == pytest.approx(0.5)
    assert truncated_w1_empirical([[0.0, 0.0]], [[3.0, 4.0]]).value == 1.0


@pytest.mark.parametrize("n", range(1, 8))
def test_w1_matches_brute_force(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(20 if n < 7 else 5):
        d = int(rng.integers(1, 4))
        a = rng.normal(size=(n, d))
        b = rng.normal(size=(n, d)) * rng.uniform(0.2, 2.0)
        assert truncated_w1_empirical(a, b).value == brute_force_truncated_w1(a, b)


def test_w1_errors():
    with pytest.raises(SizeMismatch):
        truncated_w1_empirical(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(SizeMismatch):
        truncated_w1_empirical(np.zeros((3, 2)), np.zeros((3, 1)))
    with pytest.raises(CapExceeded):
        truncated_w1_empirical(np.zeros((10, 1)), np.zeros((10, 1)), cap=8)
    with pytest.raises(CapExceeded):
        w1_sample_vs_mvn(np.zeros((600, 1)), MultivariateNormal.centered([[1.0]]))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 25), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_metric_axioms(n, d, seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(n, d)) * rng.uniform(0.1, 2) for _ in range(3))
    ab = truncated_w1_empirical(a, b).value
    assert ab == truncated_w1_empirical(b, a).value
    assert 0.0 <= ab <= 1.0
    ac = truncated_w1_empirical(a, c).value
    cb = truncated_w1_empirical(c, b).value
    assert ab <= ac + cb + 1e-12
    assert truncated_w1_empirical(a, a).value == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_kantorovich_rubinstein_lower_bound(n, d, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, d))
    b = rng.normal(size=(n, d)) + rng.normal(size=d)
    w = truncated_w1_empirical(a, b).value
    # coordinate ramps clipped to [0, 1]: 1-Lipschitz and bounded by 1, hence
    # 1-Lipschitz for the truncated cost min(1, |u - v|)
    for k in range(d):
        for shift in (-1.0, -0.3, 0.0, 0.5, 1.2):
            for sign in (1.0, -1.0):
                def f(x):
                    return np.clip(sign * x[:, k] - shift, 0.0, 1.0)
                assert abs(f(a).mean() - f(b).mean()) <= w + 1e-12


# sample vs normal --------------------------------------------------------------

def test_sample_from_same_normal_within_baseline():
    m = MultivariateNormal.centered(np.array([[1.0, 0.3], [0.3, 0.5]]))
    a = sample_mvn(m, 256, 12345)
    est = w1_sample_vs_mvn(a, m, reps=8, seed=1)
    assert est.reps == 8 and est.method == "exact_assignment"
    assert est.value <= est.baseline + 3 * est.excess_se
    assert 0 <= est.value <= 1 and est.std_error > 0


def test_point_mass_normal():
    m = MultivariateNormal([1.5, -0.5], np.zeros((2, 2)))
    est = w1_sample_vs_mvn(np.tile([1.5, -0.5], (40, 1)), m, reps=3, seed=0)
    assert est.value == 0.0 and est.baseline == 0.0


def test_shifted_sample_saturates():
    m = MultivariateNormal.centered(0.25 * np.eye(2))
    a = sample_mvn(m, 200, 5) + np.array([2.0, 0.0])
    assert w1_sample_vs_mvn(a, m, reps=4, seed=0, baseline=False).value >= 0.8


def test_shift_of_unit_normal_is_bounded_by_total_variation():
    # with unit covariance a shift of 2 cannot saturate: the law-level distance is at
    # most TV = 2 Phi(1) - 1 ~ 0.683; the empirical estimator sits near that level
    m = MultivariateNormal.centered(np.eye(2))
    a = sample_mvn(m, 256, 5) + np.array([2.0, 0.0])
    v = w1_sample_vs_mvn(a, m, reps=4, seed=0, baseline=False).value
    assert 0.5 < v < 0.8


def test_w1_vs_mvn_deterministic():
    m = MultivariateNormal.centered(np.eye(2))
    a = sample_mvn(m, 64, 9)
    x, y = w1_sample_vs_mvn(a, m, reps=4, seed=3), w1_sample_vs_mvn(a, m, reps=4, seed=3)
    assert (x.value, x.baseline, x.excess_se) == (y.value, y.baseline, y.excess_se)
