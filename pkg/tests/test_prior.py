import numpy as np
import pytest
from numpy.testing import assert_allclose

from gampcs import (
    DenoiserInput,
    SignalModel,
    posterior_mean,
    posterior_second_moment,
    posterior_variance,
    prior_variance,
    sample_signal,
)
from gampcs.prior import denoise

from oracle import posterior_moments_quad

# Brute-force integration values at (rho=0.2, eps=1e-6, sigma2=1,
# Sigma2=0.1, R=0.5), frozen from tests/oracle.py.
FROZEN_MEAN = 0.08644636377807614
FROZEN_SECOND = 0.05658123399587351
FROZEN_VAR = 0.04910826018542203


@pytest.mark.parametrize("kwargs", [
    dict(rho=0.0, eps=1e-6),
    dict(rho=-0.1, eps=1e-6),
    dict(rho=1.2, eps=1e-6),
    dict(rho=0.2, eps=0.0),
    dict(rho=0.2, eps=-1e-6),
    dict(rho=0.2, eps=1e-6, sigma2=0.0),
    dict(rho=0.2, eps=2.0, sigma2=1.0),  # small variance above large
])
def test_model_validation(kwargs):
    with pytest.raises(ValueError):
        SignalModel(**kwargs)


def test_denoiser_input_validation():
    with pytest.raises(ValueError):
        DenoiserInput(Sigma2=0.0, R=1.0)
    with pytest.raises(ValueError):
        posterior_mean(SignalModel(0.2, 1e-6), -1.0, 0.5)


def test_sampling_deterministic(demo_model):
    a = sample_signal(demo_model, 1000, seed=7)
    b = sample_signal(demo_model, 1000, seed=7)
    assert np.array_equal(a, b)
    c = sample_signal(demo_model, 1000, seed=8)
    assert not np.array_equal(a, c)
    with pytest.raises(ValueError):
        sample_signal(demo_model, 0, seed=1)


def test_sampling_large_fraction(demo_model):
    x = sample_signal(demo_model, 30_000, seed=123)
    frac = np.mean(np.abs(x) > 1e-2)
    assert abs(frac - 0.2) <= 0.01


def test_sampling_variance(demo_model):
    x = sample_signal(demo_model, 10**6, seed=5)
    assert abs(np.var(x) - 0.2000008) <= 0.002


@pytest.mark.parametrize("rho,eps,sigma2,expected", [
    (0.2, 1e-6, 1.0, 0.2000008),
    (1.0, 1e-7, 1.0, 1.0),
    (0.1, 0.01, 1.0, 0.109),
])
def test_prior_variance(rho, eps, sigma2, expected):
    assert_allclose(prior_variance(SignalModel(rho, eps, sigma2)), expected,
                    rtol=1e-12)


def test_single_gaussian_point():
    m = SignalModel(rho=1.0, eps=1e-4, sigma2=1.0)
    assert_allclose(posterior_mean(m, 1.0, 1.0), 0.5, rtol=1e-12)
    assert_allclose(posterior_second_moment(m, 1.0, 1.0), 0.75, rtol=1e-12)
    assert_allclose(posterior_variance(m, 1.0, 1.0), 0.5, rtol=1e-12)


def test_mean_zero_at_origin(demo_model):
    for s2 in (1e-6, 1e-2, 1.0, 100.0):
        assert posterior_mean(demo_model, s2, 0.0) == 0.0


def test_second_moment_at_origin(demo_model):
    s2 = 0.37
    variances = demo_model.variances
    raw = demo_model.weights / np.sqrt(s2 + variances)
    wt = raw / raw.sum()
    expected = float(np.sum(wt * variances * s2 / (s2 + variances)))
    assert_allclose(posterior_second_moment(demo_model, s2, 0.0), expected,
                    rtol=1e-12)


def test_uninformative_limit(demo_model):
    v0 = prior_variance(demo_model)
    assert abs(posterior_variance(demo_model, 1e4, 0.3) - v0) <= 0.01 * v0
    assert abs(posterior_variance(demo_model, 1e6, -2.0) - v0) <= 0.01 * v0


def test_frozen_oracle_point(demo_model):
    assert_allclose(posterior_mean(demo_model, 0.1, 0.5), FROZEN_MEAN,
                    rtol=1e-8)
    assert_allclose(posterior_second_moment(demo_model, 0.1, 0.5),
                    FROZEN_SECOND, rtol=1e-8)
    assert_allclose(posterior_variance(demo_model, 0.1, 0.5), FROZEN_VAR,
                    rtol=1e-8)


def test_denoise_wrapper(demo_model):
    m, s, v = denoise(demo_model, DenoiserInput(Sigma2=0.1, R=0.5))
    assert_allclose([m, s, v], [FROZEN_MEAN, FROZEN_SECOND, FROZEN_VAR],
                    rtol=1e-8)


def test_symmetries(demo_model, rng):
    s2 = np.exp(rng.uniform(np.log(1e-6), np.log(100.0), 60))
    r = rng.uniform(0.01, 5.0, 60)
    assert_allclose(posterior_mean(demo_model, s2, -r),
                    -posterior_mean(demo_model, s2, r), rtol=1e-13)
    assert_allclose(posterior_second_moment(demo_model, s2, -r),
                    posterior_second_moment(demo_model, s2, r), rtol=1e-13)
    assert_allclose(posterior_variance(demo_model, s2, -r),
                    posterior_variance(demo_model, s2, r), rtol=1e-13)


def test_variance_definition(demo_model, rng):
    """Variance is nonnegative and matches second moment minus mean squared."""
    s2 = np.exp(rng.uniform(np.log(1e-9), np.log(100.0), 200))
    r = rng.uniform(-8.0, 8.0, 200)
    fa = posterior_mean(demo_model, s2, r)
    fb = posterior_second_moment(demo_model, s2, r)
    fc = posterior_variance(demo_model, s2, r)
    assert np.all(fc >= 0.0)
    assert np.all(fb - fa**2 >= -1e-12 * fb)
    assert_allclose(fc, fb - fa**2, rtol=1e-6, atol=1e-15)
    assert np.all(fc <= s2 + prior_variance(demo_model) + 1e-12)


def test_extreme_channel_stability(demo_model):
    r = np.linspace(-1e3, 1e3, 101)
    for s2 in (1e-12, 1e-9):
        fa = posterior_mean(demo_model, s2, r)
        fb = posterior_second_moment(demo_model, s2, r)
        fc = posterior_variance(demo_model, s2, r)
        assert np.all(np.isfinite(fa))
        assert np.all(np.isfinite(fb))
        assert np.all(np.isfinite(fc))
        assert np.all(fc >= 0.0)


def test_oracle_grid(demo_model):
    """Closed forms match brute-force integration over the full grid."""
    s2_grid = np.geomspace(1e-6, 1e2, 20)
    r_grid = np.linspace(-5.0, 5.0, 20)
    worst_mean = worst_second = 0.0
    for s2 in s2_grid:
        for r in r_grid:
            mean_o, second_o, _ = posterior_moments_quad(demo_model, s2, r)
            dm = abs(posterior_mean(demo_model, s2, r) - mean_o)
            ds = abs(posterior_second_moment(demo_model, s2, r) - second_o)
            worst_mean = max(worst_mean, dm / max(abs(mean_o), 1e-300))
            worst_second = max(worst_second, ds / max(abs(second_o), 1e-300))
    assert worst_mean <= 1e-6
    assert worst_second <= 1e-6
