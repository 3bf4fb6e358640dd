import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gampcs import (
    SeedingProfile,
    SignalModel,
    channel_mmse,
    convergence_time,
    prior_variance,
    se_block_run,
    se_block_step,
    se_run,
    se_step,
)
from gampcs.sevo import channel_rule

from oracle import channel_mmse_monte_carlo


def test_channel_mmse_single_gaussian():
    """Known closed form: a unit Gaussian through a Gaussian channel."""
    m = SignalModel(rho=1.0, eps=1e-9, sigma2=1.0)
    for s2 in (1e-6, 1e-3, 0.5, 1.0, 25.0):
        assert_allclose(channel_mmse(m, s2), s2 / (1.0 + s2), rtol=1e-12)


def test_channel_mmse_monte_carlo(demo_model):
    s2 = prior_variance(demo_model) / 0.30
    quad_value = channel_mmse(demo_model, s2)
    mc_value, mc_err = channel_mmse_monte_carlo(demo_model, s2, 10**6, seed=42)
    assert abs(quad_value - mc_value) <= 5.0 * mc_err


def test_channel_mmse_monte_carlo_low_branch(demo_model):
    """Same cross-check deep in the reconstructed phase, where a narrow
    misidentification feature carries a percent of the answer."""
    s2 = 7.9e-6
    quad_value = channel_mmse(demo_model, s2)
    mc_value, mc_err = channel_mmse_monte_carlo(demo_model, s2, 10**7, seed=7)
    assert abs(quad_value - mc_value) <= 5.0 * mc_err


def test_se_step_validation(demo_model):
    with pytest.raises(ValueError):
        se_step(0.0, demo_model, 0.3)
    with pytest.raises(ValueError):
        channel_mmse(demo_model, -1.0)


def test_se_step_uninformative_limit(demo_model):
    v0 = prior_variance(demo_model)
    out = se_step(v0, demo_model, alpha=1e-8)
    assert abs(out - v0) <= 1e-8 * v0


def test_se_fixed_points(demo_model):
    high = se_run(demo_model, 0.36)
    assert high.final <= 1e-5          # above the algorithmic threshold
    stuck = se_run(demo_model, 0.30)
    assert stuck.final >= 1e-2         # inside the first-order window


def test_se_bistability(demo_model):
    """Both stable branches coexist at rates inside the window."""
    low = se_run(demo_model, 0.30, E0=1e-9)
    assert low.converged_at is not None
    assert 1e-9 < low.final <= 1e-5
    assert low.final > low.energies[0]  # converged upward
    high = se_run(demo_model, 0.30)
    assert high.final / low.final > 1e3


def test_se_low_branch_value(demo_model):
    """The reconstructed-phase MSE sits a factor ~2.5 above the
    small-component variance; frozen from a converged run."""
    assert_allclose(se_run(demo_model, 0.29, E0=1e-9).final, 2.549077e-06,
                    rtol=1e-5)


def test_se_run_trivial(demo_model):
    trace = se_run(demo_model, 0.3, E0=0.1, max_iter=0)
    assert trace.energies == [0.1]
    assert trace.converged_at is None
    with pytest.raises(ValueError):
        se_run(demo_model, 0.3, E0=-1.0)


def test_se_monotone_from_prior(demo_model):
    for alpha in (0.2, 0.36):
        e = np.asarray(se_run(demo_model, alpha, max_iter=300).energies)
        assert np.all(np.diff(e) <= 1e-15)


def test_se_trace_shape(demo_model):
    tr = se_run(demo_model, 0.36, max_iter=50)
    assert len(tr.mhat) == len(tr.energies)
    assert np.all(np.asarray(tr.energies) > 0.0)
    assert np.all(np.isfinite(tr.as_array()))


@pytest.mark.parametrize("alpha,E", [
    (0.29, 0.2000008), (0.29, 1e-4), (0.29, 2.5e-6),
    (0.36, 0.2000008), (0.36, 2.5e-6),
])
def test_quadrature_converged(demo_model, alpha, E):
    """Doubling the panel order moves the update by less than 1e-10."""
    s2 = E / alpha
    a = se_step(E, demo_model, alpha, quad=channel_rule(demo_model, s2, 16))
    b = se_step(E, demo_model, alpha, quad=channel_rule(demo_model, s2, 32))
    assert abs(a / b - 1.0) <= 1e-10


def test_quadrature_converged_tiny_eps():
    m = SignalModel(rho=0.1, eps=1e-10)
    s2 = 2.5e-10 / 0.15
    a = channel_mmse(m, s2, quad=channel_rule(m, s2, 16))
    b = channel_mmse(m, s2, quad=channel_rule(m, s2, 32))
    assert abs(a / b - 1.0) <= 1e-10


def test_block_reduction_identity_profile(demo_model):
    """Uncoupled equal-rate blocks follow the scalar recursion exactly."""
    prof = SeedingProfile(Lc=3, Lr=3, alpha_seed=0.31, alpha_bulk=0.31,
                          J=0.0, W=0)
    E = np.full(3, prior_variance(demo_model))
    scalar = prior_variance(demo_model)
    for _ in range(25):
        E = se_block_step(E, prof, demo_model)
        scalar = se_step(scalar, demo_model, 0.31)
        assert np.all(E == scalar)


def test_block_reduction_dense_coupling(demo_model):
    """A fully dense unit coupling with as many measurement as variable
    blocks is the scalar recursion up to roundoff."""
    L, alpha = 4, 0.33
    prof = SeedingProfile(Lc=L, Lr=L, alpha_seed=alpha, alpha_bulk=alpha,
                          J=1.0, W=L - 1)
    dense = np.ones((L, L))
    E = np.full(L, prior_variance(demo_model))
    scalar = prior_variance(demo_model)
    for _ in range(25):
        E = se_block_step(E, prof, demo_model, coupling=dense)
        scalar = se_step(scalar, demo_model, alpha)
        assert_allclose(E, scalar, rtol=5e-13)


def test_block_step_validation(demo_model, blue_profile):
    with pytest.raises(ValueError):
        se_block_step(np.array([-1.0] * 30), blue_profile, demo_model)
    with pytest.raises(ValueError):
        se_block_step(np.ones(7), blue_profile, demo_model)


def test_block_decoupled_stuck(demo_model):
    """Identity coupling below the algorithmic threshold: every block sits
    at the scalar high-MSE fixed point."""
    prof = SeedingProfile(Lc=3, Lr=3, alpha_seed=0.30, alpha_bulk=0.30,
                          J=0.0, W=0)
    tr = se_block_run(prof, demo_model, max_iter=400)
    scalar = se_run(demo_model, 0.30, max_iter=400)
    assert tr.converged_at is None
    assert_allclose(tr.final, scalar.final, rtol=1e-10)
    assert np.min(tr.final) >= 1e-2


def test_block_wave_nucleates_at_seed(demo_model):
    prof = SeedingProfile(Lc=10, Lr=11, alpha_seed=0.4, alpha_bulk=0.29,
                          J=0.2, W=3)
    tr = se_block_run(prof, demo_model, max_iter=500, stop_threshold=6e-6)
    assert tr.converged_at is not None
    energies = np.asarray(tr.energies)
    first_below = [int(np.argmax(energies[:, p] < 1e-4))
                   for p in range(prof.Lc)]
    assert first_below[0] < first_below[5] < first_below[9]
    assert np.all(energies[-1] <= 6e-6)


def test_block_trace_mhat_shapes(demo_model):
    prof = SeedingProfile(Lc=4, Lr=5, alpha_seed=0.4, alpha_bulk=0.3,
                          J=0.2, W=2)
    tr = se_block_run(prof, demo_model, max_iter=10, stop_threshold=1e-9)
    assert len(tr.mhat) == len(tr.energies)
    assert all(e.shape == (4,) for e in tr.energies)


def test_convergence_time_fast(demo_model):
    t = convergence_time(demo_model, alpha=0.9)
    assert t <= 30


def test_convergence_time_stuck(demo_model):
    assert math.isinf(convergence_time(demo_model, alpha=0.30, max_iter=3000))


def test_convergence_time_validation(demo_model, blue_profile):
    with pytest.raises(ValueError):
        convergence_time(demo_model)
    with pytest.raises(ValueError):
        convergence_time(demo_model, alpha=0.5, profile=blue_profile)


def test_convergence_time_seeded_thresholds(demo_model):
    """The coupled wave finishes in finite time once the threshold clears
    the boundary-block floor; at twice the small variance it never does,
    because the interior fixed point itself sits near 2.5 times eps."""
    prof = SeedingProfile(Lc=10, Lr=11, alpha_seed=0.4, alpha_bulk=0.29,
                          J=0.2, W=3)
    t6 = convergence_time(demo_model, profile=prof, threshold=6e-6)
    assert np.isfinite(t6) and 10 < t6 < 500
    t2 = convergence_time(demo_model, profile=prof, threshold=2e-6,
                          max_iter=2000)
    assert math.isinf(t2)
