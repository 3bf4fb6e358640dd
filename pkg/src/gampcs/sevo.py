"""State evolution: the asymptotic per-iteration MSE of the G-AMP solver.

The scalar recursion tracks homogeneous measurement matrices; the vector
recursion tracks one MSE per variable block of a seeded (spatially coupled)
matrix.  Both reduce the dynamics to iterating the scalar-channel MMSE of
the signal prior, evaluated by Gaussian quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .prior import SignalModel, posterior_variance, prior_variance
from .quadrature import QuadratureRule, gauss_panels

__all__ = [
    "MHAT_CAP",
    "SeTrace",
    "channel_rule",
    "channel_mmse",
    "se_step",
    "se_run",
    "se_block_step",
    "se_block_run",
    "convergence_time",
]

# Noiseless measurements drive the MSE toward machine zero, so the inverse
# channel variance is capped to keep every intermediate finite.
MHAT_CAP = 1e30

_DEFAULT_ORDER = 16


@dataclass
class SeTrace:
    """Recorded state-evolution trajectory.

    energies[t] is the MSE after t iterations (a float for the scalar
    recursion, an array of per-block values for the coupled one); mhat[t]
    is the matching inverse channel variance.  converged_at is the first
    iteration at which the stopping rule fired, or None.
    """

    energies: list = field(default_factory=list)
    mhat: list = field(default_factory=list)
    converged_at: int | None = None

    def as_array(self) -> np.ndarray:
        return np.asarray(self.energies)

    @property
    def final(self):
        return self.energies[-1]


def channel_rule(model: SignalModel, sigma2: float,
                 order: int = _DEFAULT_ORDER) -> QuadratureRule:
    """Quadrature rule resolving the mixture posterior's feature scales.

    The responsibility crossover of the two components happens within a
    few sqrt(sigma2 + eps) of the origin and is sharper than that by the
    root of the log weight ratio, hence the /8 safety factor.
    """
    scale = math.sqrt((sigma2 + model.eps) / (sigma2 + model.sigma2)) / 8.0
    return gauss_panels(min(scale, 1.0), order=order)


def channel_mmse(model: SignalModel, sigma2: float,
                 quad: QuadratureRule | None = None,
                 order: int = _DEFAULT_ORDER) -> float:
    """Mean posterior variance of one component through a Gaussian channel.

    Averages Var[x | x + noise] over signal components x drawn from the
    prior and noise of variance sigma2; this is the map iterated by state
    evolution.
    """
    if sigma2 <= 0.0:
        raise ValueError(f"channel variance must be positive, got {sigma2}")
    if quad is None:
        quad = channel_rule(model, sigma2, order)
    spread = np.sqrt(model.variances + sigma2)  # observation scale per component
    r = quad.z[None, :] * spread[:, None]
    fc = posterior_variance(model, sigma2, r)
    return float(model.weights @ quad.integrate(fc))


def _capped_sigma2(E: float, alpha: float) -> float:
    mhat = min(alpha / E, MHAT_CAP)
    return 1.0 / mhat


def se_step(E: float, model: SignalModel, alpha: float,
            quad: QuadratureRule | None = None) -> float:
    """One scalar state-evolution update of the MSE."""
    if E <= 0.0:
        raise ValueError(f"MSE must be positive, got {E}")
    if alpha <= 0.0:
        raise ValueError(f"measurement rate must be positive, got {alpha}")
    return channel_mmse(model, _capped_sigma2(E, alpha), quad)


def se_run(model: SignalModel, alpha: float, E0: float | None = None,
           tol: float = 1e-12, max_iter: int = 10_000,
           quad: QuadratureRule | None = None) -> SeTrace:
    """Iterate the scalar recursion until relative stagnation or max_iter."""
    E = prior_variance(model) if E0 is None else float(E0)
    if E <= 0.0:
        raise ValueError(f"E0 must be positive, got {E}")
    trace = SeTrace(energies=[E], mhat=[min(alpha / E, MHAT_CAP)])
    for t in range(max_iter):
        E_new = se_step(E, model, alpha, quad)
        trace.energies.append(E_new)
        trace.mhat.append(min(alpha / E_new, MHAT_CAP))
        if abs(E_new - E) < tol * E:
            trace.converged_at = t + 1
            break
        E = E_new
    return trace


def _block_mhat(E: np.ndarray, coupling: np.ndarray, alpha_seed: float,
                alpha_bulk: float) -> np.ndarray:
    """Per-block inverse channel variance from all blocks' MSE."""
    denom = coupling @ E
    if np.any(denom <= 0.0):
        raise ValueError("coupling row with nonpositive weighted MSE")
    rates = np.full(coupling.shape[0], alpha_bulk)
    rates[0] = alpha_seed
    return coupling.T @ (rates / denom)


def se_block_step(E: np.ndarray, profile, model: SignalModel,
                  quad: QuadratureRule | None = None,
                  coupling: np.ndarray | None = None) -> np.ndarray:
    """One synchronous update of the per-block MSE vector."""
    from .measure import coupling_matrix

    E = np.asarray(E, dtype=float)
    if np.any(E <= 0.0):
        raise ValueError("all block MSEs must be positive")
    J = coupling_matrix(profile).entries if coupling is None else np.asarray(coupling)
    if J.shape[1] != E.size:
        raise ValueError(f"coupling has {J.shape[1]} blocks, MSE vector {E.size}")
    mhat = np.minimum(_block_mhat(E, J, profile.alpha_seed, profile.alpha_bulk),
                      MHAT_CAP)
    return np.array([channel_mmse(model, 1.0 / mh, quad) for mh in mhat])


def se_block_run(profile, model: SignalModel, tol: float = 1e-12,
                 max_iter: int = 10_000, stop_threshold: float | None = None,
                 quad: QuadratureRule | None = None) -> SeTrace:
    """Iterate the coupled recursion from the prior variance in every block.

    Stops when every block's MSE falls to stop_threshold (default twice the
    small-component variance), when the vector stagnates in relative terms,
    or at max_iter.  converged_at reports the threshold crossing only.
    """
    from .measure import coupling_matrix

    if stop_threshold is None:
        stop_threshold = 2.0 * model.eps
    J = coupling_matrix(profile).entries
    E = np.full(profile.Lc, prior_variance(model))
    trace = SeTrace(energies=[E.copy()],
                    mhat=[np.minimum(_block_mhat(E, J, profile.alpha_seed,
                                                 profile.alpha_bulk), MHAT_CAP)])
    if np.max(E) <= stop_threshold:
        trace.converged_at = 0
        return trace
    for t in range(max_iter):
        E_new = se_block_step(E, profile, model, quad, coupling=J)
        trace.energies.append(E_new.copy())
        trace.mhat.append(np.minimum(_block_mhat(E_new, J, profile.alpha_seed,
                                                 profile.alpha_bulk), MHAT_CAP))
        if np.max(E_new) <= stop_threshold:
            trace.converged_at = t + 1
            break
        if np.all(np.abs(E_new - E) < tol * E):
            break  # stuck short of the threshold
        E = E_new
    return trace


def convergence_time(model: SignalModel, alpha: float | None = None,
                     profile=None, threshold: float | None = None,
                     max_iter: int = 10_000) -> float:
    """Iterations until the (max-block) MSE first reaches the reconstruction
    threshold, or math.inf if it never does within max_iter.

    Exactly one of alpha (scalar recursion) or profile (coupled recursion)
    must be given.  The default threshold of twice the small-component
    variance is configurable.
    """
    if (alpha is None) == (profile is None):
        raise ValueError("pass exactly one of alpha or profile")
    if threshold is None:
        threshold = 2.0 * model.eps
    if profile is not None:
        trace = se_block_run(profile, model, max_iter=max_iter,
                             stop_threshold=threshold)
        return math.inf if trace.converged_at is None else trace.converged_at
    E = prior_variance(model)
    if E <= threshold:
        return 0
    for t in range(max_iter):
        E_new = se_step(E, model, alpha)
        if E_new <= threshold:
            return t + 1
        if abs(E_new - E) < 1e-12 * E:
            return math.inf  # stuck at a fixed point above the threshold
        E = E_new
    return math.inf
