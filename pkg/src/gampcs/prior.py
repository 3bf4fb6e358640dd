"""Two-Gaussian signal model and its scalar posterior denoisers.

The signal prior is a mixture of a "large" zero-mean Gaussian of variance
``sigma2`` (weight ``rho``) and a "small" one of variance ``eps`` (weight
``1 - rho``).  The denoisers are the posterior mean, second moment and
variance of one signal component observed through an additive Gaussian
channel of variance ``Sigma2``; they drive both the message-passing solver
and its state evolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SignalModel",
    "DenoiserInput",
    "sample_signal",
    "prior_variance",
    "posterior_mean",
    "posterior_second_moment",
    "posterior_variance",
]


@dataclass(frozen=True)
class SignalModel:
    """Mixture prior: density ``rho`` of N(0, sigma2), rest N(0, eps)."""

    rho: float
    eps: float
    sigma2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            if self.rho != 1.0:  # allow the degenerate single-Gaussian case
                raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.sigma2 <= 0.0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.eps >= self.sigma2:
            raise ValueError(
                f"small-component variance eps={self.eps} must be below "
                f"large-component variance sigma2={self.sigma2}"
            )

    @property
    def weights(self) -> np.ndarray:
        return np.array([self.rho, 1.0 - self.rho])

    @property
    def variances(self) -> np.ndarray:
        return np.array([self.sigma2, self.eps])


@dataclass(frozen=True)
class DenoiserInput:
    """Scalar channel observation: pseudo-data R with noise variance Sigma2."""

    Sigma2: float
    R: float

    def __post_init__(self):
        if self.Sigma2 <= 0.0:
            raise ValueError(f"Sigma2 must be positive, got {self.Sigma2}")


def sample_signal(model: SignalModel, n: int, seed: int) -> np.ndarray:
    """Draw n iid components of the two-Gaussian prior, reproducibly."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    large = rng.random(n) < model.rho
    x = rng.standard_normal(n)
    x *= np.where(large, np.sqrt(model.sigma2), np.sqrt(model.eps))
    return x


def prior_variance(model: SignalModel) -> float:
    """Second moment of the prior: (1-rho)*eps + rho*sigma2."""
    return (1.0 - model.rho) * model.eps + model.rho * model.sigma2


def _responsibilities(model, Sigma2, R):
    """Posterior mixture weights of the two components given R, in a
    numerically safe way.

    The raw weights are w_a * N(R; 0, Sigma2 + sigma_a^2); computed in log
    space with the max exponent subtracted so that tiny channel variances
    (Sigma2 ~ 1e-12) cannot underflow to 0/0.
    """
    s2 = Sigma2[..., None] + model.variances  # (..., 2)
    w = model.weights
    with np.errstate(divide="ignore"):
        logw = np.log(w) - 0.5 * np.log(s2) - (R[..., None] ** 2) / (2.0 * s2)
    logw -= np.max(logw, axis=-1, keepdims=True)
    wt = np.exp(logw)
    wt /= np.sum(wt, axis=-1, keepdims=True)
    return wt, s2


def _as_arrays(Sigma2, R):
    Sigma2 = np.asarray(Sigma2, dtype=float)
    R = np.asarray(R, dtype=float)
    if np.any(Sigma2 <= 0.0):
        raise ValueError("channel variance Sigma2 must be positive")
    return np.broadcast_arrays(Sigma2, R)


def posterior_mean(model: SignalModel, Sigma2, R):
    """E[x | R = x + noise] for the mixture prior; odd in R.

    Accepts scalars or arrays (broadcast together).
    """
    Sigma2, R = _as_arrays(Sigma2, R)
    wt, s2 = _responsibilities(model, Sigma2, R)
    mu = R[..., None] * model.variances / s2
    out = np.sum(wt * mu, axis=-1)
    return out if out.ndim else float(out)


def posterior_second_moment(model: SignalModel, Sigma2, R):
    """E[x^2 | R] for the mixture prior; even in R."""
    Sigma2, R = _as_arrays(Sigma2, R)
    wt, s2 = _responsibilities(model, Sigma2, R)
    mu = R[..., None] * model.variances / s2
    var = model.variances * Sigma2[..., None] / s2
    out = np.sum(wt * (var + mu**2), axis=-1)
    return out if out.ndim else float(out)


def posterior_variance(model: SignalModel, Sigma2, R):
    """Var[x | R] for the mixture prior.

    Computed by the law of total variance (within-component variance plus
    spread of the component means), which keeps the result nonnegative even
    when the naive second-moment-minus-mean-squared form would cancel.
    """
    Sigma2, R = _as_arrays(Sigma2, R)
    wt, s2 = _responsibilities(model, Sigma2, R)
    mu = R[..., None] * model.variances / s2
    var = model.variances * Sigma2[..., None] / s2
    mean = np.sum(wt * mu, axis=-1)
    out = np.sum(wt * (var + (mu - mean[..., None]) ** 2), axis=-1)
    return out if out.ndim else float(out)


def denoise(model: SignalModel, din: DenoiserInput) -> tuple[float, float, float]:
    """Posterior (mean, second moment, variance) for one scalar observation."""
    m = posterior_mean(model, din.Sigma2, din.R)
    s = posterior_second_moment(model, din.Sigma2, din.R)
    v = posterior_variance(model, din.Sigma2, din.R)
    return m, s, v
