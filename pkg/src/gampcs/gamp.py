"""The G-AMP iterative solver.

Message passing on a dense Gaussian measurement matrix collapses to four
block reductions per sweep plus a componentwise application of the prior's
posterior-mean and posterior-variance denoisers.  Per-measurement means
carry a memory ("Onsager") correction built from the previous residual,
which is what makes the effective scalar channel Gaussian and lets state
evolution predict the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalDivergenceError
from .measure import BlockMatrix
from .prior import SignalModel, posterior_mean, posterior_variance, prior_variance

__all__ = ["GampOptions", "GampState", "GampResult", "gamp_init", "gamp_sweep",
           "gamp_run", "mse"]

# 1/S is the effective channel variance; cap matches the state-evolution one.
_CHANNEL_CAP = 1e30


@dataclass(frozen=True)
class GampOptions:
    """Solver controls.

    damping mixes each update with the previous iterate (1 = plain update);
    v_floor guards the divisions by per-measurement variances, which shrink
    to zero at convergence because the measurements are noiseless.
    """

    max_iter: int = 2000
    conv_tol: float = 1e-13
    v_floor: float = 1e-12
    damping: float = 1.0

    def __post_init__(self):
        if self.v_floor <= 0.0:
            raise ValueError(f"v_floor must be positive, got {self.v_floor}")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError(f"damping must be in (0, 1], got {self.damping}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class GampState:
    """Working vectors of one sweep; sizes M (measurement side) and N."""

    y_var: np.ndarray      # variance of each measurement estimate
    y_est: np.ndarray      # corrected mean of each measurement
    noise_var: np.ndarray  # effective scalar-channel variance per component
    pseudo_data: np.ndarray  # effective scalar observation per component
    mean: np.ndarray       # posterior mean estimate of the signal
    var: np.ndarray        # posterior variance per component
    t: int = 0


@dataclass
class GampResult:
    estimate: np.ndarray
    mse_trace: list | None
    mean_v_trace: list
    residual_trace: list
    iterations: int
    converged: bool


def gamp_init(model: SignalModel, y: np.ndarray, n: int) -> GampState:
    """Start from the prior: zero estimate, prior variance, uncorrected y."""
    y = np.asarray(y, dtype=float)
    m = y.shape[0]
    return GampState(
        y_var=np.ones(m),
        y_est=y.copy(),
        noise_var=np.full(n, prior_variance(model)),
        pseudo_data=np.zeros(n),
        mean=np.zeros(n),
        var=np.full(n, prior_variance(model)),
        t=0,
    )


def _as_block(F) -> BlockMatrix:
    if isinstance(F, BlockMatrix):
        return F
    return BlockMatrix.wrap(np.asarray(F, dtype=float))


def gamp_sweep(state: GampState, F, y: np.ndarray, model: SignalModel,
               opts: GampOptions = GampOptions()) -> GampState:
    """One full update of all working vectors, measurement side first."""
    mat = _as_block(F)
    y = np.asarray(y, dtype=float)

    with np.errstate(invalid="ignore", over="ignore"):
        y_var_new, proj = kernels.forward(mat, state.var, state.mean)
        gain = (y - state.y_est) / np.maximum(state.y_var, opts.v_floor)
        y_est_new = proj - y_var_new * gain

        w = 1.0 / np.maximum(y_var_new, opts.v_floor)
        resid = (y - y_est_new) * w
        corr, precision = kernels.backward(mat, resid, w)
        precision = np.maximum(precision, 1.0 / _CHANNEL_CAP)
        noise_var = 1.0 / precision
        pseudo = state.mean + corr / precision

    if not (np.all(np.isfinite(noise_var)) and np.all(np.isfinite(pseudo))):
        raise NumericalDivergenceError(state.t + 1, "measurement vars")
    mean_new = posterior_mean(model, noise_var, pseudo)
    var_new = posterior_variance(model, noise_var, pseudo)
    d = opts.damping
    mean_new = d * mean_new + (1.0 - d) * state.mean
    var_new = d * var_new + (1.0 - d) * state.var

    for name, arr in (("measurement vars", y_var_new), ("measurement means", y_est_new),
                      ("estimate", mean_new), ("variances", var_new)):
        if not np.all(np.isfinite(arr)):
            raise NumericalDivergenceError(state.t + 1, name)

    return GampState(y_var=y_var_new, y_est=y_est_new, noise_var=noise_var,
                     pseudo_data=pseudo, mean=mean_new, var=var_new,
                     t=state.t + 1)


def gamp_run(F, y: np.ndarray, model: SignalModel,
             opts: GampOptions = GampOptions(),
             truth: np.ndarray | None = None) -> GampResult:
    """Sweep until the estimate stops moving or max_iter.

    When the true signal is supplied, the per-iteration MSE against it is
    recorded (entry 0 is the MSE of the zero initialization).
    """
    mat = _as_block(F)
    _, n = mat.shape
    y = np.asarray(y, dtype=float)
    state = gamp_init(model, y, n)

    mse_trace = None if truth is None else [mse(state.mean, truth)]
    mean_v_trace = [float(np.mean(state.var))]
    residual_trace: list[float] = []
    converged = False
    for _ in range(opts.max_iter):
        prev = state.mean
        state = gamp_sweep(state, mat, y, model, opts)
        residual = float(np.mean((state.mean - prev) ** 2))
        residual_trace.append(residual)
        mean_v_trace.append(float(np.mean(state.var)))
        if truth is not None:
            mse_trace.append(mse(state.mean, truth))
        if residual < opts.conv_tol:
            converged = True
            break
    return GampResult(estimate=state.mean, mse_trace=mse_trace,
                      mean_v_trace=mean_v_trace, residual_trace=residual_trace,
                      iterations=state.t, converged=converged)


def mse(a: np.ndarray, s: np.ndarray) -> float:
    """Mean squared difference of two equal-length vectors."""
    a = np.asarray(a, dtype=float)
    s = np.asarray(s, dtype=float)
    if a.shape != s.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {s.shape}")
    return float(np.mean((a - s) ** 2))
