"""Replica potential over the MSE and the three phase-transition rates.

The potential's local maxima are exactly the fixed points of state
evolution; its global maximum gives the MSE of optimal Bayes inference.
Three critical measurement rates are located for a given signal model:
the spinodal alpha_s below which only the high-MSE maximum exists, the
algorithmic threshold alpha_bp above which only the low-MSE one does, and
alpha_opt where the two maxima exchange dominance.

The potential is evaluated in an analytically rearranged form: the large
1/E contributions of its two halves cancel exactly and are combined in
closed form, leaving bounded terms plus a softplus-shaped Gaussian
integral, so the evaluation stays accurate down to MSE values of order
1e-13 where the raw expression would lose ten digits to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .prior import SignalModel, prior_variance
from .quadrature import QuadratureRule, gauss_panels
from .sevo import MHAT_CAP, channel_mmse

__all__ = [
    "PotentialLandscape",
    "PhaseBoundary",
    "potential",
    "landscape",
    "transitions",
    "alpha_bp",
    "alpha_s",
    "alpha_opt",
    "optimal_mse",
    "phase_diagram",
]

_GRID_POINTS = 2000
_ALPHA_TOL = 1e-4
_REFINE_TOL = 1e-8


@dataclass(frozen=True)
class PotentialLandscape:
    """Potential sampled on a log grid of MSE values, with refined maxima."""

    E: np.ndarray
    phi: np.ndarray
    maxima: list  # (E, phi) pairs sorted by E

    @property
    def global_max(self) -> tuple[float, float]:
        return max(self.maxima, key=lambda m: m[1])


@dataclass(frozen=True)
class PhaseBoundary:
    """Critical rates at fixed signal model; all None when no first-order
    region exists."""

    alpha_s: float | None
    alpha_opt: float | None
    alpha_bp: float | None
    exists: bool


def _delta_c(model: SignalModel, mhat):
    """Gap between the two components' quadratic exponents in the potential's
    Gaussian integral, one row per signal component; shape (..., 2)."""
    mhat = np.asarray(mhat, dtype=float)[..., None]
    s1, s2 = model.sigma2, model.eps
    num = (mhat**2 * model.variances + mhat) * (s1 - s2)
    return num / (2.0 * (mhat * s1 + 1.0) * (mhat * s2 + 1.0))


def _potential_rule(model: SignalModel, mhat_max: float,
                    order: int = 16) -> QuadratureRule:
    """One rule resolving the integrand's narrowest feature over a whole
    E-grid (sharpest at the largest inverse channel variance)."""
    dc = float(np.max(_delta_c(model, mhat_max)))
    scale = 1.0 / math.sqrt(max(dc, 1.0)) / 8.0
    return gauss_panels(min(scale, 1.0), order=order)


def potential(E, model: SignalModel, alpha: float,
              quad: QuadratureRule | None = None):
    """Replica potential at MSE E (scalar or array).

    When no quadrature rule is passed, one is built to resolve the
    smallest E requested, and shared across the whole array so the result
    is smooth in E.
    """
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    if np.any(E_arr <= 0.0):
        raise ValueError("MSE values must be positive")
    mhat = np.minimum(alpha / E_arr, MHAT_CAP)
    if quad is None:
        quad = _potential_rule(model, float(np.max(mhat)))

    s1, s2 = model.sigma2, model.eps
    w1, w2 = model.rho, 1.0 - model.rho
    v0 = prior_variance(model)

    log_ratio = 0.5 * (np.log(mhat * s1 + 1.0) - np.log(mhat * s2 + 1.0))
    log_w2 = math.log(w2) if w2 > 0.0 else -math.inf
    u0 = log_w2 - math.log(w1) + log_ratio  # log r_a(0)
    dc = _delta_c(model, mhat)  # (nE, 2)
    u = u0[:, None, None] - dc[..., None] * quad.z**2  # (nE, 2, K)
    soft = quad.integrate(np.logaddexp(0.0, u))  # (nE, 2)

    combined = mhat * (s1 - v0) / (2.0 * (mhat * s1 + 1.0))
    phi = (-0.5 * alpha * np.log(E_arr) + combined + math.log(w1)
           - 0.5 * np.log(mhat * s1 + 1.0) + soft @ model.weights)
    return phi if np.ndim(E) else float(phi[0])


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float) -> tuple[float, float]:
    """Golden-section maximizer on [lo, hi] to absolute tolerance tol."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc > fd else d
    return x, max(fc, fd)


def landscape(model: SignalModel, alpha: float,
              quad: QuadratureRule | None = None) -> PotentialLandscape:
    """Scan the potential on a log grid of MSE and refine its local maxima.

    The grid spans [eps/1000, 2 * prior variance] with 2000 points; each
    bracketed interior maximum is polished by golden section on log E to
    1e-8 relative, and near-duplicates are merged.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    e_lo = model.eps * 1e-3
    e_hi = 2.0 * prior_variance(model)
    grid = np.geomspace(e_lo, e_hi, _GRID_POINTS)
    if quad is None:
        quad = _potential_rule(model, alpha / e_lo)
    phi = potential(grid, model, alpha, quad)

    inner = (phi[1:-1] > phi[:-2]) & (phi[1:-1] > phi[2:])
    idx = np.flatnonzero(inner) + 1
    maxima = []
    logg = np.log(grid)
    for i in idx:
        def f(u):
            return potential(math.exp(u), model, alpha, quad)
        u_star, phi_star = _golden_max(f, logg[i - 1], logg[i + 1], _REFINE_TOL)
        maxima.append((math.exp(u_star), phi_star))
    maxima.sort()
    merged: list[tuple[float, float]] = []
    for e, p in maxima:
        if merged and abs(math.log(e / merged[-1][0])) < 10.0 * _REFINE_TOL:
            if p > merged[-1][1]:
                merged[-1] = (e, p)
        else:
            merged.append((e, p))
    return PotentialLandscape(E=grid, phi=phi, maxima=merged)


def _bistable_estimate(model: SignalModel):
    """Locate the bistable window, if any, from the rate at which each
    candidate fixed point would be stationary.

    Every stationary point of the potential at rate alpha satisfies
    alpha = mhat * mmse(1/mhat) for some inverse channel variance mhat, so
    scanning that curve yields the spinodal rates directly: a local max is
    the algorithmic threshold, a local min the lower spinodal.
    """
    lo = 1e-2
    hi = 1e3 / model.eps
    grid = np.geomspace(lo, hi, 3000)
    al = np.array([mh * channel_mmse(model, 1.0 / mh) for mh in grid])
    d = np.diff(al)
    peaks = np.flatnonzero((d[:-1] > 0) & (d[1:] <= 0)) + 1
    dips = np.flatnonzero((d[:-1] < 0) & (d[1:] >= 0)) + 1
    if peaks.size == 0 or dips.size == 0:
        return None

    def curve(logmh):
        mh = math.exp(logmh)
        return mh * channel_mmse(model, 1.0 / mh)

    i = peaks[np.argmax(al[peaks])]
    _, a_bp = _golden_max(curve, math.log(grid[i - 1]), math.log(grid[i + 1]),
                          1e-10)
    j = dips[np.argmin(al[dips])]
    _, neg_a_s = _golden_max(lambda u: -curve(u), math.log(grid[j - 1]),
                             math.log(grid[j + 1]), 1e-10)
    return -neg_a_s, a_bp


def _count_maxima(model: SignalModel, alpha: float) -> int:
    return len(landscape(model, alpha).maxima)


def _bisect_boundary(model: SignalModel, lo: float, hi: float,
                     want_lo: int) -> float:
    """Bisect on alpha between maxima-count regimes to _ALPHA_TOL."""
    while hi - lo > _ALPHA_TOL:
        mid = 0.5 * (lo + hi)
        if _count_maxima(model, mid) >= 2:
            if want_lo == 2:
                lo = mid
            else:
                hi = mid
        else:
            if want_lo == 2:
                hi = mid
            else:
                lo = mid
    return 0.5 * (lo + hi)


def _height_gap(model: SignalModel, alpha: float) -> float:
    """Height of the low-MSE maximum minus the high-MSE one; the sign
    decides which phase is thermodynamically dominant."""
    maxima = landscape(model, alpha).maxima
    if len(maxima) >= 2:
        return maxima[0][1] - maxima[-1][1]
    # Only one maximum survived at this probe: decide by which side it is on.
    e_star = maxima[0][0]
    return 1.0 if e_star < math.sqrt(model.eps * prior_variance(model)) else -1.0


def transitions(model: SignalModel) -> PhaseBoundary:
    """Compute the three critical rates, or report that none exist.

    The bistable window is first bracketed from the stationarity curve,
    then each edge is pinned down by bisection on the number of potential
    maxima (1e-4 absolute in alpha), and the equal-height rate by
    bisection on the sign of the height gap.
    """
    alpha_min = model.rho / 2.0
    est = _bistable_estimate(model)
    if est is None:
        return PhaseBoundary(None, None, None, exists=False)
    a_s_est, a_bp_est = est
    if not (alpha_min < a_s_est <= a_bp_est < 1.0):
        return PhaseBoundary(None, None, None, exists=False)

    pad = max(5.0 * _ALPHA_TOL, 1e-3)
    lo = max(alpha_min, a_bp_est - pad)
    hi = min(1.0 - 1e-9, a_bp_est + pad)
    while _count_maxima(model, lo) < 2:
        lo = max(alpha_min, lo - pad)
        if lo <= alpha_min:
            return PhaseBoundary(None, None, None, exists=False)
    while _count_maxima(model, hi) >= 2 and hi < 1.0 - 1e-9:
        hi = min(1.0 - 1e-9, hi + pad)
    a_bp = _bisect_boundary(model, lo, hi, want_lo=2)

    lo = max(alpha_min, a_s_est - pad)
    hi = min(a_bp, a_s_est + pad)
    while _count_maxima(model, hi) < 2:
        hi = min(a_bp, hi + pad)
        if hi >= a_bp:
            return PhaseBoundary(None, None, None, exists=False)
    while _count_maxima(model, lo) >= 2 and lo > alpha_min:
        lo = max(alpha_min, lo - pad)
    a_s = _bisect_boundary(model, lo, hi, want_lo=1)

    lo = min(a_s + 2.0 * _ALPHA_TOL, a_bp)
    hi = max(a_bp - 2.0 * _ALPHA_TOL, lo)
    if _height_gap(model, lo) >= 0.0:
        a_opt = lo  # dominance flips within one tolerance of the spinodal
    elif _height_gap(model, hi) <= 0.0:
        a_opt = hi
    else:
        while hi - lo > _ALPHA_TOL:
            mid = 0.5 * (lo + hi)
            if _height_gap(model, mid) > 0.0:
                hi = mid
            else:
                lo = mid
        a_opt = 0.5 * (lo + hi)
    return PhaseBoundary(alpha_s=a_s, alpha_opt=a_opt, alpha_bp=a_bp,
                         exists=True)


def alpha_bp(model: SignalModel) -> float | None:
    return transitions(model).alpha_bp


def alpha_s(model: SignalModel) -> float | None:
    return transitions(model).alpha_s


def alpha_opt(model: SignalModel) -> float | None:
    return transitions(model).alpha_opt


def optimal_mse(model: SignalModel, alpha: float) -> float:
    """MSE of optimal Bayes inference: location of the potential's global
    maximum; jumps at alpha_opt when a first-order region exists."""
    e_star, _ = landscape(model, alpha).global_max
    return e_star


def phase_diagram(points) -> list[tuple[float, float, PhaseBoundary]]:
    """Critical rates over an iterable of (rho, eps) model points."""
    rows = []
    for rho, eps in points:
        model = SignalModel(rho=rho, eps=eps)
        rows.append((rho, eps, transitions(model)))
    return rows
