"""Backend selection for the sweep kernels.

The compiled extension (built from _kernels.pyx) fuses the plain and
squared block reductions into single passes and never stores the squared
matrix.  When it is missing, or when GAMPCS_FORCE_NUMPY is set to a
nonempty value other than 0, a pure-numpy fallback takes over; it follows
the classic layout with the squared blocks precomputed once and BLAS
matrix-vector products.  Both backends implement the same four reductions
and agree to roundoff; the benchmark under benchmarks/ compares them.
"""

from __future__ import annotations

import os

import numpy as np

from .measure import BlockMatrix

__all__ = [
    "backend_name",
    "forward",
    "backward",
    "forward_numpy",
    "backward_numpy",
    "forward_compiled",
    "backward_compiled",
]

try:
    from . import _kernels as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

_FORCED = os.environ.get("GAMPCS_FORCE_NUMPY", "0") not in ("", "0")
_ACTIVE = "numpy" if (_compiled is None or _FORCED) else "compiled"


def backend_name() -> str:
    """Which implementation the active forward/backward pair uses."""
    return _ACTIVE


def forward_numpy(mat: BlockMatrix, v: np.ndarray, a: np.ndarray):
    """(F*F) @ v and F @ a via BLAS on cached squared blocks."""
    m, _ = mat.shape
    V = np.zeros(m)
    U = np.zeros(m)
    rb, cb = mat.row_bounds, mat.col_bounds
    squared = mat.squared_blocks()
    for k, (q, p, blk) in enumerate(mat.blocks):
        rows = slice(rb[q], rb[q + 1])
        cols = slice(cb[p], cb[p + 1])
        V[rows] += squared[k] @ v[cols]
        U[rows] += blk @ a[cols]
    return V, U


def backward_numpy(mat: BlockMatrix, g: np.ndarray, w: np.ndarray):
    """F.T @ g and (F*F).T @ w via BLAS on cached squared blocks."""
    _, n = mat.shape
    T = np.zeros(n)
    S = np.zeros(n)
    rb, cb = mat.row_bounds, mat.col_bounds
    squared = mat.squared_blocks()
    for k, (q, p, blk) in enumerate(mat.blocks):
        rows = slice(rb[q], rb[q + 1])
        cols = slice(cb[p], cb[p + 1])
        T[cols] += g[rows] @ blk
        S[cols] += w[rows] @ squared[k]
    return T, S


def forward_compiled(mat: BlockMatrix, v: np.ndarray, a: np.ndarray):
    m, _ = mat.shape
    V = np.zeros(m)
    U = np.zeros(m)
    rb, cb = mat.row_bounds, mat.col_bounds
    for q, p, blk in mat.blocks:
        rows = slice(rb[q], rb[q + 1])
        cols = slice(cb[p], cb[p + 1])
        _compiled.forward_block(blk, v[cols], a[cols], V[rows], U[rows])
    return V, U


def backward_compiled(mat: BlockMatrix, g: np.ndarray, w: np.ndarray):
    _, n = mat.shape
    T = np.zeros(n)
    S = np.zeros(n)
    rb, cb = mat.row_bounds, mat.col_bounds
    for q, p, blk in mat.blocks:
        rows = slice(rb[q], rb[q + 1])
        cols = slice(cb[p], cb[p + 1])
        _compiled.backward_block(blk, g[rows], w[rows], T[cols], S[cols])
    return T, S


if _ACTIVE == "compiled":
    forward = forward_compiled
    backward = backward_compiled
else:
    forward = forward_numpy
    backward = backward_numpy
