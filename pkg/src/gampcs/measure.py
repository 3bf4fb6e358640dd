"""Measurement matrices: homogeneous Gaussian and seeded (spatially coupled)
block designs, plus the forward projection y = F s.

A seeded matrix oversamples the first variable block so reconstruction
nucleates there, and couples each measurement block to its own variable
block, W blocks behind it, and (weakly, ratio J) one block ahead.  Matrices
are dense Gaussian; the seeded one is stored block-sparse since most of its
block grid is exactly zero.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import LayoutError

__all__ = [
    "SeedingProfile",
    "CouplingMatrix",
    "BlockLayout",
    "BlockMatrix",
    "homogeneous_matrix",
    "total_rate",
    "coupling_matrix",
    "seeded_matrix",
    "measure",
    "save_matrix",
    "load_matrix",
]

_MAGIC = b"GAMPCSF1"


@dataclass(frozen=True)
class SeedingProfile:
    """Block-matrix design: Lc variable blocks, Lr measurement blocks,
    seed/bulk sampling rates, forward coupling ratio J, backward width W."""

    Lc: int
    Lr: int
    alpha_seed: float
    alpha_bulk: float
    J: float
    W: int

    def __post_init__(self):
        if self.Lc < 1:
            raise ValueError(f"Lc must be >= 1, got {self.Lc}")
        if self.Lr < self.Lc:
            raise ValueError(f"need Lr >= Lc, got Lr={self.Lr}, Lc={self.Lc}")
        if not self.alpha_seed >= self.alpha_bulk > 0.0:
            raise ValueError(
                f"need alpha_seed >= alpha_bulk > 0, got "
                f"{self.alpha_seed}, {self.alpha_bulk}"
            )
        if self.J < 0.0:
            raise ValueError(f"J must be nonnegative, got {self.J}")
        if not 0 <= self.W < self.Lr:
            raise ValueError(f"need 0 <= W < Lr, got W={self.W}")


@dataclass(frozen=True)
class CouplingMatrix:
    """Variance ratios of the Lr x Lc block grid."""

    entries: np.ndarray


@dataclass(frozen=True)
class BlockLayout:
    """Row/column block partition of a realized seeded matrix."""

    row_bounds: np.ndarray  # Lr+1 offsets
    col_bounds: np.ndarray  # Lc+1 offsets
    profile: SeedingProfile

    @property
    def n(self) -> int:
        return int(self.col_bounds[-1])

    @property
    def m(self) -> int:
        return int(self.row_bounds[-1])

    @property
    def col_block(self) -> np.ndarray:
        """Variable-block index of every column."""
        sizes = np.diff(self.col_bounds)
        return np.repeat(np.arange(len(sizes)), sizes)

    @property
    def row_block(self) -> np.ndarray:
        sizes = np.diff(self.row_bounds)
        return np.repeat(np.arange(len(sizes)), sizes)

    @property
    def realized_rate(self) -> float:
        """Actual measurement rate after integer rounding of block sizes."""
        return self.m / self.n


class BlockMatrix:
    """Dense-in-blocks measurement matrix; zero blocks are not stored.

    blocks is a list of (q, p, array) with q/p the measurement/variable
    block indices.  Squared entries (needed by the message-passing sweeps
    on the pure-numpy backend) are cached on first request.
    """

    def __init__(self, row_bounds, col_bounds, blocks):
        self.row_bounds = np.asarray(row_bounds, dtype=np.int64)
        self.col_bounds = np.asarray(col_bounds, dtype=np.int64)
        self.blocks = blocks
        self._squared = None

    @classmethod
    def wrap(cls, F: np.ndarray) -> "BlockMatrix":
        """Treat an ordinary dense matrix as a single-block matrix."""
        m, n = F.shape
        return cls([0, m], [0, n], [(0, 0, np.ascontiguousarray(F, dtype=float))])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.row_bounds[-1]), int(self.col_bounds[-1])

    def squared_blocks(self):
        if self._squared is None:
            self._squared = [blk * blk for _, _, blk in self.blocks]
        return self._squared

    def matvec(self, x: np.ndarray) -> np.ndarray:
        m, n = self.shape
        if x.shape != (n,):
            raise ValueError(f"expected vector of length {n}, got {x.shape}")
        y = np.zeros(m)
        rb, cb = self.row_bounds, self.col_bounds
        for q, p, blk in self.blocks:
            y[rb[q]:rb[q + 1]] += blk @ x[cb[p]:cb[p + 1]]
        return y

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        m, n = self.shape
        if y.shape != (m,):
            raise ValueError(f"expected vector of length {m}, got {y.shape}")
        x = np.zeros(n)
        rb, cb = self.row_bounds, self.col_bounds
        for q, p, blk in self.blocks:
            x[cb[p]:cb[p + 1]] += y[rb[q]:rb[q + 1]] @ blk
        return x

    def to_dense(self) -> np.ndarray:
        F = np.zeros(self.shape)
        rb, cb = self.row_bounds, self.col_bounds
        for q, p, blk in self.blocks:
            F[rb[q]:rb[q + 1], cb[p]:cb[p + 1]] = blk
        return F


def homogeneous_matrix(m: int, n: int, seed: int) -> np.ndarray:
    """iid Gaussian matrix with entry variance 1/n, reproducible from seed."""
    if m < 1 or n < 1:
        raise ValueError(f"matrix sizes must be positive, got {m}x{n}")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)) / np.sqrt(n)


def total_rate(profile: SeedingProfile) -> float:
    """Overall measurements-per-component rate of a seeded design."""
    return (profile.alpha_seed + (profile.Lr - 1) * profile.alpha_bulk) / profile.Lc


def coupling_matrix(profile: SeedingProfile) -> CouplingMatrix:
    """Variance-ratio stencil: unit diagonal plus W lower diagonals, a single
    J superdiagonal, zero elsewhere."""
    q = np.arange(profile.Lr)[:, None]
    p = np.arange(profile.Lc)[None, :]
    d = q - p
    entries = np.where((d >= 0) & (d <= profile.W), 1.0,
                       np.where(d == -1, profile.J, 0.0))
    return CouplingMatrix(entries=entries)


def _block_row_sizes(profile: SeedingProfile, n: int) -> np.ndarray:
    m_seed = round(profile.alpha_seed * n / profile.Lc)
    m_bulk = round(profile.alpha_bulk * n / profile.Lc)
    sizes = np.full(profile.Lr, m_bulk, dtype=np.int64)
    sizes[0] = m_seed
    return sizes


def seeded_matrix(profile: SeedingProfile, n: int,
                  seed: int) -> tuple[BlockMatrix, BlockLayout]:
    """Draw a seeded measurement matrix of n columns.

    Every stored block (q, p) has iid Gaussian entries of variance
    J_qp / n; block row sizes are rounded per block, so the realized rate
    can differ slightly from total_rate(profile) and is reported through
    the returned layout.  Each block gets its own counter-based seed, so
    generation order cannot change the result.
    """
    if n % profile.Lc != 0:
        raise LayoutError(f"n={n} not divisible by Lc={profile.Lc}")
    ncol = n // profile.Lc
    row_sizes = _block_row_sizes(profile, n)
    if np.any(row_sizes < 1):
        raise LayoutError("block row count rounded to zero; increase n")
    row_bounds = np.concatenate([[0], np.cumsum(row_sizes)])
    col_bounds = np.arange(profile.Lc + 1, dtype=np.int64) * ncol
    coupling = coupling_matrix(profile).entries

    blocks = []
    scale = 1.0 / np.sqrt(n)
    for q in range(profile.Lr):
        for p in range(profile.Lc):
            J_qp = coupling[q, p]
            if J_qp == 0.0:
                continue
            rng = np.random.default_rng(np.random.SeedSequence([seed, q, p]))
            blk = rng.standard_normal((int(row_sizes[q]), ncol))
            blk *= np.sqrt(J_qp) * scale
            blocks.append((q, p, blk))
    layout = BlockLayout(row_bounds=row_bounds, col_bounds=col_bounds,
                         profile=profile)
    return BlockMatrix(row_bounds, col_bounds, blocks), layout


def measure(F, s: np.ndarray) -> np.ndarray:
    """Noiseless linear measurements y = F s."""
    s = np.asarray(s, dtype=float)
    if isinstance(F, BlockMatrix):
        return F.matvec(s)
    F = np.asarray(F)
    if F.ndim != 2 or F.shape[1] != s.shape[0]:
        raise ValueError(f"shape mismatch: F {F.shape}, s {s.shape}")
    return F @ s


def save_matrix(path, F, layout: BlockLayout | None = None) -> None:
    """Write a matrix to the package's binary format.

    Header: magic, uint64 m, uint64 n, uint32 metadata length, metadata
    JSON; payload: row-major float64 entries of the dense matrix.  Block
    structure (bounds and nonzero block indices) goes into the metadata so
    a seeded matrix round-trips as a BlockMatrix.
    """
    meta: dict = {"kind": "homogeneous"}
    if isinstance(F, BlockMatrix):
        meta = {
            "kind": "seeded",
            "row_bounds": F.row_bounds.tolist(),
            "col_bounds": F.col_bounds.tolist(),
            "blocks": [[q, p] for q, p, _ in F.blocks],
        }
        dense = F.to_dense()
    else:
        dense = np.ascontiguousarray(F, dtype=float)
    if layout is not None:
        meta["profile"] = {
            "Lc": layout.profile.Lc, "Lr": layout.profile.Lr,
            "alpha_seed": layout.profile.alpha_seed,
            "alpha_bulk": layout.profile.alpha_bulk,
            "J": layout.profile.J, "W": layout.profile.W,
        }
    blob = json.dumps(meta, sort_keys=True).encode()
    m, n = dense.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQI", m, n, len(blob)))
        fh.write(blob)
        fh.write(dense.tobytes(order="C"))


def load_matrix(path):
    """Read a matrix written by save_matrix; returns (matrix, metadata)."""
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError(f"{path}: not a gampcs matrix file")
        m, n, metalen = struct.unpack("<QQI", fh.read(20))
        meta = json.loads(fh.read(metalen).decode())
        data = np.frombuffer(fh.read(8 * m * n), dtype="<f8").reshape(m, n)
    data = np.ascontiguousarray(data)
    if meta.get("kind") == "seeded":
        rb = np.asarray(meta["row_bounds"], dtype=np.int64)
        cb = np.asarray(meta["col_bounds"], dtype=np.int64)
        blocks = [
            (q, p, np.ascontiguousarray(data[rb[q]:rb[q + 1], cb[p]:cb[p + 1]]))
            for q, p in meta["blocks"]
        ]
        return BlockMatrix(rb, cb, blocks), meta
    return data, meta
