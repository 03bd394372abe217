"""Dense block-structured matrices over the (step, user) grid.

All joint information matrices in this package are square with side 2*T*K,
organised in 2x2 position blocks. Block (t, k) with 0-based t in [0, T) and
k in [0, K) occupies rows/cols [2*g, 2*g+2) where g = t*K + k: step-major,
user-minor, matching the stacking order of the state vector.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotSpd

# Relative eigenvalue threshold below which an information matrix is treated
# as indefinite rather than merely ill-conditioned.
SPD_RELATIVE_FLOOR = 1e-10

# Relative asymmetry above which symmetrisation is considered lossy.
ASYMMETRY_WARN = 1e-8

_BINARY_MAGIC = b"LTBM"


def block_index(t: int, k: int, n_users: int) -> int:
    """Flat block index of step t, user k (both 0-based)."""
    return t * n_users + k


def block_slice(g: int) -> slice:
    """Row/column slice of flat block index g."""
    return slice(2 * g, 2 * g + 2)


def symmetrize(mat: np.ndarray, warn_label: str | None = None) -> np.ndarray:
    """Return (X + X.T)/2, warning if the raw asymmetry is beyond round-off.

    Parameters
    ----------
    mat : ndarray
        Square matrix, nominally symmetric up to floating-point noise.
    warn_label : str, optional
        If given, emit a warning naming this quantity when the relative
        asymmetry exceeds the documented threshold.
    """
    sym = 0.5 * (mat + mat.T)
    if warn_label is not None:
        scale = np.linalg.norm(mat)
        if scale > 0.0:
            asym = np.linalg.norm(mat - mat.T) / scale
            if asym > ASYMMETRY_WARN:
                warnings.warn(
                    f"{warn_label}: relative asymmetry {asym:.3e} exceeds "
                    f"{ASYMMETRY_WARN:.0e}; symmetrised result may hide a bug",
                    stacklevel=2,
                )
    return sym


def is_spd(mat: np.ndarray) -> bool:
    """Whether a symmetric matrix is positive definite to working tolerance.

    The cutoff scales with the spectral norm: min eig > 1e-10 * ||X||_2,
    so a pure zero matrix is rejected and grading is scale-free.
    """
    sym = 0.5 * (mat + mat.T)
    eigs = np.linalg.eigvalsh(sym)
    top = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    if top == 0.0:
        return False
    return float(eigs[0]) > SPD_RELATIVE_FLOOR * top


def require_spd(mat: np.ndarray, label: str) -> None:
    """Raise NotSpd if ``mat`` fails the scale-free SPD test."""
    if not is_spd(mat):
        raise NotSpd(f"{label} is not symmetric positive definite")


def spd_sqrt_and_inv_sqrt(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Matrix square root and inverse square root of an SPD matrix.

    Eigenvalues are floored at 1e-14 * ||X||_2 before taking roots so that
    nearly singular inputs fail loudly downstream instead of producing NaNs.
    """
    sym = 0.5 * (mat + mat.T)
    vals, vecs = np.linalg.eigh(sym)
    floor = 1e-14 * float(np.max(np.abs(vals))) if vals.size else 0.0
    if np.any(vals <= floor):
        raise NotSpd("matrix square root requested for a non-PD matrix")
    root = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
    inv_root = vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T
    return root, inv_root


def spectral_radius(mat: np.ndarray, iters: int = 1000, tol: float = 1e-8) -> float:
    """Spectral radius estimate by power iteration.

    Works on a general square matrix; convergence is checked on the Rayleigh
    growth factor. Falls back to the dense eigensolver only when the iteration
    stalls (e.g. paired +/- eigenvalues of equal magnitude).
    """
    n = mat.shape[0]
    if n == 0:
        return 0.0
    rng = np.random.default_rng(0)
    vec = rng.standard_normal(n)
    vec /= np.linalg.norm(vec)
    prev = np.inf
    for _ in range(iters):
        nxt = mat @ vec
        norm = float(np.linalg.norm(nxt))
        if norm == 0.0:
            return 0.0
        vec = nxt / norm
        if abs(norm - prev) <= tol * max(1.0, abs(norm)):
            return norm
        prev = norm
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


@dataclass(frozen=True)
class BlockMatrix:
    """Square matrix over the (step, user) grid of 2x2 position blocks.

    Attributes
    ----------
    data : ndarray
        Dense (2*T*K, 2*T*K) array. Marked read-only on construction.
    n_steps, n_users : int
        Grid dimensions T and K.
    """

    data: np.ndarray
    n_steps: int
    n_users: int

    def __post_init__(self) -> None:
        side = 2 * self.n_steps * self.n_users
        arr = np.asarray(self.data, dtype=float)
        if arr.shape != (side, side):
            raise DimensionMismatch(
                f"block matrix must be {side}x{side} for T={self.n_steps}, "
                f"K={self.n_users}; got {arr.shape}"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def n_blocks(self) -> int:
        return self.n_steps * self.n_users

    @property
    def side(self) -> int:
        return 2 * self.n_blocks

    def block(self, t: int, k: int, t2: int, k2: int) -> np.ndarray:
        """The 2x2 block coupling state (t, k) to state (t2, k2)."""
        g = block_index(t, k, self.n_users)
        h = block_index(t2, k2, self.n_users)
        return self.data[block_slice(g), block_slice(h)]

    def diag_block(self, t: int, k: int) -> np.ndarray:
        return self.block(t, k, t, k)

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        scale = np.linalg.norm(self.data)
        if scale == 0.0:
            return True
        return np.linalg.norm(self.data - self.data.T) <= tol * scale

    def to_csv(self, path: str) -> None:
        """Write the dense matrix as plain comma-separated rows."""
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.data:
                fh.write(",".join(repr(float(x)) for x in row))
                fh.write("\n")

    def to_binary(self, path: str) -> None:
        """Write a compact binary dump.

        Layout: magic ``LTBM``, three little-endian uint32 (side, T, K),
        then side*side float64 little-endian values in row-major order.
        """
        with open(path, "wb") as fh:
            fh.write(_BINARY_MAGIC)
            fh.write(struct.pack("<III", self.side, self.n_steps, self.n_users))
            fh.write(self.data.astype("<f8").tobytes(order="C"))

    @classmethod
    def from_binary(cls, path: str) -> "BlockMatrix":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _BINARY_MAGIC:
                raise DimensionMismatch(f"{path}: not a block-matrix binary file")
            side, n_steps, n_users = struct.unpack("<III", fh.read(12))
            data = np.frombuffer(fh.read(8 * side * side), dtype="<f8")
        if data.size != side * side:
            raise DimensionMismatch(f"{path}: truncated block-matrix binary file")
        return cls(data.reshape(side, side).astype(float), n_steps, n_users)


def blocks_to_matrix(blocks: np.ndarray, n_steps: int, n_users: int) -> BlockMatrix:
    """Block-diagonal BlockMatrix from per-(t, k) 2x2 blocks.

    Parameters
    ----------
    blocks : ndarray
        Shape (T, K, 2, 2) (or (T*K, 2, 2)) diagonal blocks, step-major.
    """
    arr = np.asarray(blocks, dtype=float).reshape(n_steps * n_users, 2, 2)
    side = 2 * n_steps * n_users
    out = np.zeros((side, side))
    for g in range(n_steps * n_users):
        out[block_slice(g), block_slice(g)] = arr[g]
    return BlockMatrix(out, n_steps, n_users)
