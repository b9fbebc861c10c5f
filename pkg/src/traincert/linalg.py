"""Dense real linear algebra used by the certification toolkit.

Matrices are plain 2-D float64 numpy arrays throughout the package; the
helpers here validate the entry invariants (finite, nonempty) and provide
the SVD-backed pseudoinverse with an explicit singular value cutoff, which
the bound engine applies repeatedly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Matrix = np.ndarray

# Relative cutoff is this factor times max(rows, cols); repeated projections
# need a stable rank decision, not machine-epsilon truncation.
DEFAULT_RCOND_SCALE = 1e-12


class ShapeError(ValueError):
    """Operands have incompatible or invalid shapes."""


class NumericalError(RuntimeError):
    """A numerical routine (SVD) failed to converge."""


def as_matrix(a, name: str = "matrix") -> Matrix:
    """Validate and return `a` as a 2-D float64 array.

    Raises ShapeError for wrong dimensionality or empty axes, ValueError for
    non-finite entries.
    """
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.count_nonzero(~np.isfinite(arr)))
        raise ValueError(f"{name} contains {bad} non-finite entries")
    return arr


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product a @ b with an explicit shape check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply shapes {a.shape} x {b.shape}: "
            f"inner dimensions {a.shape[1]} != {b.shape[0]}"
        )
    return a @ b


def frob_norm_sq(a: Matrix) -> float:
    """Sum of squared entries."""
    a = np.asarray(a, dtype=np.float64)
    return float(np.vdot(a, a).real)


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD a = u @ diag(s) @ v.T with s sorted descending."""

    u: Matrix
    s: np.ndarray
    v: Matrix


def svd(a: Matrix) -> SvdResult:
    a = as_matrix(a)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge for shape {a.shape}") from exc
    return SvdResult(u=u, s=s, v=vt.T)


def pinv(a: Matrix, rcond: float | None = None) -> Matrix:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values at or below rcond * max singular value are treated as
    zero. With rcond=None the cutoff factor is DEFAULT_RCOND_SCALE *
    max(rows, cols).
    """
    a = as_matrix(a)
    if rcond is None:
        rcond = DEFAULT_RCOND_SCALE * max(a.shape)
    if rcond <= 0:
        raise ValueError(f"rcond must be > 0, got {rcond}")
    res = svd(a)
    cutoff = rcond * (res.s[0] if res.s.size else 0.0)
    keep = res.s > cutoff
    inv_s = np.where(keep, 1.0 / np.where(keep, res.s, 1.0), 0.0)
    return (res.v * inv_s) @ res.u.T


def augment_ones(y: Matrix) -> Matrix:
    """Append a row of ones, turning y (m x d) into (m+1) x d.

    This is the bias-aware form: a least-squares map fitted against the
    augmented source absorbs an additive offset in its last column.
    """
    y = as_matrix(y)
    return np.vstack([y, np.ones((1, y.shape[1]), dtype=np.float64)])
