"""Dense complex tensor kernels shared by every backend.

Tensors are plain ``numpy.ndarray`` objects of dtype ``complex128`` stored in
C (row-major) order. Matrix factorizations take a ``split`` argument: the
number of leading axes that form the row index of the matricized tensor.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

DTYPE = np.complex128


class ShapeMismatchError(ValueError):
    """Raised when paired axes of a contraction have different extents."""


class NonFiniteError(ValueError):
    """Raised when a factorization receives NaN or Inf entries."""


def as_tensor(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=DTYPE)


def contract(a: np.ndarray, b: np.ndarray, axis_pairs: Sequence[Tuple[int, int]]) -> np.ndarray:
    """Sum over paired axes of ``a`` and ``b``.

    The result carries the free axes of ``a`` followed by the free axes of ``b``.
    """
    axes_a = [p[0] for p in axis_pairs]
    axes_b = [p[1] for p in axis_pairs]
    bad = [
        (i, j)
        for i, j in axis_pairs
        if a.shape[i] != b.shape[j]
    ]
    if bad:
        detail = ", ".join(f"a[{i}]={a.shape[i]} vs b[{j}]={b.shape[j]}" for i, j in bad)
        raise ShapeMismatchError(f"cannot contract axes with different extents: {detail}")
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def _matricize(t: np.ndarray, split: int) -> Tuple[np.ndarray, tuple, tuple]:
    t = np.asarray(t)
    if not 0 <= split <= t.ndim:
        raise ValueError(f"split={split} is invalid for a tensor with {t.ndim} axes")
    if not np.all(np.isfinite(t)):
        raise NonFiniteError("tensor contains NaN or Inf")
    rows, cols = t.shape[:split], t.shape[split:]
    return t.reshape(prod(rows), prod(cols)), rows, cols


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition ``m ~= u @ diag(s) @ v``.

    ``u`` has shape ``row_shape + (k,)`` and ``v`` has shape ``(k,) + col_shape``.
    ``discarded_weight`` is the relative squared weight of the dropped values.
    """

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return len(self.s)


def _svd(m: np.ndarray):
    try:
        return np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        # gesdd occasionally fails to converge on ill-conditioned input
        return scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")


def keep_count(s: np.ndarray, max_rank: Optional[int], rel_tol: float) -> int:
    """Smallest number of leading singular values meeting both constraints."""
    sq = s.astype(float) ** 2
    total = sq.sum()
    if total == 0.0:
        return 0
    # tail[k] = weight discarded when keeping the first k values
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1], [0.0]]) / total
    k = int(np.argmax(tail <= rel_tol))
    if max_rank is not None:
        k = min(k, max_rank)
    return k


def svd_truncated(
    m: np.ndarray,
    split: int = 1,
    max_rank: Optional[int] = None,
    rel_tol: float = 0.0,
) -> SvdResult:
    """SVD of ``m`` matricized after its first ``split`` axes, truncated.

    The kept rank is the smallest one whose discarded relative weight is at
    most ``rel_tol``, capped at ``max_rank`` (``None`` means unlimited).
    Each left singular vector is rotated so its largest-magnitude entry is
    real and positive.
    """
    if max_rank is not None and max_rank < 0:
        raise ValueError("max_rank must be non-negative")
    if rel_tol < 0:
        raise ValueError("rel_tol must be non-negative")
    mat, rows, cols = _matricize(m, split)
    if mat.size == 0:
        raise ValueError("cannot factor an empty tensor")
    u, s, vh = _svd(mat)
    k = keep_count(s, max_rank, rel_tol)
    total = float(np.sum(s**2))
    discarded = float(np.sum(s[k:] ** 2) / total) if total > 0 else 0.0
    u, s, vh = u[:, :k], s[:k], vh[:k, :]
    if k:
        pivot = np.argmax(np.abs(u), axis=0)
        top = u[pivot, np.arange(k)]
        phase = top / np.abs(top)
        u = u * phase.conj()[None, :]
        vh = vh * phase[:, None]
    return SvdResult(
        u=np.ascontiguousarray(u).reshape(rows + (k,)),
        s=s,
        v=np.ascontiguousarray(vh).reshape((k,) + cols),
        discarded_weight=discarded,
    )


def qr(m: np.ndarray, split: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Reduced QR of ``m`` matricized after its first ``split`` axes.

    Returns ``q`` with shape ``row_shape + (k,)`` and ``r`` with shape
    ``(k,) + col_shape`` where ``k = min(rows, cols)``.
    """
    mat, rows, cols = _matricize(m, split)
    q, r = np.linalg.qr(mat, mode="reduced")
    k = q.shape[1]
    return q.reshape(rows + (k,)), r.reshape((k,) + cols)


def lq(m: np.ndarray, split: int = 1) -> Tuple[np.ndarray, np.ndarray]:
    """Reduced LQ factorization; ``q`` has orthonormal rows."""
    mat, rows, cols = _matricize(m, split)
    q, r = np.linalg.qr(mat.conj().T, mode="reduced")
    k = q.shape[1]
    return r.conj().T.reshape(rows + (k,)), q.conj().T.reshape((k,) + cols)
