"""Index-level kernels for dense state vectors and density matrices."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def n_qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def apply_unitary_sv(psi: np.ndarray, n: int, sites: Sequence[int], u: np.ndarray) -> np.ndarray:
    k = len(sites)
    t = psi.reshape((2,) * n)
    t = np.tensordot(u.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), list(sites)))
    t = np.moveaxis(t, list(range(k)), list(sites))
    return np.ascontiguousarray(t).reshape(-1)


def superoperator(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Row-major vectorized action: vec(E rho E^dag) = kron(E, E*) vec(rho)."""
    return sum(np.kron(e, e.conj()) for e in kraus)


def apply_superop_dm(rho: np.ndarray, n: int, sites: Sequence[int], sop: np.ndarray) -> np.ndarray:
    """Apply a superoperator acting on ``sites`` to a 2^n x 2^n density matrix."""
    k = len(sites)
    axes = list(sites) + [n + q for q in sites]
    t = rho.reshape((2,) * (2 * n))
    t = np.moveaxis(t, axes, list(range(2 * k)))
    shape = t.shape
    t = (sop @ t.reshape(4**k, -1)).reshape(shape)
    t = np.moveaxis(t, list(range(2 * k)), axes)
    return np.ascontiguousarray(t).reshape(1 << n, 1 << n)


def apply_kraus_dm(rho, n, sites, kraus):
    return apply_superop_dm(rho, n, sites, superoperator(kraus))
