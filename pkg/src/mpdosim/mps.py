"""Pure-state MPS simulator with bond-dimension truncation (noiseless baseline)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import tensor as tc
from .circuit import Circuit, gate_matrix
from .exact import PURE_CAP, CapacityError


@dataclass
class MpsState:
    """Site tensors with axes (left bond, physical, right bond).

    ``center`` is the orthogonality centre; all tensors left of it are left
    isometries and all tensors right of it are right isometries.
    """

    tensors: List[np.ndarray]
    center: int = 0
    discarded: List[float] = field(default_factory=list)

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensors[self.center]))


def product_state(n: int) -> MpsState:
    t = np.zeros((1, 2, 1), dtype=complex)
    t[0, 0, 0] = 1.0
    return MpsState([t.copy() for _ in range(n)])


def _move_center(state: MpsState, site: int) -> None:
    ts = state.tensors
    while state.center < site:
        c = state.center
        q, r = tc.qr(ts[c], split=2)
        ts[c] = q
        ts[c + 1] = np.tensordot(r, ts[c + 1], axes=(1, 0))
        state.center += 1
    while state.center > site:
        c = state.center
        l, q = tc.lq(ts[c], split=1)
        ts[c] = q
        ts[c - 1] = np.tensordot(ts[c - 1], l, axes=(2, 0))
        state.center -= 1


def apply_1q(state: MpsState, site: int, u: np.ndarray) -> None:
    state.tensors[site] = np.einsum("st,ltr->lsr", u, state.tensors[site])


def apply_2q(state: MpsState, left: int, u: np.ndarray, chi_max: Optional[int]) -> float:
    """Apply a 4x4 gate on (left, left+1), truncate, renormalize; return discarded weight."""
    _move_center(state, left)
    a, b = state.tensors[left], state.tensors[left + 1]
    theta = np.einsum("lsm,mtr->lstr", a, b)
    theta = np.einsum("abst,lstr->labr", u.reshape(2, 2, 2, 2), theta)
    res = tc.svd_truncated(theta, split=2, max_rank=chi_max, rel_tol=1e-15)
    s = res.s / np.linalg.norm(res.s)
    state.tensors[left] = res.u
    state.tensors[left + 1] = s[:, None, None] * res.v
    state.center = left + 1
    state.discarded.append(res.discarded_weight)
    return res.discarded_weight


def mps_run(circuit: Circuit, chi_max: Optional[int]) -> MpsState:
    if chi_max is not None and chi_max < 1:
        raise ValueError("chi_max must be at least 1")
    state = product_state(circuit.n_qubits)
    for layer in circuit.layers:
        for g in layer.singles:
            apply_1q(state, g.qubit, gate_matrix(g))
        for g in sorted(layer.pairs, key=lambda g: g.left):
            apply_2q(state, g.left, g.matrix(), chi_max)
    return state


def to_statevector(state: MpsState, cap: int = PURE_CAP) -> np.ndarray:
    if state.n_qubits > cap:
        raise CapacityError(f"{state.n_qubits} qubits exceed the dense cap of {cap}")
    psi = state.tensors[0]
    for t in state.tensors[1:]:
        psi = np.tensordot(psi, t, axes=(psi.ndim - 1, 0))
    return psi.reshape(-1)


def mps_fidelity_to(state: MpsState, psi: np.ndarray) -> float:
    """Overlap magnitude |<psi|mps>| for a normalized dense vector ``psi``."""
    psi = np.asarray(psi)
    if psi.shape != (1 << state.n_qubits,):
        raise ValueError(
            f"state vector of shape {psi.shape} does not match {state.n_qubits} qubits"
        )
    v = to_statevector(state)
    return float(min(1.0, abs(np.vdot(psi, v)) / np.linalg.norm(v)))
