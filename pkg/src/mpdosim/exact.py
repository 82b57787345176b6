"""Brute-force state-vector and density-matrix simulators used as oracles.

States are plain arrays: a state vector has shape ``(2**n,)`` and a density
matrix ``(2**n, 2**n)``, with qubit 0 as the most significant index bit.
"""

from __future__ import annotations

import numpy as np

from ._kernels import apply_superop_dm, apply_unitary_sv, superoperator
from .circuit import Circuit, Layer, gate_matrix
from .noise import NOISELESS, NoiseModel

PURE_CAP = 24
DENSITY_CAP = 12


class CapacityError(ValueError):
    """The requested system is larger than the dense simulator allows."""


def _check_cap(n: int, cap: int, what: str) -> None:
    if n > cap:
        raise CapacityError(f"{what} simulation of {n} qubits exceeds the cap of {cap}")


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def run_pure(circuit: Circuit, cap: int = PURE_CAP) -> np.ndarray:
    n = circuit.n_qubits
    _check_cap(n, cap, "state-vector")
    psi = zero_state(n)
    for layer in circuit.layers:
        for g in layer.singles:
            psi = apply_unitary_sv(psi, n, [g.qubit], gate_matrix(g))
        for g in layer.pairs:
            psi = apply_unitary_sv(psi, n, [g.left, g.left + 1], g.matrix())
    return psi


def _pair_superop(g, singles, noise: NoiseModel) -> np.ndarray:
    """Superoperator for single gates on the pair, gate noise, then the gate."""
    left = g.left
    u1 = singles.get(left, np.eye(2))
    u2 = singles.get(left + 1, np.eye(2))
    pre = np.kron(u1, u2)
    gate = g.matrix()
    channel = noise.channel_for(left)
    if channel is None:
        kraus = [gate @ pre]
    elif channel.arity == 2:
        kraus = [gate @ e @ pre for e in channel.kraus]
    else:
        kraus = [gate @ np.kron(a, b) @ pre for a in channel.kraus for b in channel.kraus]
    return superoperator(kraus)


def apply_noisy_layer(rho: np.ndarray, n: int, layer: Layer, noise: NoiseModel) -> np.ndarray:
    singles = {g.qubit: gate_matrix(g) for g in layer.singles}
    covered = set()
    for g in layer.pairs:
        rho = apply_superop_dm(rho, n, [g.left, g.left + 1], _pair_superop(g, singles, noise))
        covered.update((g.left, g.left + 1))
    for q, u in singles.items():
        if q not in covered:
            rho = apply_superop_dm(rho, n, [q], superoperator([u]))
    return 0.5 * (rho + rho.conj().T)


def run_noisy(circuit: Circuit, noise: NoiseModel = NOISELESS, cap: int = DENSITY_CAP) -> np.ndarray:
    """Exact density-matrix evolution with noise ahead of every pair gate."""
    n = circuit.n_qubits
    _check_cap(n, cap, "density-matrix")
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[0, 0] = 1.0
    for layer in circuit.layers:
        rho = apply_noisy_layer(rho, n, layer, noise)
    return rho


def bitstring_distribution(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.ndim == 1:
        p = np.abs(state) ** 2
    else:
        p = np.real(np.diag(state)).copy()
        p[(p < 0) & (p >= -1e-12)] = 0.0
    return p / p.sum()


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.vdot(rho, rho)))
