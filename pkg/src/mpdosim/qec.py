"""Five-qubit code memory experiment: encode, idle under noise, decode, recover.

The encoder gate list lives in ``data/encoder_513.json``. Its CZ gates carry
the gate noise; Hadamards are ideal. On the MPDO backend CZ gates between
distant qubits are applied directly as a short operator string rather than
through swaps. Recovery is an ideal syndrome lookup
on the decoded ancillas, built numerically from the encoder itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ._kernels import apply_kraus_dm, apply_unitary_sv
from .analysis import pure_fidelity
from .circuit import CZ, IDENTITY, PAULI_X, PAULI_Y, PAULI_Z
from .mpdo import (
    apply_1q_channel,
    apply_1q_gate,
    apply_nonlocal_gate,
    apply_nonlocal_kraus,
    canonicalize_truncate_layer,
    mpdo_product_state,
    to_density_matrix,
)
from .noise import KrausChannel, NoiseModel, depolarizing

N_CODE = 5
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
GATES = {"H": HADAMARD, "CZ": CZ}

_s = 1 / np.sqrt(2)
ENSEMBLE: Tuple[Tuple[str, np.ndarray], ...] = (
    ("0", np.array([1, 0], dtype=complex)),
    ("1", np.array([0, 1], dtype=complex)),
    ("+", np.array([_s, _s], dtype=complex)),
    ("-", np.array([_s, -_s], dtype=complex)),
    ("+i", np.array([_s, 1j * _s], dtype=complex)),
    ("-i", np.array([_s, -1j * _s], dtype=complex)),
)

Op = Tuple[str, Tuple[int, ...]]


def parse_encoder(doc: Dict) -> List[Op]:
    if doc.get("n_qubits") != N_CODE:
        raise ValueError(f"encoder must act on {N_CODE} qubits")
    ops = []
    for i, op in enumerate(doc["ops"]):
        gate, qubits = op["gate"], tuple(op["qubits"])
        if gate not in GATES:
            raise ValueError(f"ops[{i}]: unknown gate {gate!r}")
        if len(qubits) != (1 if gate == "H" else 2) or len(set(qubits)) != len(qubits):
            raise ValueError(f"ops[{i}]: bad qubit list {list(qubits)}")
        if any(not 0 <= q < N_CODE for q in qubits):
            raise ValueError(f"ops[{i}]: qubit out of range")
        ops.append((gate, qubits))
    return ops


@lru_cache(maxsize=1)
def load_encoder() -> Tuple[Op, ...]:
    text = resources.files("mpdosim").joinpath("data/encoder_513.json").read_text()
    return tuple(parse_encoder(json.loads(text)))


def decoder_ops(encoder: Sequence[Op]) -> List[Op]:
    # H and CZ are self-inverse
    return list(reversed(encoder))


def _unitary(ops: Sequence[Op]) -> np.ndarray:
    m = np.eye(1 << N_CODE, dtype=complex)
    for gate, qubits in ops:
        for c in range(m.shape[1]):
            m[:, c] = apply_unitary_sv(m[:, c], N_CODE, list(qubits), GATES[gate])
    return m


def _pauli_on(q: int, p: np.ndarray) -> np.ndarray:
    out = np.eye(1)
    for k in range(N_CODE):
        out = np.kron(out, p if k == q else IDENTITY)
    return out


@lru_cache(maxsize=1)
def syndrome_table() -> Dict[int, np.ndarray]:
    """Map ancilla outcome (qubits 1-4 as an integer) to the correction on qubit 0.

    Every single-qubit Pauli error between encoder and decoder leaves the
    ancillas in a computational basis state and the data qubit rotated by a
    Pauli; the correction undoes that Pauli. Raises if two errors collide.
    """
    enc = _unitary(load_encoder())
    dec = enc.conj().T
    table = {0: IDENTITY.copy()}
    for q in range(N_CODE):
        for p in (PAULI_X, PAULI_Y, PAULI_Z):
            m = (dec @ _pauli_on(q, p) @ enc).reshape(2, 16, 2, 16)[:, :, :, 0]
            weights = np.sum(np.abs(m) ** 2, axis=(0, 2))
            syn = int(np.argmax(weights))
            if not np.isclose(weights[syn], 2.0):
                raise ValueError("encoder does not map single-qubit errors to syndromes")
            if syn in table:
                raise ValueError(f"syndrome {syn:04b} is shared by two errors")
            table[syn] = m[:, syn, :].conj().T
    return table


def recover(rho: np.ndarray) -> np.ndarray:
    """Measure the ancillas, correct qubit 0, and return its 2x2 state."""
    t = np.asarray(rho).reshape(2, 16, 2, 16)
    out = np.zeros((2, 2), dtype=complex)
    for syn in range(16):
        block = t[:, syn, :, syn]
        c = syndrome_table().get(syn)
        out += block if c is None else c @ block @ c.conj().T
    return out


def preparation(psi: np.ndarray) -> np.ndarray:
    """Unitary taking |0> to ``psi``."""
    a, b = psi
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]], dtype=complex)


def _noisy_cz_kraus(channel: Optional[KrausChannel]) -> List[np.ndarray]:
    if channel is None:
        return [CZ]
    if channel.arity == 2:
        return [CZ @ e for e in channel.kraus]
    return [CZ @ np.kron(a, b) for a in channel.kraus for b in channel.kraus]


def run_exact(psi: np.ndarray, gate_noise: NoiseModel, memory_rate: float) -> np.ndarray:
    """Encode ``psi``, idle, decode; return the 32x32 pre-recovery state."""
    v = np.zeros(1 << N_CODE, dtype=complex)
    v[0] = 1.0
    v = apply_unitary_sv(v, N_CODE, [0], preparation(psi))
    rho = np.outer(v, v.conj())
    cz = _noisy_cz_kraus(gate_noise.channel_for(0))
    memory = depolarizing(memory_rate).kraus

    def apply(ops):
        nonlocal rho
        for gate, qubits in ops:
            kraus = [HADAMARD] if gate == "H" else cz
            rho = apply_kraus_dm(rho, N_CODE, list(qubits), kraus)

    encoder = load_encoder()
    apply(encoder)
    for q in range(N_CODE):
        rho = apply_kraus_dm(rho, N_CODE, [q], memory)
    apply(decoder_ops(encoder))
    return 0.5 * (rho + rho.conj().T)


def _mpdo_cz(state, i: int, j: int, channel: Optional[KrausChannel]) -> None:
    if channel is not None and channel.arity == 1:
        apply_1q_channel(state, i, channel)
        apply_1q_channel(state, j, channel)
    elif channel is not None:
        apply_nonlocal_kraus(state, i, j, channel.kraus)
    apply_nonlocal_gate(state, i, j, CZ)


def run_mpdo(
    psi: np.ndarray,
    gate_noise: NoiseModel,
    memory_rate: float,
    chi_max: Optional[int] = 16,
    kappa_max: Optional[int] = 32,
) -> np.ndarray:
    """MPDO counterpart of :func:`run_exact`, truncating after every gate."""
    state = mpdo_product_state("0" * N_CODE, chi_max, kappa_max)
    apply_1q_gate(state, 0, preparation(psi))
    channel = gate_noise.channel_for(0)

    def apply(ops):
        for gate, qubits in ops:
            if gate == "H":
                apply_1q_gate(state, qubits[0], HADAMARD)
            else:
                _mpdo_cz(state, *qubits, channel)
            canonicalize_truncate_layer(state)

    encoder = load_encoder()
    apply(encoder)
    memory = depolarizing(memory_rate)
    for q in range(N_CODE):
        apply_1q_channel(state, q, memory)
    canonicalize_truncate_layer(state)
    apply(decoder_ops(encoder))
    return to_density_matrix(state)


def average_fidelity(
    backend: str,
    gate_noise: NoiseModel,
    memory_rate: float = 0.05,
    chi_max: Optional[int] = 16,
    kappa_max: Optional[int] = 32,
) -> float:
    """Recovered fidelity averaged over the six-state ensemble."""
    fids = []
    for _, psi in ENSEMBLE:
        if backend == "exact-dm":
            rho = run_exact(psi, gate_noise, memory_rate)
        elif backend == "mpdo":
            rho = run_mpdo(psi, gate_noise, memory_rate, chi_max, kappa_max)
        else:
            raise ValueError(f"backend {backend!r} not available for the code experiment")
        fids.append(pure_fidelity(psi, recover(rho)))
    return float(np.mean(fids))


def no_code_fidelity(memory_rate: float = 0.05) -> float:
    """Ensemble fidelity of a bare qubit through the memory channel."""
    kraus = depolarizing(memory_rate).kraus
    fids = []
    for _, psi in ENSEMBLE:
        rho = apply_kraus_dm(np.outer(psi, psi.conj()), 1, [0], kraus)
        fids.append(pure_fidelity(psi, rho))
    return float(np.mean(fids))


@dataclass(frozen=True)
class QecRow:
    model: str
    rate: float
    backend: str
    fidelity: float


def qec_experiment(
    model: str,
    rates: Sequence[float],
    memory_rate: float = 0.05,
    backends: Sequence[str] = ("exact-dm", "mpdo"),
    chi_max: Optional[int] = 16,
    kappa_max: Optional[int] = 32,
) -> List[QecRow]:
    rows = []
    for eps in rates:
        noise = NoiseModel(model, eps)
        for b in backends:
            f = average_fidelity(b, noise, memory_rate, chi_max, kappa_max)
            rows.append(QecRow(model, float(eps), b, f))
    return rows
