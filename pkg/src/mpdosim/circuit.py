"""Brickwork circuits of random single-qubit rotations and CNOT/CZ gates.

Qubit 0 is the most significant bit of every basis-state index and bitstring.

Random generation uses numpy's PCG64 seeded through ``SeedSequence(seed)``;
layer ``l`` draws from ``SeedSequence(seed).spawn(depth)[l]``. Within a
layer the draw order is ``3 * n`` uniforms (alpha, theta, phi for qubit 0,
then qubit 1, ...) followed by one uniform per pair gate, CNOT if below 0.5.
Layer ``l`` pairs sites ``(i, i + 1)`` with ``i % 2 == l % 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

TWO_PI = 2.0 * np.pi

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CNOT_REVERSED = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


class CircuitError(ValueError):
    """Invalid circuit structure."""


class CircuitParseError(CircuitError):
    """Malformed circuit document; ``location`` points at the bad element."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


@dataclass(frozen=True)
class SingleQubitGate:
    qubit: int
    alpha: float
    theta: float
    phi: float

    def matrix(self) -> np.ndarray:
        return gate_matrix(self)


@dataclass(frozen=True)
class TwoQubitGate:
    kind: str
    control: int
    target: int

    def __post_init__(self):
        if self.kind not in ("CNOT", "CZ"):
            raise CircuitError(f"unknown two-qubit gate kind {self.kind!r}")
        if abs(self.control - self.target) != 1:
            raise CircuitError(
                f"{self.kind} on ({self.control}, {self.target}) is not nearest-neighbour"
            )

    @property
    def left(self) -> int:
        return min(self.control, self.target)

    def matrix(self) -> np.ndarray:
        """4x4 unitary in the basis of (left site, right site)."""
        if self.kind == "CZ":
            return CZ.copy()
        return CNOT.copy() if self.control < self.target else CNOT_REVERSED.copy()


@dataclass(frozen=True)
class Layer:
    singles: Tuple[SingleQubitGate, ...] = ()
    pairs: Tuple[TwoQubitGate, ...] = ()


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    layers: Tuple[Layer, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        validate(self)

    @property
    def depth(self) -> int:
        return len(self.layers)


def gate_matrix(g: SingleQubitGate) -> np.ndarray:
    """Closed form of exp(i alpha n.sigma) for the unit axis n(theta, phi)."""
    nx = np.sin(g.theta) * np.cos(g.phi)
    ny = np.sin(g.theta) * np.sin(g.phi)
    nz = np.cos(g.theta)
    return np.cos(g.alpha) * IDENTITY + 1j * np.sin(g.alpha) * (
        nx * PAULI_X + ny * PAULI_Y + nz * PAULI_Z
    )


def validate(c: Circuit) -> None:
    if c.n_qubits < 1:
        raise CircuitError("n_qubits must be positive")
    for li, layer in enumerate(c.layers):
        seen = set()
        for g in layer.singles:
            if not 0 <= g.qubit < c.n_qubits:
                raise CircuitError(f"layer {li}: single-qubit gate on qubit {g.qubit} out of range")
            if g.qubit in seen:
                raise CircuitError(f"layer {li}: two single-qubit gates on qubit {g.qubit}")
            seen.add(g.qubit)
        used = set()
        for g in layer.pairs:
            for q in (g.control, g.target):
                if not 0 <= q < c.n_qubits:
                    raise CircuitError(f"layer {li}: pair gate on qubit {q} out of range")
                if q in used:
                    raise CircuitError(f"layer {li}: overlapping pair gates on qubit {q}")
                used.add(q)


def random_circuit(n_qubits: int, depth: int, seed: int) -> Circuit:
    if n_qubits < 2:
        raise CircuitError("random circuits need at least 2 qubits")
    if depth < 1:
        raise CircuitError("depth must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(depth)
    layers = []
    for ell, ss in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(ss))
        angles = rng.random(3 * n_qubits) * TWO_PI
        singles = tuple(
            SingleQubitGate(q, *map(float, angles[3 * q : 3 * q + 3]))
            for q in range(n_qubits)
        )
        lefts = range(ell % 2, n_qubits - 1, 2)
        coins = rng.random(len(lefts))
        pairs = tuple(
            TwoQubitGate("CNOT" if coin < 0.5 else "CZ", i, i + 1)
            for i, coin in zip(lefts, coins)
        )
        layers.append(Layer(singles, pairs))
    return Circuit(n_qubits, tuple(layers), int(seed))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def serialize(c: Circuit) -> str:
    """Deterministic JSON text; floats carry 17 significant digits."""
    out = [f'{{"n_qubits": {c.n_qubits}, "seed": {c.seed}, "layers": [']
    for li, layer in enumerate(c.layers):
        singles = ", ".join(
            f'{{"q": {g.qubit}, "alpha": {_fmt(g.alpha)}, '
            f'"theta": {_fmt(g.theta)}, "phi": {_fmt(g.phi)}}}'
            for g in layer.singles
        )
        pairs = ", ".join(
            f'{{"kind": "{g.kind}", "control": {g.control}, "target": {g.target}}}'
            for g in layer.pairs
        )
        sep = "," if li < len(c.layers) - 1 else ""
        out.append(f'\n  {{"singles": [{singles}], "pairs": [{pairs}]}}{sep}')
    out.append("\n]}\n")
    return "".join(out)


def _get(obj, key, kind, loc):
    if not isinstance(obj, dict):
        raise CircuitParseError("expected an object", loc)
    if key not in obj:
        raise CircuitParseError(f"missing field {key!r}", loc)
    value = obj[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise CircuitParseError(f"field {key!r} must be {kind.__name__}", f"{loc}.{key}")
    return value


def parse(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    n = _get(doc, "n_qubits", int, "$")
    seed = _get(doc, "seed", int, "$")
    raw_layers = _get(doc, "layers", list, "$")
    layers = []
    for li, raw in enumerate(raw_layers):
        loc = f"$.layers[{li}]"
        singles = tuple(
            SingleQubitGate(
                _get(g, "q", int, f"{loc}.singles[{gi}]"),
                *(_get(g, k, float, f"{loc}.singles[{gi}]") for k in ("alpha", "theta", "phi")),
            )
            for gi, g in enumerate(_get(raw, "singles", list, loc))
        )
        pairs = []
        for gi, g in enumerate(_get(raw, "pairs", list, loc)):
            ploc = f"{loc}.pairs[{gi}]"
            try:
                pairs.append(
                    TwoQubitGate(
                        _get(g, "kind", str, ploc),
                        _get(g, "control", int, ploc),
                        _get(g, "target", int, ploc),
                    )
                )
            except CircuitParseError:
                raise
            except CircuitError as exc:
                raise CircuitParseError(str(exc), ploc) from exc
        layers.append(Layer(singles, tuple(pairs)))
    try:
        return Circuit(n, tuple(layers), seed)
    except CircuitError as exc:
        raise CircuitParseError(str(exc), "$.layers") from exc


def load(path) -> Circuit:
    with open(path) as fh:
        return parse(fh.read())


def save(c: Circuit, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(c))
