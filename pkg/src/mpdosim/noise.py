"""Kraus channels for gate noise and the noise-model specification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from ._kernels import apply_kraus_dm, n_qubits_of
from .circuit import IDENTITY, PAULI_X, PAULI_Y, PAULI_Z

MODELS = ("none", "dephasing", "depolarizing", "amplitude-damping", "collective-dephasing")
COLLECTIVE_Z = np.diag([1, -1, -1, 1]).astype(complex)


class NoiseSpecError(ValueError):
    pass


@dataclass(frozen=True)
class KrausChannel:
    kraus: Tuple[np.ndarray, ...]
    label: str
    rate: float

    @property
    def arity(self) -> int:
        return n_qubits_of(self.kraus[0].shape[0])

    def completeness_error(self) -> float:
        dim = self.kraus[0].shape[0]
        acc = sum(e.conj().T @ e for e in self.kraus)
        return float(np.max(np.abs(acc - np.eye(dim))))


def _check_rate(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise NoiseSpecError(f"noise rate {eps} outside [0, 1]")
    return eps


def _drop_zero(ops, label, eps):
    # zero-weight Kraus terms would only inflate the inner dimension
    kept = tuple(e for e in ops if np.any(e != 0))
    return KrausChannel(kept, label, eps)


def identity_channel(arity: int = 1) -> KrausChannel:
    return KrausChannel((np.eye(2**arity, dtype=complex),), "none", 0.0)


def dephasing(eps: float) -> KrausChannel:
    eps = _check_rate(eps)
    return _drop_zero((np.sqrt(1 - eps) * IDENTITY, np.sqrt(eps) * PAULI_Z), "dephasing", eps)


def depolarizing(eps: float) -> KrausChannel:
    eps = _check_rate(eps)
    w = np.sqrt(eps / 4)
    return _drop_zero(
        (np.sqrt(1 - 3 * eps / 4) * IDENTITY, w * PAULI_X, w * PAULI_Y, w * PAULI_Z),
        "depolarizing",
        eps,
    )


def amplitude_damping(eps: float) -> KrausChannel:
    eps = _check_rate(eps)
    a0 = np.array([[1, 0], [0, np.sqrt(1 - eps)]], dtype=complex)
    a1 = np.array([[0, np.sqrt(eps)], [0, 0]], dtype=complex)
    return _drop_zero((a0, a1), "amplitude-damping", eps)


def collective_dephasing(eps: float) -> KrausChannel:
    eps = _check_rate(eps)
    return _drop_zero(
        (np.sqrt(1 - eps) * np.eye(4, dtype=complex), np.sqrt(eps) * COLLECTIVE_Z),
        "collective-dephasing",
        eps,
    )


CONSTRUCTORS = {
    "dephasing": dephasing,
    "depolarizing": depolarizing,
    "amplitude-damping": amplitude_damping,
    "collective-dephasing": collective_dephasing,
}


def make_channel(model: str, eps: float) -> KrausChannel:
    if model == "none":
        return identity_channel()
    try:
        return CONSTRUCTORS[model](eps)
    except KeyError:
        raise NoiseSpecError(f"unknown noise model {model!r}; choose from {MODELS}") from None


def apply_to_density(channel: KrausChannel, rho: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """``sum_k E_k rho E_k^dag`` with the Kraus operators acting on ``sites``."""
    n = n_qubits_of(rho.shape[0])
    sites = list(sites)
    if len(sites) != channel.arity:
        raise ValueError(f"{channel.label} acts on {channel.arity} qubit(s), got sites {sites}")
    for q in sites:
        if not 0 <= q < n:
            raise ValueError(f"site {q} out of range for {n} qubits")
    return apply_kraus_dm(np.asarray(rho, dtype=complex), n, sites, channel.kraus)


@dataclass(frozen=True)
class NoiseModel:
    """Gate noise attached to every two-qubit gate.

    ``pair_rates`` optionally overrides ``rate`` per pair, keyed by the lower
    site index of the pair.
    """

    model: str = "none"
    rate: float = 0.0
    pair_rates: Optional[Mapping[int, float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.model not in MODELS:
            raise NoiseSpecError(f"unknown noise model {self.model!r}; choose from {MODELS}")
        _check_rate(self.rate)
        for r in (self.pair_rates or {}).values():
            _check_rate(r)

    @property
    def is_noiseless(self) -> bool:
        if self.model == "none":
            return True
        rates = [self.rate] + list((self.pair_rates or {}).values())
        return all(r == 0 for r in rates)

    @property
    def arity(self) -> int:
        return 2 if self.model == "collective-dephasing" else 1

    def rate_for(self, left_site: int) -> float:
        if self.pair_rates is not None and left_site in self.pair_rates:
            return float(self.pair_rates[left_site])
        return float(self.rate)

    def channel_for(self, left_site: int) -> Optional[KrausChannel]:
        """Channel attached to the pair starting at ``left_site``; None if trivial."""
        if self.model == "none":
            return None
        eps = self.rate_for(left_site)
        if eps == 0.0:
            return None
        return make_channel(self.model, eps)

    def spec(self) -> str:
        return f"{self.model}:{self.rate:.17g}" if self.model != "none" else "none"

    def to_dict(self) -> Dict:
        out = {"model": self.model, "rate": self.rate}
        if self.pair_rates:
            out["pair_rates"] = {str(k): v for k, v in sorted(self.pair_rates.items())}
        return out


NOISELESS = NoiseModel()


def parse_noise_spec(text: str) -> NoiseModel:
    """Parse ``"<model>:<rate>"`` (or just ``"none"``)."""
    text = text.strip()
    if text == "none":
        return NOISELESS
    model, sep, rate = text.partition(":")
    if not sep:
        raise NoiseSpecError(f"noise spec {text!r} is not of the form MODEL:RATE")
    try:
        eps = float(rate)
    except ValueError:
        raise NoiseSpecError(f"noise rate {rate!r} is not a number") from None
    return NoiseModel(model, eps)
