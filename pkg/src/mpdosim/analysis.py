"""Fidelity, cross entropy and bitstring-probability statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Tuple, Union

import numpy as np


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class ProbDist:
    """Probabilities over labelled outcomes (bitstrings, qubit 0 first)."""

    labels: Tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        if len(self.labels) != len(self.probs):
            raise ValueError("labels and probabilities differ in length")
        if np.any(self.probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(self.probs.sum() - 1.0) > 1e-8:
            raise ValueError(f"probabilities sum to {self.probs.sum()!r}, not 1")

    @classmethod
    def from_vector(cls, probs: Sequence[float]) -> "ProbDist":
        probs = np.asarray(probs, dtype=float)
        n = int(np.log2(len(probs)))
        if 1 << n != len(probs):
            raise ValueError("vector length must be a power of two")
        labels = tuple(format(i, f"0{n}b") if n else "" for i in range(len(probs)))
        return cls(labels, probs)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "ProbDist":
        labels = tuple(sorted(counts))
        c = np.array([counts[k] for k in labels], dtype=float)
        return cls(labels, c / c.sum())

    def as_dict(self):
        return dict(zip(self.labels, self.probs))


def _psd_eig(m: np.ndarray, name: str):
    w, v = np.linalg.eigh(m)
    if w.min() < -1e-8:
        raise ArithmeticError(f"{name} has eigenvalue {w.min():.3g} below -1e-8")
    # eigenvalues at the rounding floor would add spurious sqrt(1e-16) terms
    floor = len(w) * np.finfo(float).eps * max(w.max(), 0.0)
    return np.where(w > floor, w, 0.0), v


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))`` (not squared).

    Evaluated as the trace norm of ``sqrt(rho) sqrt(sigma)``.
    """
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    for name, m in (("rho", rho), ("sigma", sigma)):
        if np.max(np.abs(m - m.conj().T)) > 1e-6:
            raise NotHermitianError(f"{name} is not Hermitian")
    # trace norm of sqrt(rho) sqrt(sigma): avoids square roots of rounding-level eigenvalues
    roots = []
    for name, m in (("rho", rho), ("sigma", sigma)):
        w, v = _psd_eig(0.5 * (m + m.conj().T), name)
        roots.append((v * np.sqrt(w)) @ v.conj().T)
    return float(np.linalg.svd(roots[0] @ roots[1], compute_uv=False).sum())


def pure_fidelity(psi: np.ndarray, rho: np.ndarray) -> float:
    """Fidelity of a pure state with a density matrix, ``sqrt(<psi|rho|psi>)``."""
    val = float(np.real(np.vdot(psi, rho @ psi)))
    return float(np.sqrt(max(val, 0.0)))


def cross_entropy(
    p: Union[ProbDist, np.ndarray], ps: Union[ProbDist, np.ndarray], floor: float = 1e-12
) -> float:
    """``-sum P(x) ln max(Ps(x), floor)`` over a shared label set."""
    if floor <= 0:
        raise ValueError("floor must be positive")
    if isinstance(p, ProbDist) and isinstance(ps, ProbDist):
        if set(p.labels) != set(ps.labels):
            raise ValueError("distributions are defined on different label sets")
        lookup = ps.as_dict()
        a = p.probs
        b = np.array([lookup[k] for k in p.labels])
    else:
        a = p.probs if isinstance(p, ProbDist) else np.asarray(p, dtype=float)
        b = ps.probs if isinstance(ps, ProbDist) else np.asarray(ps, dtype=float)
        if a.shape != b.shape:
            raise ValueError("distributions have different lengths")
    return float(-np.sum(a * np.log(np.maximum(b, floor))))


def porter_thomas_pdf(p, M: int):
    p = np.asarray(p, dtype=float)
    return (M - 1) * (1 - p) ** (M - 2)


def porter_thomas_cdf(p, M: int):
    """``1 - (1 - p)^(M - 1)``, the integral of the Porter-Thomas density."""
    if M < 2:
        raise ValueError("M must be at least 2")
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    with np.errstate(divide="ignore"):
        out = -np.expm1((M - 1) * np.log1p(-p))
    return out if out.ndim else float(out)


def noisy_depolarizing_cdf(p, alpha: float, M: int):
    """Cumulative distribution of ``(1 - alpha) p1 + alpha / M`` for Porter-Thomas ``p1``."""
    if M < 2:
        raise ValueError("M must be at least 2")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    if alpha == 1.0:
        out = np.where(p >= 1.0 / M, 1.0, 0.0)
        return out if out.ndim else float(out)
    shift = alpha / M
    x = np.clip((p - shift) / (1 - alpha), 0.0, 1.0)
    out = porter_thomas_cdf(x, M)
    out = np.where(p <= shift, 0.0, out)
    out = np.where(p >= (1 - alpha) + shift, 1.0, out)
    return out if np.ndim(out) else float(out)


class EmpiricalCDF:
    """Right-continuous empirical distribution function of a sample."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        self.values = v

    @property
    def support(self) -> np.ndarray:
        return np.unique(self.values)

    def __call__(self, x):
        return np.searchsorted(self.values, x, side="right") / self.values.size

    def left_limit(self, x):
        return np.searchsorted(self.values, x, side="left") / self.values.size


def empirical_cdf(values) -> EmpiricalCDF:
    return EmpiricalCDF(values)


def _left(cdf, x):
    return cdf.left_limit(x) if isinstance(cdf, EmpiricalCDF) else cdf(x)


def ks_distance(cdf_a: Callable, cdf_b: Callable, grid=None) -> float:
    """Supremum of ``|cdf_a - cdf_b|``.

    Empirical CDFs contribute their jump points to the evaluation grid and are
    compared on both sides of every jump; ``grid`` adds extra points, and is
    required when neither argument is empirical.
    """
    pts = [c.support for c in (cdf_a, cdf_b) if isinstance(c, EmpiricalCDF)]
    if grid is not None:
        pts.append(np.asarray(grid, dtype=float))
    if not pts:
        raise ValueError("a grid is needed to compare two analytic CDFs")
    x = np.unique(np.concatenate(pts))
    right = np.abs(np.asarray(cdf_a(x)) - np.asarray(cdf_b(x)))
    left = np.abs(np.asarray(_left(cdf_a, x)) - np.asarray(_left(cdf_b, x)))
    return float(max(right.max(), left.max()))


def sample_porter_thomas(M: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from the Porter-Thomas distribution."""
    u = rng.random(size)
    return -np.expm1(np.log1p(-u) / (M - 1))
