"""Matrix product density operators.

A state of ``n`` qubits is a chain of tensors ``T[k]`` with axes
``(physical s, inner a, left bond l, right bond r)``. The represented density
matrix is ``rho = sum_a T T^dag``: each site contributes
``M[k] = sum_a T[s, a, l, r] conj(T[s', a, l', r'])`` and the bond pairs
``(l, l')``, ``(r, r')`` are traced along the chain. The chain is therefore a
purification in MPS form whose local index is ``(s, a)``, and positivity holds
for any tensors.

Every gate and channel acts on the ket half only. A channel with ``m`` Kraus
operators multiplies the inner dimension by ``m``; the new inner index of
block ``k`` is ``k * d + a``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import tensor as tc
from .circuit import SWAP, Circuit, gate_matrix
from .exact import DENSITY_CAP, CapacityError
from .noise import KrausChannel, NOISELESS, NoiseModel

DISTRIBUTION_CAP = 26
DEFAULT_REL_TOL = 1e-14


class NegativeProbabilityError(ArithmeticError):
    """A computed probability is negative beyond rounding noise."""


@dataclass
class MpdoState:
    tensors: List[np.ndarray]
    chi_max: Optional[int] = None
    kappa_max: Optional[int] = None
    rel_tol: float = DEFAULT_REL_TOL
    discarded_bond: float = 0.0
    discarded_inner: float = 0.0
    log_trace_factor: float = 0.0
    peak_bond: int = 1
    peak_inner: int = 1
    canonical_residuals: List[float] = field(default_factory=list)

    @property
    def n_qubits(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> List[int]:
        return [t.shape[3] for t in self.tensors[:-1]]

    @property
    def inner_dims(self) -> List[int]:
        return [t.shape[1] for t in self.tensors]

    def memory(self) -> int:
        """Number of stored complex entries, ``sum_k 2 d_k D_k D_k+1``."""
        return sum(t.size for t in self.tensors)

    def _track(self):
        self.peak_bond = max([self.peak_bond] + self.bond_dims)
        self.peak_inner = max([self.peak_inner] + self.inner_dims)


def _site(state: MpdoState, site: int) -> None:
    if not 0 <= site < state.n_qubits:
        raise IndexError(f"site {site} out of range for {state.n_qubits} qubits")


def _check_unitary(u: np.ndarray, tol: float = 1e-8) -> None:
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > tol:
        raise ValueError(f"gate is not unitary (deviation {dev:.3g})")


def mpdo_product_state(bits: str, chi_max=None, kappa_max=None, rel_tol=DEFAULT_REL_TOL) -> MpdoState:
    tensors = []
    for b in bits:
        t = np.zeros((2, 1, 1, 1), dtype=complex)
        t[int(b), 0, 0, 0] = 1.0
        tensors.append(t)
    return MpdoState(tensors, chi_max, kappa_max, rel_tol)


def mpdo_maximally_mixed(n: int, chi_max=None, kappa_max=None, rel_tol=DEFAULT_REL_TOL) -> MpdoState:
    if n < 1:
        raise ValueError("n must be positive")
    t = np.zeros((2, 2, 1, 1), dtype=complex)
    t[0, 0, 0, 0] = t[1, 1, 0, 0] = 1 / np.sqrt(2)
    state = MpdoState([t.copy() for _ in range(n)], chi_max, kappa_max, rel_tol)
    state._track()
    return state


def apply_1q_gate(state: MpdoState, site: int, u: np.ndarray) -> MpdoState:
    _site(state, site)
    _check_unitary(u)
    state.tensors[site] = np.tensordot(u, state.tensors[site], axes=([1], [0]))
    return state


def _reduce_pair(state: MpdoState, left: int):
    """Isolate the physical legs of a neighbouring pair.

    Returns ``(q1, r1, l2, q2)`` with ``T1 = q1 . r1`` and ``T2 = l2 . q2``,
    where ``q1`` (inner, left bond, mu) and ``q2`` (nu, inner, right bond) are
    isometries and ``r1`` (mu, s, m), ``l2`` (s, m, nu) carry the physical legs.
    """
    _site(state, left)
    _site(state, left + 1)
    t1 = state.tensors[left].transpose(1, 2, 0, 3)
    t2 = state.tensors[left + 1].transpose(0, 2, 1, 3)
    q1, r1 = tc.qr(t1, split=2)
    l2, q2 = tc.lq(t2, split=2)
    return q1, r1, l2, q2


def _svd_keep1(theta: np.ndarray, split: int, max_rank, rel_tol) -> tc.SvdResult:
    res = tc.svd_truncated(theta, split=split, max_rank=max_rank, rel_tol=rel_tol)
    if res.rank > 0:
        return res
    # keep a single zero-weight channel so the chain stays connected
    rows, cols = theta.shape[:split], theta.shape[split:]
    u = np.zeros(int(np.prod(rows)), dtype=complex)
    u[0] = 1.0
    v = np.zeros(int(np.prod(cols)), dtype=complex)
    v[0] = 1.0
    return tc.SvdResult(u.reshape(rows + (1,)), np.zeros(1), v.reshape((1,) + cols), 0.0)


def _split_pair(state, left, q1, q2, theta, n_kraus, max_rank):
    """Split ``theta`` (kraus, mu, s, t, nu) back into two site tensors."""
    res = _svd_keep1(theta, 3, max_rank, state.rel_tol)
    u, s, v = res.u, res.s, res.v
    d1 = q1.shape[0]
    t1 = np.tensordot(q1, u, axes=([2], [1])).transpose(3, 2, 0, 1, 4)  # s k x l c
    t1 = t1.reshape(2, n_kraus * d1, q1.shape[1], len(s))
    t2 = np.tensordot(s[:, None, None] * v, q2, axes=([2], [0])).transpose(1, 2, 0, 3)
    state.tensors[left] = np.ascontiguousarray(t1)
    state.tensors[left + 1] = np.ascontiguousarray(t2)
    state._track()
    if max_rank is not None and res.discarded_weight > 0:
        state.discarded_bond += res.discarded_weight
        _renormalize_by_contraction(state)
    return res


def apply_2q_gate(state: MpdoState, left: int, u: np.ndarray, truncate: bool = True) -> MpdoState:
    """Apply a 4x4 gate on ``(left, left + 1)``.

    With ``truncate`` the new bond is capped at ``state.chi_max``; otherwise
    only numerically zero singular values are dropped.
    """
    _check_unitary(u)
    q1, r1, l2, q2 = _reduce_pair(state, left)
    theta = np.einsum("usm,tmv->ustv", r1, l2)
    theta = np.einsum("abst,ustv->uabv", u.reshape(2, 2, 2, 2), theta)[None]
    _split_pair(state, left, q1, q2, theta, 1, state.chi_max if truncate else None)
    return state


def apply_1q_channel(state: MpdoState, site: int, channel: KrausChannel) -> MpdoState:
    if channel.arity != 1:
        raise ValueError(f"{channel.label} is a {channel.arity}-qubit channel")
    _site(state, site)
    t = state.tensors[site]
    ops = np.stack(channel.kraus)
    new = np.tensordot(ops, t, axes=([2], [0])).transpose(1, 0, 2, 3, 4)
    state.tensors[site] = new.reshape(2, len(channel.kraus) * t.shape[1], *t.shape[2:])
    state._track()
    return state


def apply_2q_channel(
    state: MpdoState, left: int, channel: KrausChannel, truncate: bool = True
) -> MpdoState:
    """Apply a two-qubit channel on a neighbouring pair.

    The pair is merged, each Kraus operator is applied to the merged physical
    leg, the blocks are stacked on the left site's inner index, and the result
    is split by SVD.
    """
    if channel.arity != 2:
        raise ValueError(f"{channel.label} is a {channel.arity}-qubit channel")
    q1, r1, l2, q2 = _reduce_pair(state, left)
    theta = np.einsum("usm,tmv->ustv", r1, l2)
    ops = np.stack(channel.kraus).reshape(-1, 2, 2, 2, 2)
    theta = np.einsum("kabst,ustv->kuabv", ops, theta)
    _split_pair(state, left, q1, q2, theta, len(channel.kraus), state.chi_max if truncate else None)
    return state


def apply_nonlocal_kraus(
    state: MpdoState, i: int, j: int, kraus: Sequence[np.ndarray]
) -> MpdoState:
    """Apply a two-qubit Kraus map on sites ``i`` and ``j`` (any distance).

    Each 4x4 operator (basis order ``(q_i, q_j)``) is split as
    ``sum_k A_k (x) B_k``. The Kraus label joins the inner index of the
    lower site and the pair ``(label, k)`` is carried along the bonds in
    between, so intermediate sites only gain a bond identity. No truncation
    happens here.
    """
    _site(state, i)
    _site(state, j)
    if i == j:
        raise ValueError("the two sites must differ")
    ops = [np.asarray(e, dtype=complex) for e in kraus]
    if any(e.shape != (4, 4) for e in ops):
        raise ValueError("Kraus operators must be 4x4")
    if i > j:
        ops = [SWAP @ e @ SWAP for e in ops]
        i, j = j, i
    parts_a, parts_b = [], []
    for e in ops:
        m = e.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
        u, s, vh = np.linalg.svd(m)
        keep = max(1, int(np.sum(s > 1e-14 * s[0])))
        parts_a.append((u[:, :keep] * s[:keep]).T.reshape(keep, 2, 2))
        parts_b.append(vh[:keep].reshape(keep, 2, 2))
    rank = max(len(a) for a in parts_a)
    n_ops = len(ops)
    a = np.zeros((n_ops, rank, 2, 2), dtype=complex)
    b = np.zeros((n_ops, rank, 2, 2), dtype=complex)
    for m, (pa, pb) in enumerate(zip(parts_a, parts_b)):
        a[m, : len(pa)] = pa
        b[m, : len(pb)] = pb
    width = n_ops * rank
    ts = state.tensors

    t = ts[i]  # s a l r
    new = np.einsum("mkst,talr->smalrk", a, t)
    d_in, dl, dr = t.shape[1], t.shape[2], t.shape[3]
    # bond index (r, m, k) keeps the label m so site j can pick B_mk
    wide = np.zeros((2, n_ops, d_in, dl, dr, n_ops, rank), dtype=complex)
    for m in range(n_ops):
        wide[:, m, :, :, :, m, :] = new[:, m]
    ts[i] = wide.reshape(2, n_ops * d_in, dl, dr * width)

    for p in range(i + 1, j):
        t = ts[p]
        eye = np.eye(width)
        mid = np.einsum("salr,xy->saxlry", t, eye)
        # bond order must match (bond, label) on both sides
        mid = mid.transpose(0, 1, 3, 2, 4, 5)
        ts[p] = mid.reshape(2, t.shape[1], t.shape[2] * width, t.shape[3] * width)

    t = ts[j]
    b2 = b.reshape(width, 2, 2)
    new = np.einsum("xst,talr->salxr", b2, t)
    ts[j] = new.reshape(2, t.shape[1], t.shape[2] * width, t.shape[3])
    state._track()
    return state


def apply_nonlocal_gate(state: MpdoState, i: int, j: int, u: np.ndarray) -> MpdoState:
    """Apply a 4x4 unitary on sites ``i`` and ``j`` without routing."""
    _check_unitary(u)
    return apply_nonlocal_kraus(state, i, j, [u])


def truncate_inner(state: MpdoState, site: int, kappa_max: Optional[int] = None) -> MpdoState:
    """Keep the ``kappa_max`` dominant components of the inner index at ``site``.

    The site tensor is matricized as (left bond, physical, right bond) x inner.
    """
    if kappa_max is not None and kappa_max < 1:
        raise ValueError("kappa_max must be at least 1")
    _site(state, site)
    t = state.tensors[site].transpose(2, 0, 3, 1)
    res = _svd_keep1(t, 3, kappa_max, state.rel_tol)
    state.discarded_inner += res.discarded_weight
    new = res.u * res.s
    state.tensors[site] = np.ascontiguousarray(new.transpose(1, 3, 0, 2))
    return state


def canonical_residual(t: np.ndarray) -> float:
    """Frobenius distance of ``sum_{s,a,l} conj(T) T`` from the identity."""
    m = t.reshape(-1, t.shape[3])
    g = m.conj().T @ m
    return float(np.linalg.norm(g - np.eye(g.shape[0])))


def left_canonicalize(state: MpdoState) -> float:
    """QR sweep left to right; returns the largest left-canonical residual."""
    ts = state.tensors
    worst = 0.0
    for k in range(state.n_qubits - 1):
        q, r = tc.qr(ts[k], split=3)
        ts[k] = q
        ts[k + 1] = np.tensordot(r, ts[k + 1], axes=([1], [2])).transpose(1, 2, 0, 3)
        worst = max(worst, canonical_residual(q))
    return worst


def truncate_bonds(state: MpdoState, chi_max: Optional[int]) -> None:
    """SVD sweep right to left over a left-canonical chain, capping bonds."""
    ts = state.tensors
    for k in range(state.n_qubits - 1, 0, -1):
        t = ts[k].transpose(2, 0, 1, 3)
        res = _svd_keep1(t, 1, chi_max, state.rel_tol)
        state.discarded_bond += res.discarded_weight
        ts[k] = np.ascontiguousarray(res.v.transpose(1, 2, 0, 3))
        ts[k - 1] = np.tensordot(ts[k - 1], res.u * res.s, axes=([3], [0]))


def _normalize_left_end(state: MpdoState) -> None:
    tr = float(np.real(np.vdot(state.tensors[0], state.tensors[0])))
    if tr <= 0:
        raise ArithmeticError("state has zero trace")
    state.tensors[0] = state.tensors[0] / np.sqrt(tr)
    state.log_trace_factor += np.log(tr)


def _renormalize_by_contraction(state: MpdoState) -> None:
    tr = mpdo_trace(state)
    if tr <= 0:
        raise ArithmeticError("state has zero trace")
    scale = tr ** (-0.5 / state.n_qubits)
    state.tensors = [t * scale for t in state.tensors]
    state.log_trace_factor += np.log(tr)


def canonicalize_truncate_layer(
    state: MpdoState, chi_max: Optional[int] = None, kappa_max: Optional[int] = None
) -> MpdoState:
    """Inner truncation on every site, QR sweep left to right, SVD sweep right to left.

    ``chi_max``/``kappa_max`` default to the caps stored on the state. The
    trace is renormalized to one afterwards and the left-canonical residual of
    the QR sweep is appended to ``state.canonical_residuals``.
    """
    chi_max = state.chi_max if chi_max is None else chi_max
    kappa_max = state.kappa_max if kappa_max is None else kappa_max
    for k in range(state.n_qubits):
        truncate_inner(state, k, kappa_max)
    state.canonical_residuals.append(left_canonicalize(state))
    truncate_bonds(state, chi_max)
    _normalize_left_end(state)
    return state


def mpdo_run(
    circuit: Circuit,
    noise: NoiseModel = NOISELESS,
    chi_max: Optional[int] = None,
    kappa_max: Optional[int] = None,
    rel_tol: float = DEFAULT_REL_TOL,
) -> MpdoState:
    """Simulate ``circuit`` with gate noise ahead of every pair gate.

    Bonds and inner indices are truncated once per layer, after all its
    gates and channels have been applied.
    """
    state = mpdo_product_state("0" * circuit.n_qubits, chi_max, kappa_max, rel_tol)
    for layer in circuit.layers:
        for g in layer.singles:
            apply_1q_gate(state, g.qubit, gate_matrix(g))
        for g in layer.pairs:
            channel = noise.channel_for(g.left)
            if channel is not None and channel.arity == 2:
                apply_2q_channel(state, g.left, channel, truncate=False)
            elif channel is not None:
                apply_1q_channel(state, g.left, channel)
                apply_1q_channel(state, g.left + 1, channel)
            apply_2q_gate(state, g.left, g.matrix(), truncate=False)
        canonicalize_truncate_layer(state)
    return state


def _transfer(env: np.ndarray, t: np.ndarray) -> np.ndarray:
    x = np.tensordot(env, t, axes=([0], [2]))  # m s a r
    return np.tensordot(x, t.conj(), axes=([1, 2, 0], [0, 1, 2]))


def mpdo_trace(state: MpdoState) -> float:
    env = np.ones((1, 1), dtype=complex)
    for t in state.tensors:
        env = _transfer(env, t)
    return float(np.real(env[0, 0]))


def _left_block(tensors: Sequence[np.ndarray]) -> np.ndarray:
    """Reduced operator of the leading sites with open right bonds (P, P', r, r')."""
    g = np.ones((1, 1, 1, 1), dtype=complex)
    for t in tensors:
        x = np.tensordot(g, t, axes=([2], [2]))  # P P' m s a r
        x = np.tensordot(x, t.conj(), axes=([2, 4], [2, 1]))  # P P' s r t u
        p = x.shape[0] * 2
        g = x.transpose(0, 2, 1, 4, 3, 5).reshape(p, p, x.shape[3], x.shape[5])
    return g


def _right_block(tensors: Sequence[np.ndarray]) -> np.ndarray:
    """Reduced operator of the trailing sites with open left bonds (P, P', l, l')."""
    g = np.ones((1, 1, 1, 1), dtype=complex)
    for t in reversed(tensors):
        x = np.tensordot(t, g, axes=([3], [2]))  # s a l P P' u
        x = np.tensordot(x, t.conj(), axes=([1, 5], [1, 3]))  # s l P P' t m
        p = x.shape[0] * x.shape[2]
        g = x.transpose(0, 2, 4, 3, 1, 5).reshape(p, p, x.shape[1], x.shape[5])
    return g


def to_density_matrix(state: MpdoState, cap: int = DENSITY_CAP) -> np.ndarray:
    n = state.n_qubits
    if n > cap:
        raise CapacityError(f"{n} qubits exceed the dense density-matrix cap of {cap}")
    h = n // 2
    gl = _left_block(state.tensors[:h])
    gr = _right_block(state.tensors[h:])
    pl, pr = gl.shape[0], gr.shape[0]
    rho = np.tensordot(gl, gr, axes=([2, 3], [2, 3]))  # (pl, ql, pr, qr)
    rho = rho.transpose(0, 2, 1, 3).reshape(pl * pr, pl * pr)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.real(np.trace(rho))


def _diag_left(tensors):
    g = np.ones((1, 1, 1), dtype=complex)
    for t in tensors:
        g = np.einsum("plm,salr,samu->psru", g, t, t.conj(), optimize=True)
        g = g.reshape(-1, g.shape[-2], g.shape[-1])
    return g


def _diag_right(tensors):
    g = np.ones((1, 1, 1), dtype=complex)
    for t in reversed(tensors):
        g = np.einsum("salr,samu,pru->splm", t, t.conj(), g, optimize=True)
        g = g.reshape(-1, g.shape[-2], g.shape[-1])
    return g


def _clamp(p: np.ndarray) -> np.ndarray:
    if np.any(p < -1e-12):
        raise NegativeProbabilityError(f"probability {p.min():.3g} below rounding tolerance")
    return np.where(p < 0, 0.0, p)


def full_distribution(state: MpdoState, cap: int = DISTRIBUTION_CAP) -> np.ndarray:
    """Probabilities of all bitstrings, qubit 0 most significant."""
    n = state.n_qubits
    if n > cap:
        raise CapacityError(f"{n} qubits exceed the distribution cap of {cap}")
    h = n // 2
    gl = _diag_left(state.tensors[:h])
    gr = _diag_right(state.tensors[h:])
    p = np.real(np.tensordot(gl, gr, axes=([1, 2], [1, 2]))).reshape(-1)
    p = p / p.sum()
    return _clamp(p)


def bitstring_prob(state: MpdoState, bits: str) -> float:
    if len(bits) != state.n_qubits:
        raise ValueError(f"bitstring {bits!r} does not have {state.n_qubits} bits")
    env = np.ones((1, 1), dtype=complex)
    for b, t in zip(bits, state.tensors):
        s = int(b)
        env = _transfer(env, t[s : s + 1])
    p = float(np.real(env[0, 0])) / mpdo_trace(state)
    return float(_clamp(np.array([p]))[0])


def sample(state: MpdoState, count: int, seed: int) -> Dict[str, int]:
    """Draw ``count`` bitstrings; returns a histogram keyed by bitstring.

    Conditionals come from the chain rule with right environments holding the
    trace of the unsampled sites. Shots sharing a prefix are split
    binomially, which is exact multinomial sampling.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = state.n_qubits
    right = [np.ones((1, 1), dtype=complex)]
    for t in reversed(state.tensors):
        right.append(np.einsum("salr,samq,rq->lm", t, t.conj(), right[-1], optimize=True))
    right = right[::-1]  # right[k] traces sites k..n-1
    frontier = [("", count, np.ones((1, 1), dtype=complex))]
    for k in range(n):
        t = state.tensors[k]
        nxt = []
        for prefix, c, env in frontier:
            envs = [_transfer(env, t[s : s + 1]) for s in (0, 1)]
            w = np.array([max(0.0, float(np.real(np.sum(e * right[k + 1])))) for e in envs])
            if w.sum() <= 0:
                raise NegativeProbabilityError("conditional probabilities vanish")
            c0 = int(rng.binomial(c, w[0] / w.sum()))
            for s, cs in ((0, c0), (1, c - c0)):
                if cs:
                    nxt.append((prefix + str(s), cs, envs[s] / w[s]))
        frontier = nxt
    return dict(sorted((p, c) for p, c, _ in frontier))


def save_snapshot(state: MpdoState, path) -> None:
    """Write tensors and the truncation ledger to an ``.npz`` container."""
    meta = {
        "n_qubits": state.n_qubits,
        "chi_max": state.chi_max,
        "kappa_max": state.kappa_max,
        "rel_tol": state.rel_tol,
        "discarded_bond": state.discarded_bond,
        "discarded_inner": state.discarded_inner,
        "log_trace_factor": state.log_trace_factor,
        "peak_bond": state.peak_bond,
        "peak_inner": state.peak_inner,
        "canonical_residuals": state.canonical_residuals,
        "shapes": [list(t.shape) for t in state.tensors],
    }
    arrays = {f"T{k}": t for k, t in enumerate(state.tensors)}
    np.savez(path, meta=np.array(json.dumps(meta)), **arrays)


def load_snapshot(path) -> MpdoState:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        tensors = [data[f"T{k}"].astype(complex) for k in range(meta["n_qubits"])]
    return MpdoState(
        tensors,
        meta["chi_max"],
        meta["kappa_max"],
        meta["rel_tol"],
        meta["discarded_bond"],
        meta["discarded_inner"],
        meta["log_trace_factor"],
        meta["peak_bond"],
        meta["peak_inner"],
        list(meta["canonical_residuals"]),
    )
