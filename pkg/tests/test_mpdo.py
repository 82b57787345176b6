import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpdosim import circuit as cm
from mpdosim import exact, mpdo
from mpdosim import noise as nz
from mpdosim._kernels import apply_kraus_dm
from mpdosim.analysis import fidelity
from mpdosim.noise import NoiseModel

from conftest import random_unitary

X = cm.PAULI_X
MODELS = ["dephasing", "depolarizing", "amplitude-damping", "collective-dephasing"]


def random_state(n, rng, layers=2, model="depolarizing", eps=0.2):
    """Small mixed MPDO together with its dense density matrix."""
    c = cm.random_circuit(n, layers, int(rng.integers(1 << 30)))
    noise = NoiseModel(model, eps)
    return mpdo.mpdo_run(c, noise), exact.run_noisy(c, noise)


def test_product_state_tensors():
    s = mpdo.mpdo_product_state("000")
    for t in s.tensors:
        assert t.shape == (2, 1, 1, 1) and t[0, 0, 0, 0] == 1
    np.testing.assert_allclose(mpdo.to_density_matrix(mpdo.mpdo_product_state("1")), np.diag([0, 1]))
    rho = mpdo.to_density_matrix(mpdo.mpdo_product_state("0110"))
    assert rho[0b0110, 0b0110] == pytest.approx(1.0)
    assert np.trace(rho @ rho).real == pytest.approx(1.0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_maximally_mixed(n):
    s = mpdo.mpdo_maximally_mixed(n)
    rho = mpdo.to_density_matrix(s)
    np.testing.assert_allclose(rho, np.eye(2**n) / 2**n, atol=1e-15)
    assert exact.purity(rho) == pytest.approx(2.0**-n)
    np.testing.assert_allclose(mpdo.full_distribution(s), np.full(2**n, 2.0**-n))


def test_single_gate(rng):
    s = mpdo.mpdo_product_state("00")
    before = [t.copy() for t in s.tensors]
    mpdo.apply_1q_gate(s, 0, np.eye(2))
    for a, b in zip(before, s.tensors):
        np.testing.assert_array_equal(a, b)
    mpdo.apply_1q_gate(s, 1, X)
    np.testing.assert_allclose(mpdo.to_density_matrix(s), np.diag([0, 1, 0, 0]), atol=1e-15)

    st_, rho = random_state(4, rng)
    u = random_unitary(2, rng)
    mpdo.apply_1q_gate(st_, 2, u)
    ref = apply_kraus_dm(rho, 4, [2], [u])
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), ref, atol=1e-12)


def test_non_unitary_gate_rejected():
    with pytest.raises(ValueError, match="unitary"):
        mpdo.apply_1q_gate(mpdo.mpdo_product_state("0"), 0, np.diag([1.0, 0.5]))


def test_two_qubit_gate(rng):
    st_, rho = random_state(4, rng)
    mpdo.apply_2q_gate(st_, 1, np.eye(4), truncate=False)
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), rho, atol=1e-12)
    s = mpdo.mpdo_product_state("10")
    mpdo.apply_2q_gate(s, 0, cm.CNOT)
    np.testing.assert_allclose(mpdo.to_density_matrix(s), np.diag([0, 0, 0, 1]), atol=1e-15)


def test_random_two_layers_unlimited(rng):
    c = cm.random_circuit(4, 2, 7)
    s = mpdo.mpdo_product_state("0000")
    rho = exact.run_noisy(cm.Circuit(4, ()))
    for layer in c.layers:
        for g in layer.singles:
            mpdo.apply_1q_gate(s, g.qubit, cm.gate_matrix(g))
            rho = apply_kraus_dm(rho, 4, [g.qubit], [cm.gate_matrix(g)])
        for g in layer.pairs:
            mpdo.apply_2q_gate(s, g.left, g.matrix(), truncate=False)
            rho = apply_kraus_dm(rho, 4, [g.left, g.left + 1], [g.matrix()])
    np.testing.assert_allclose(mpdo.to_density_matrix(s), rho, atol=1e-10)


def test_truncating_gate_caps_bond(rng):
    st_, _ = random_state(4, rng, layers=4)
    st_.chi_max = 2
    mpdo.apply_2q_gate(st_, 1, random_unitary(4, rng))
    assert st_.bond_dims[1] <= 2
    assert mpdo.mpdo_trace(st_) == pytest.approx(1.0)


def test_single_qubit_channels(rng):
    s = mpdo.mpdo_product_state("0")
    mpdo.apply_1q_channel(s, 0, nz.identity_channel())
    assert s.tensors[0].shape == (2, 1, 1, 1)
    h = cm.gate_matrix(cm.SingleQubitGate(0, np.pi / 2, np.pi / 4, 0.0))
    mpdo.apply_1q_gate(s, 0, h)
    mpdo.apply_1q_channel(s, 0, nz.dephasing(0.1))
    assert mpdo.to_density_matrix(s)[0, 1] == pytest.approx(0.5 * 0.8)

    st_, rho = random_state(3, rng)
    d = st_.inner_dims[1]
    mpdo.apply_1q_channel(st_, 1, nz.depolarizing(0.3))
    assert st_.inner_dims[1] == 4 * d
    ref = nz.apply_to_density(nz.depolarizing(0.3), rho, [1])
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), ref, atol=1e-12)


def test_two_qubit_channel(rng):
    st_, rho = random_state(4, rng)
    mpdo.apply_2q_channel(st_, 1, nz.identity_channel(2), truncate=False)
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), rho, atol=1e-12)
    full = nz.collective_dephasing(1.0)
    mpdo.apply_2q_channel(st_, 2, full, truncate=False)
    zc = nz.COLLECTIVE_Z
    ref = apply_kraus_dm(rho, 4, [2, 3], [zc])
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), ref, atol=1e-12)

    bell = mpdo.mpdo_product_state("00")
    mpdo.apply_1q_gate(bell, 0, cm.gate_matrix(cm.SingleQubitGate(0, np.pi / 2, np.pi / 4, 0.0)))
    mpdo.apply_2q_gate(bell, 0, cm.CNOT)
    rho = mpdo.to_density_matrix(bell)
    mpdo.apply_2q_channel(bell, 0, nz.collective_dephasing(0.3), truncate=False)
    ref = nz.apply_to_density(nz.collective_dephasing(0.3), rho, [0, 1])
    np.testing.assert_allclose(mpdo.to_density_matrix(bell), ref, atol=1e-10)


def test_channel_arity_checked():
    s = mpdo.mpdo_product_state("00")
    with pytest.raises(ValueError):
        mpdo.apply_1q_channel(s, 0, nz.collective_dephasing(0.1))
    with pytest.raises(ValueError):
        mpdo.apply_2q_channel(s, 0, nz.dephasing(0.1))


@pytest.mark.parametrize("pair", [(0, 3), (3, 1), (1, 2), (0, 4)])
def test_nonlocal_operators(rng, pair):
    st_, rho = random_state(5, rng, model="amplitude-damping", eps=0.1)
    u = random_unitary(4, rng)
    mpdo.apply_nonlocal_gate(st_, *pair, u)
    rho = apply_kraus_dm(rho, 5, list(pair), [u])
    ch = nz.collective_dephasing(0.3)
    mpdo.apply_nonlocal_kraus(st_, *pair, ch.kraus)
    rho = apply_kraus_dm(rho, 5, list(pair), ch.kraus)
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), rho, atol=1e-12)
    mpdo.canonicalize_truncate_layer(st_)
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), rho, atol=1e-12)


def test_inner_truncation_trivial_cases(rng):
    st_, rho = random_state(3, rng)
    d = st_.inner_dims[0]
    mpdo.truncate_inner(st_, 0, d + 3)
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), rho, atol=1e-12)
    s = mpdo.mpdo_product_state("01")
    mpdo.truncate_inner(s, 1, 1)
    np.testing.assert_allclose(mpdo.to_density_matrix(s), np.diag([0, 1, 0, 0]), atol=1e-15)


def test_inner_truncation_against_projected_purification(rng):
    st_, _ = random_state(3, rng, layers=3)
    site = 1
    t = st_.tensors[site]
    d = t.shape[1]
    keep = d - 1
    # dense oracle: project the inner leg onto the dominant eigenvectors of its Gram matrix
    m = t.transpose(2, 0, 3, 1).reshape(-1, d)
    w, v = np.linalg.eigh(m.conj().T @ m)
    proj = v[:, -keep:] @ v[:, -keep:].conj().T
    ref_state = mpdo.MpdoState([x.copy() for x in st_.tensors])
    ref_state.tensors[site] = np.einsum("salr,ab->sblr", t, proj)
    ref = mpdo.to_density_matrix(ref_state)
    full = mpdo.to_density_matrix(st_)
    mpdo.truncate_inner(st_, site, keep)
    got = mpdo.to_density_matrix(st_)
    assert st_.inner_dims[site] == keep
    dist = lambda a, b: 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()  # noqa: E731
    assert dist(got, full) == pytest.approx(dist(ref, full), abs=1e-9)


def test_sweep_without_caps_preserves_state(rng):
    st_, rho = random_state(5, rng, layers=3)
    mpdo.canonicalize_truncate_layer(st_)
    np.testing.assert_allclose(mpdo.to_density_matrix(st_), rho, atol=1e-10)
    assert st_.canonical_residuals[-1] < 1e-10
    s = mpdo.mpdo_product_state("010")
    mpdo.canonicalize_truncate_layer(s)
    assert s.bond_dims == [1, 1]


def naive_truncation(state, chi):
    """Cut every bond of a non-canonical chain by a local SVD of the bond pair."""
    ts = [t.copy() for t in state.tensors]
    for k in range(len(ts) - 1):
        a, b = ts[k], ts[k + 1]
        theta = np.tensordot(a, b, axes=([3], [2]))  # s a l | t b r
        sh = theta.shape
        m = theta.reshape(np.prod(sh[:3]), -1)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        r = min(chi, len(s))
        ts[k] = (u[:, :r] * s[:r]).reshape(*sh[:3], r)
        ts[k + 1] = vh[:r].reshape(r, *sh[3:]).transpose(1, 2, 0, 3)
    return mpdo.MpdoState(ts)


def test_canonical_truncation_beats_naive(rng):
    c = cm.random_circuit(6, 5, 3)
    noise = NoiseModel("depolarizing", 0.05)
    full = mpdo.mpdo_run(c, noise)
    rho = mpdo.to_density_matrix(full)
    naive = mpdo.to_density_matrix(naive_truncation(full, 4))
    s = mpdo.MpdoState([t.copy() for t in full.tensors])
    mpdo.canonicalize_truncate_layer(s, chi_max=4)
    assert max(s.bond_dims) <= 4
    assert fidelity(rho, mpdo.to_density_matrix(s)) >= fidelity(rho, naive) - 1e-12


def test_noiseless_run_matches_pure():
    c = cm.random_circuit(8, 8, 5)
    rho = mpdo.to_density_matrix(mpdo.mpdo_run(c))
    psi = exact.run_pure(c)
    assert np.real(np.vdot(psi, rho @ psi)) >= 1 - 1e-8


@pytest.mark.parametrize("model", MODELS)
def test_run_matches_exact(model):
    c = cm.random_circuit(6, 8, 1)
    noise = NoiseModel(model, 0.05)
    s = mpdo.mpdo_run(c, noise)
    rho = exact.run_noisy(c, noise)
    assert fidelity(rho, mpdo.to_density_matrix(s)) >= 1 - 1e-8
    np.testing.assert_allclose(mpdo.full_distribution(s), np.real(np.diag(rho)), atol=1e-8)
    assert max(s.canonical_residuals) < 1e-10


def test_pair_rates_used():
    c = cm.random_circuit(4, 4, 2)
    noise = NoiseModel("depolarizing", 0.0, {0: 0.2, 2: 0.05})
    assert fidelity(exact.run_noisy(c, noise), mpdo.to_density_matrix(mpdo.mpdo_run(c, noise))) >= 1 - 1e-8


@settings(max_examples=12)
@given(st.integers(2, 6), st.integers(1, 6), st.sampled_from(MODELS), st.floats(0, 0.3), st.integers(0, 999))
def test_truncated_state_is_valid(n, depth, model, eps, seed):
    c = cm.random_circuit(n, depth, seed)
    s = mpdo.mpdo_run(c, NoiseModel(model, eps), chi_max=2, kappa_max=3)
    rho = mpdo.to_density_matrix(s)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(rho).min() >= -1e-9
    assert max(s.bond_dims, default=1) <= 2 and max(s.inner_dims) <= 3
    assert mpdo.mpdo_trace(s) == pytest.approx(1.0)
    p = mpdo.full_distribution(s)
    assert p.min() >= 0 and p.sum() == pytest.approx(1.0)


def test_bitstring_probabilities(rng):
    assert mpdo.bitstring_prob(mpdo.mpdo_product_state("101"), "101") == pytest.approx(1.0)
    assert mpdo.bitstring_prob(mpdo.mpdo_maximally_mixed(3), "011") == pytest.approx(1 / 8)
    st_, rho = random_state(4, rng)
    for i in (0, 5, 13):
        assert mpdo.bitstring_prob(st_, format(i, "04b")) == pytest.approx(rho[i, i].real, abs=1e-12)


def test_sampling_is_seeded_and_unbiased(rng):
    st_, rho = random_state(4, rng)
    a = mpdo.sample(st_, 20000, seed=5)
    assert a == mpdo.sample(st_, 20000, seed=5)
    assert sum(a.values()) == 20000
    emp = np.zeros(16)
    for k, v in a.items():
        emp[int(k, 2)] = v / 20000
    assert np.abs(emp - np.real(np.diag(rho))).max() < 0.02


def test_snapshot_round_trip(tmp_path, rng):
    st_, _ = random_state(4, rng)
    st_.discarded_bond = 0.125
    path = tmp_path / "state.npz"
    mpdo.save_snapshot(st_, path)
    back = mpdo.load_snapshot(path)
    assert back.discarded_bond == 0.125
    assert back.canonical_residuals == st_.canonical_residuals
    for a, b in zip(st_.tensors, back.tensors):
        np.testing.assert_array_equal(a, b)


def test_distribution_cap():
    s = mpdo.mpdo_product_state("0" * 13)
    with pytest.raises(exact.CapacityError):
        mpdo.to_density_matrix(s)
    assert mpdo.bitstring_prob(s, "0" * 13) == pytest.approx(1.0)
