import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import naive_embed, naive_partial_trace, random_density, random_pure, taylor_exp
from qaeqec.linalg import (
    MAX_QUBITS,
    RegisterSizeError,
    StateValidityError,
    X,
    Z,
    append_zeros,
    apply_unitary,
    check_density,
    check_pure,
    embed_identity,
    exp_i_hermitian,
    fidelity,
    haar_random_unitary,
    is_unitary,
    ket,
    kron,
    partial_trace,
    pauli_string,
    permute_qubits,
    project_zeros,
    projector,
    swap_matrix,
)

seeds = st.integers(0, 2**32 - 1)


def subsets(n):
    return st.lists(st.integers(0, n - 1), unique=True, max_size=n)


# --- oracles --------------------------------------------------------------


@given(seeds, st.integers(1, 4), st.data())
def test_partial_trace_matches_index_sum(seed, n, data):
    rng = np.random.default_rng(seed)
    rho = random_density(n, rng)
    discard = data.draw(subsets(n))
    assert np.allclose(partial_trace(rho, discard), naive_partial_trace(rho, discard), atol=1e-12)


@given(seeds, st.integers(2, 4), st.data())
def test_apply_unitary_matches_explicit_embedding(seed, n, data):
    rng = np.random.default_rng(seed)
    k = data.draw(st.integers(1, n))
    targets = data.draw(st.permutations(range(n)))[:k]
    u = haar_random_unitary(k, rng)
    rho = random_density(n, rng)
    full = naive_embed(u, targets, n)
    assert np.allclose(apply_unitary(rho, u, targets), full @ rho @ full.conj().T, atol=1e-12)


@given(seeds, st.integers(1, 3), st.data())
def test_embed_identity_is_adjoint_of_partial_trace(seed, n_keep, data):
    rng = np.random.default_rng(seed)
    extra = data.draw(st.integers(1, 2))
    n = n_keep + extra
    positions = sorted(data.draw(st.permutations(range(n)))[:extra])
    a = rng.normal(size=(2**n_keep,) * 2) + 1j * rng.normal(size=(2**n_keep,) * 2)
    b = rng.normal(size=(2**n,) * 2) + 1j * rng.normal(size=(2**n,) * 2)
    lhs = np.trace(embed_identity(a, positions).conj().T @ b)
    rhs = np.trace(a.conj().T @ partial_trace(b, positions))
    assert np.isclose(lhs, rhs)


def test_embed_identity_explicit():
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.allclose(embed_identity(a, [0]), np.kron(np.eye(2), a))
    assert np.allclose(embed_identity(a, [1]), np.kron(a, np.eye(2)))


def test_append_and_project_zeros_are_adjoint(rng):
    a = random_density(2, rng)
    b = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    assert np.isclose(np.trace(append_zeros(a, 2).conj().T @ b), np.trace(a.conj().T @ project_zeros(b, 2)))
    z = np.zeros((4, 4))
    z[0, 0] = 1
    assert np.allclose(append_zeros(a, 2), np.kron(a, z))


@given(seeds, st.integers(1, 4), st.data())
def test_permute_matches_swap_products(seed, n, data):
    rng = np.random.default_rng(seed)
    rho = random_density(n, rng)
    if n == 1:
        assert np.allclose(permute_qubits(rho, [0]), rho)
        return
    a, b = data.draw(st.permutations(range(n)))[:2]
    perm = list(range(n))
    perm[a], perm[b] = perm[b], perm[a]
    s = swap_matrix(n, a, b)
    assert np.allclose(permute_qubits(rho, perm), s @ rho @ s.T)


def test_swap_matrix_moves_bits():
    assert np.allclose(swap_matrix(3, 0, 2) @ ket("100"), ket("001"))


def test_taylor_exponential_oracle(rng):
    g = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    k = (g + g.conj().T) / 2
    assert np.allclose(exp_i_hermitian(k, 0.3), taylor_exp(0.3j * k), atol=1e-10)


def test_haar_second_moment(rng):
    us = [haar_random_unitary(2, rng) for _ in range(4000)]
    a = np.array([abs(u[0, 0]) ** 2 for u in us])
    assert abs(a.mean() - 1 / 4) < 4 * a.std() / np.sqrt(len(a))
    b = a**2
    assert abs(b.mean() - 2 / (4 * 5)) < 4 * b.std() / np.sqrt(len(b))


# --- fidelity and validation ----------------------------------------------


def test_fidelity_of_pure_states_is_overlap(rng):
    a, b = random_pure(2, rng), random_pure(2, rng)
    assert np.isclose(fidelity(projector(a), projector(b)), abs(np.vdot(a, b)) ** 2)


def test_fidelity_of_mixed_states_known_value():
    assert np.isclose(fidelity(np.eye(2) / 2, projector(ket("0"))), 0.5)
    rho = np.diag([0.25, 0.75])
    sigma = np.diag([0.5, 0.5])
    expect = (np.sqrt(0.125) + np.sqrt(0.375)) ** 2
    assert np.isclose(fidelity(rho, sigma), expect)


@given(seeds, st.integers(1, 3))
def test_fidelity_symmetric_and_bounded(seed, n):
    rng = np.random.default_rng(seed)
    a, b = random_density(n, rng), random_density(n, rng, rank=1)
    f = fidelity(a, b)
    assert -1e-12 <= f <= 1 + 1e-12
    assert np.isclose(f, fidelity(b, a), atol=1e-9)


def test_check_density_rejects_bad_input():
    with pytest.raises(StateValidityError):
        check_density(np.diag([0.6, 0.6]))
    with pytest.raises(StateValidityError):
        check_density(np.array([[0.5, 0.5], [0.0, 0.5]]))
    with pytest.raises(StateValidityError):
        check_density(np.diag([1.5, -0.5]))
    with pytest.raises(StateValidityError):
        check_pure(np.array([1.0, 1.0]))


def test_register_size_limit():
    with pytest.raises(RegisterSizeError):
        kron(*[np.eye(2)] * (MAX_QUBITS + 1))
    with pytest.raises(RegisterSizeError):
        haar_random_unitary(MAX_QUBITS + 1, np.random.default_rng(0))


def test_pauli_string_ordering():
    assert np.allclose(pauli_string("XZ"), np.kron(X, Z))
    assert np.allclose(pauli_string("XI") @ ket("00"), ket("10"))


# --- invariants -----------------------------------------------------------


@given(seeds, st.integers(1, 4), st.data())
def test_unitary_action_preserves_spectrum(seed, n, data):
    rng = np.random.default_rng(seed)
    k = data.draw(st.integers(1, n))
    targets = data.draw(st.permutations(range(n)))[:k]
    rho = random_density(n, rng)
    out = apply_unitary(rho, haar_random_unitary(k, rng), targets)
    assert np.allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-10)


@given(seeds, st.integers(1, 4), st.data())
def test_partial_trace_yields_density(seed, n, data):
    rng = np.random.default_rng(seed)
    discard = data.draw(subsets(n))
    if len(discard) == n:
        discard = discard[:-1]
    check_density(partial_trace(random_density(n, rng), discard))


@given(seeds, st.integers(1, 4))
def test_haar_unitary_is_unitary(seed, n):
    assert is_unitary(haar_random_unitary(n, np.random.default_rng(seed)))


def test_batched_operations_match_loop(rng):
    rhos = np.stack([random_density(3, rng) for _ in range(5)])
    u = haar_random_unitary(2, rng)
    batched = apply_unitary(rhos, u, [2, 0])
    for i in range(5):
        assert np.allclose(batched[i], apply_unitary(rhos[i], u, [2, 0]))
    pt = partial_trace(rhos, [1])
    assert np.allclose(pt[3], partial_trace(rhos[3], [1]))
