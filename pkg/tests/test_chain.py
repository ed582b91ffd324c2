import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncle_lab.chain import (
    SparseVector,
    assemble,
    basis_index,
    cyclic_shift,
    digits_of,
    expectation,
    index_of,
    residual,
)
from uncle_lab.errors import DimensionMismatchError, InputError, SizeCapError
from uncle_lab.models import ghz_tensor, ghz_uncle_term, ising_parent_term, zero_state, zero_uncle_term
from uncle_lab.span import LocalTerm, mps_state

seeds = st.integers(0, 2**31 - 1)


def rand_vec(rng, dim):
    return rng.standard_normal(dim) + 1j * rng.standard_normal(dim)


def rand_term(rng, support, d=2):
    m = rng.standard_normal((d**support,) * 2) + 1j * rng.standard_normal((d**support,) * 2)
    return LocalTerm(m + m.conj().T, support, d)


def test_digit_convention_site_one_most_significant():
    assert basis_index([1, 0, 0]) == 4
    assert basis_index([0, 0, 1]) == 1
    assert basis_index([2, 1], d=3) == 7
    digits = digits_of(np.arange(27), 3, 3)
    assert np.array_equal(index_of(digits, 3), np.arange(27))
    assert list(digits[5]) == [0, 1, 2]


def test_identity_term_gives_n():
    term = LocalTerm(np.eye(2), 1, 2)
    for n in (1, 3, 5):
        h = assemble(term, n, "periodic")
        assert np.allclose(h.to_dense(), n * np.eye(2**n))
        v = rand_vec(np.random.default_rng(n), 2**n)
        assert np.isclose(expectation(h, v), n)


def test_ghz_parent_annihilates_ghz():
    h = assemble(ising_parent_term(), 6, "periodic")
    assert h.n_terms == 6
    v = mps_state(ghz_tensor(), 6)
    assert np.allclose(h.apply(v), 0, atol=1e-12)
    assert abs(expectation(h, v)) < 1e-10


def test_three_site_wraparound_positions():
    h = assemble(ghz_uncle_term(), 7, "periodic")
    pos = h.positions()
    assert len(pos) == 7
    assert (5, 6, 0) in pos and (6, 0, 1) in pos
    assert len(assemble(ghz_uncle_term(), 7, "open").positions()) == 5


def test_zero_state_in_uncle_kernel():
    h = assemble(zero_uncle_term(), 6, "periodic")
    assert np.allclose(h.apply(zero_state(6)), 0)


@pytest.mark.parametrize("n", [3, 5, 8])
@pytest.mark.parametrize("boundary", ["open", "periodic"])
def test_dense_and_matvec_agree(n, boundary):
    rng = np.random.default_rng(n)
    h = assemble(rand_term(rng, 3), n, boundary)
    v = rand_vec(rng, 2**n)
    assert np.allclose(h.to_dense() @ v, h.apply(v), atol=1e-11)


def test_sparse_vector_apply_matches_dense():
    rng = np.random.default_rng(1)
    h = assemble(rand_term(rng, 2, d=3), 5, "periodic")
    v = rand_vec(rng, 3**5)
    v[rng.random(3**5) < 0.8] = 0
    sv = SparseVector.from_dense(v, 3, 5)
    assert np.allclose(h.apply(sv).to_dense(), h.apply(v))
    assert np.isclose(expectation(h, sv), expectation(h, v))
    assert np.isclose(residual(h, sv, 0.3), residual(h, v, 0.3))


def test_sparse_vector_algebra():
    a = SparseVector.from_dict({1: 1.0, 3: 2.0}, 2, 3)
    b = SparseVector.from_dict({3: -2.0, 5: 1j}, 2, 3)
    s = a + b
    assert set(s.configs) == {1, 5}
    assert np.isclose((a - a).norm2(), 0)
    assert np.isclose(a.vdot(b), -4.0)
    assert np.allclose((2 * a).to_dense(), 2 * a.to_dense())
    with pytest.raises(SizeCapError):
        SparseVector.from_dict({0: 1.0}, 2, 40).to_dense()


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(3, 7))
def test_hermitian_on_random_pairs(seed, n):
    rng = np.random.default_rng(seed)
    h = assemble(rand_term(rng, 2), n, "periodic")
    u, v = rand_vec(rng, 2**n), rand_vec(rng, 2**n)
    assert abs(np.vdot(u, h.apply(v)) - np.conj(np.vdot(v, h.apply(u)))) < 1e-10 * np.linalg.norm(u) * np.linalg.norm(v) * n


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(3, 7))
def test_projector_chain_positive(seed, n):
    rng = np.random.default_rng(seed)
    h = assemble(ghz_uncle_term(), n, "periodic")
    v = rand_vec(rng, 2**n)
    assert np.vdot(v, h.apply(v)).real >= -1e-10


@settings(max_examples=20, deadline=None)
@given(seeds, st.floats(-3, 3), st.floats(-3, 3))
def test_assemble_linear_in_term(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    h1, h2 = rand_term(rng, 2), rand_term(rng, 2)
    v = rand_vec(rng, 2**5)
    comb = assemble(h1.scaled(alpha) + h2.scaled(beta), 5).apply(v)
    sep = alpha * assemble(h1, 5).apply(v) + beta * assemble(h2, 5).apply(v)
    assert np.allclose(comb, sep, atol=1e-11 * (1 + abs(alpha) + abs(beta)) * 10)


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(3, 7))
def test_periodic_chain_commutes_with_shift(seed, n):
    rng = np.random.default_rng(seed)
    h = assemble(rand_term(rng, 3), n, "periodic")
    v = rand_vec(rng, 2**n)
    lhs = cyclic_shift(h.apply(v), 2, n)
    rhs = h.apply(cyclic_shift(v, 2, n))
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(v) * n


def test_cyclic_shift_moves_sites():
    v = np.zeros(8)
    v[basis_index([1, 0, 0])] = 1
    w = cyclic_shift(v, 2, 3)
    assert w[basis_index([0, 1, 0])] == 1
    assert np.allclose(cyclic_shift(v, 2, 3, 3), v)


@pytest.mark.parametrize("n", [4, 6])
def test_projector_spectrum_within_term_count(n):
    h = assemble(ghz_uncle_term(), n, "periodic")
    w = np.linalg.eigvalsh(h.to_dense())
    assert w.min() >= -1e-10 and w.max() <= h.n_terms + 1e-10


def test_errors():
    with pytest.raises(InputError):
        assemble(ghz_uncle_term(), 2)
    with pytest.raises(InputError):
        assemble(ghz_uncle_term(), 4, "twisted")
    h = assemble(ising_parent_term(), 4)
    with pytest.raises(DimensionMismatchError):
        h.apply(np.ones(8))
    with pytest.raises(InputError):
        expectation(h, np.zeros(16))
    with pytest.raises(SizeCapError):
        assemble(ising_parent_term(), 13).to_dense()
    with pytest.raises(SizeCapError):
        assemble(ising_parent_term(), 23).apply(np.zeros(1))
    with pytest.raises(DimensionMismatchError):
        h.apply(SparseVector.from_dict({0: 1.0}, 2, 5))


def test_sparse_assembly_matches_dense_matvec_large():
    rng = np.random.default_rng(3)
    h = assemble(ghz_uncle_term(), 14, "periodic")
    v = rand_vec(rng, 2**14)
    assert np.allclose(h.to_sparse() @ v, h.apply(v), atol=1e-10)
