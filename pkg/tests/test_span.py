import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncle_lab.chain import assemble
from uncle_lab.errors import InputError, SizeCapError
from uncle_lab.models import ghz_tensor, zero_doubled_tensor
from uncle_lab.mps import MpsTensor, as_tensor, block_sites, concatenate_sites, random_block_mps, random_tensor
from uncle_lab.span import (
    LocalTerm,
    ProjectorTerm,
    contract_state,
    domain_wall_span,
    mps_state,
    projector_complement,
    span_basis,
)


def ket(bits):
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def test_ghz_two_site_span():
    c = as_tensor(ghz_tensor())
    basis = span_basis(block_sites(c, 2), site_dim=2)
    assert basis.dim == 2
    expect = np.outer(ket("00"), ket("00")) + np.outer(ket("11"), ket("11"))
    assert np.allclose(basis.projector(), expect)


def test_ising_projector():
    c = as_tensor(ghz_tensor())
    term = projector_complement(block_sites(c, 2), site_dim=2)
    assert term.support == 2 and term.local_dim == 2
    assert np.allclose(term.matrix, np.diag([0, 1, 1, 0]))


def test_injective_span_is_full_algebra():
    t = random_tensor(5, 2, np.random.default_rng(0), canonical=False)
    assert span_basis(t).dim == 4


def test_zero_tensor_has_empty_span():
    basis = span_basis(np.zeros((3, 2, 2)))
    assert basis.dim == 0
    assert np.allclose(projector_complement(np.zeros((3, 2, 2))).matrix, np.eye(3))


def test_full_span_gives_zero_projector():
    t = random_tensor(4, 2, np.random.default_rng(1), canonical=False)
    assert np.allclose(projector_complement(t).matrix, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_span_basis_orthonormal_and_bounded(seed):
    rng = np.random.default_rng(seed)
    t = random_tensor(2, 2, rng, canonical=False)
    fam = block_sites(t, 3)
    basis = span_basis(fam, site_dim=2)
    q = basis.vectors
    assert np.allclose(q.conj().T @ q, np.eye(basis.dim), atol=1e-10)
    assert basis.dim <= min(8, 4)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_projector_gauge_invariant(seed):
    rng = np.random.default_rng(seed)
    t = block_sites(random_tensor(2, 2, rng, canonical=False), 2)
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    p1 = projector_complement(t, site_dim=2)
    p2 = projector_complement(t.gauge(g), site_dim=2)
    assert np.linalg.norm(p1.matrix - p2.matrix, 2) <= 1e-9


def test_projector_annihilates_span_and_rank():
    rng = np.random.default_rng(3)
    t = block_sites(random_tensor(3, 2, rng, canonical=False), 2)
    term = projector_complement(t, site_dim=3)
    basis = span_basis(t, site_dim=3)
    assert np.allclose(term.matrix @ basis.vectors, 0, atol=1e-12)
    assert round(np.trace(term.matrix).real) == 9 - basis.dim


def test_projector_continuity():
    rng = np.random.default_rng(6)
    t = random_tensor(5, 2, rng, canonical=False).mats
    # a non-full span so the projector is not identically zero
    t2 = concatenate_sites(t[:3], t[:3])
    q = rng.standard_normal(t2.shape) + 1j * rng.standard_normal(t2.shape)
    base = projector_complement(t2).matrix
    ratios = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4, 1e-5):
        dist = np.linalg.norm(projector_complement(t2 + eps * q).matrix - base, 2)
        ratios.append(dist / eps)
    assert max(ratios) < 3 * min(ratios)


def test_local_term_validation():
    with pytest.raises(InputError):
        LocalTerm(np.array([[0, 1], [0, 0]]), 1, 2)
    with pytest.raises(InputError):
        ProjectorTerm(2 * np.eye(2), 1, 2)
    with pytest.raises(InputError):
        LocalTerm(np.eye(3), 1, 2)


def test_mps_state_ghz_and_open():
    c = ghz_tensor()
    assert np.allclose(mps_state(c, 3), ket("000") + ket("111"))
    x = np.array([[0, 0], [1, 0]])  # |beta=1><alpha=0|
    v = mps_state(c, 3, boundary=x)
    # tr[A_i1 A_i2 A_i3 X] = <alpha=0| A... |beta=1>, zero for block-diagonal GHZ
    assert np.allclose(v, 0)
    x = np.array([[1, 0], [0, 0]])
    assert np.allclose(mps_state(c, 3, boundary=x), ket("000"))


def test_mps_state_doubled_zero():
    v = mps_state(zero_doubled_tensor(), 4)
    assert np.allclose(v, 2 * ket("0000"))


def test_mps_state_cap_and_boundary_errors():
    with pytest.raises(SizeCapError):
        mps_state(ghz_tensor(), 30)
    with pytest.raises(InputError):
        mps_state(ghz_tensor(), 3, boundary="open")


def test_ghz_state_annihilated_by_every_ising_term():
    c = as_tensor(ghz_tensor())
    term = projector_complement(block_sites(c, 2), site_dim=2)
    h = assemble(term, 6, "periodic")
    assert np.max(h.term_residuals(mps_state(c, 6))) < 1e-12


def test_contract_state_matches_trace_definition():
    rng = np.random.default_rng(2)
    t = random_tensor(2, 2, rng, canonical=False).mats
    v = contract_state([t] * 3)
    for idx in range(8):
        i1, i2, i3 = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        assert np.isclose(v[idx], np.trace(t[i1] @ t[i2] @ t[i3]))


def test_domain_wall_span_ghz():
    a, b = ghz_tensor().blocks
    rng = np.random.default_rng(0)
    r, l = rng.standard_normal((2, 1, 1)), rng.standard_normal((2, 1, 1))  # noqa: E741
    s = domain_wall_span(a, b, r, l, 3)
    assert s.dims == {"A": 1, "B": 1, "R": 1, "L": 1, "S": 4}


@pytest.mark.parametrize("dims", [(1, 1), (1, 2), (2, 2)])
def test_domain_wall_span_generic_dimension(dims):
    la, lm = dims
    d = 2 * (la + lm) ** 2
    c = random_block_mps(d, dims, seed=4)
    a, b = c.blocks
    rng = np.random.default_rng(4)
    r = rng.standard_normal((d, la, lm))
    l = rng.standard_normal((d, lm, la))  # noqa: E741
    s = domain_wall_span(a, b, r, l, 2)
    assert s.total.dim == la * la + lm * lm + 2 * la * lm
    s0 = domain_wall_span(a, b, 0 * r, 0 * l, 2)
    assert s0.total.dim == la * la + lm * lm


def test_domain_wall_span_needs_two_sites():
    a, b = ghz_tensor().blocks
    with pytest.raises(InputError):
        domain_wall_span(a, b, np.zeros((2, 1, 1)), np.zeros((2, 1, 1)), 1)


def test_rectangular_family_span():
    wall = np.random.default_rng(1).standard_normal((3, 1, 2))
    assert span_basis(wall).dim == 2
    assert span_basis(MpsTensor(np.eye(2)[None])).dim == 1
