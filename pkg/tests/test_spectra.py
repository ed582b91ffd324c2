import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uncle_lab.chain import SparseVector, assemble, basis_index
from uncle_lab.errors import GeometryError, InputError
from uncle_lab.experiments import random_two_block
from uncle_lab.models import (
    ghz_tensor,
    ghz_uncle_term,
    ising_parent_term,
    w_state,
    zero_doubled_tensor,
    zero_state,
    zero_uncle_term,
)
from uncle_lab.mps import random_block_mps
from uncle_lab.span import mps_state
from uncle_lab.spectra import (
    closure_check,
    concat_approx_eigenvector,
    dense_window_scan,
    domain_wall_state,
    fit_exponential,
    fit_power,
    fit_quadratic,
    frustration_residuals,
    ghz_domain_wall_state,
    ghz_wall_configs,
    intersection_scan,
    kernel_basis,
    kernel_overlap,
    low_spectrum,
    momentum_state,
    nearest_eigenvalue,
    same_subspace,
    spectral_gap,
    subspace_intersection,
    window_hits,
)
from uncle_lab.uncle import Perturbation, parent_local_term, random_injective_perturbation, uncle_local_term


def ones_state(n):
    v = np.zeros(2**n)
    v[-1] = 1
    return v


@pytest.mark.parametrize("n", [4, 7, 10])
def test_ghz_uncle_kernel(n):
    h = assemble(ghz_uncle_term(), n, "periodic")
    basis, dim = kernel_basis(h)
    assert dim == 2
    assert kernel_overlap(basis, [zero_state(n), ones_state(n)]) > 1 - 1e-10
    assert frustration_residuals(h, basis) < 1e-9


def test_kernel_basis_iterative_branch():
    h = assemble(ghz_uncle_term(), 13, "periodic")
    basis, dim = kernel_basis(h)
    assert dim == 2
    assert kernel_overlap(basis, [zero_state(13), ones_state(13)]) > 1 - 1e-8
    assert frustration_residuals(h, basis) < 1e-9


@pytest.mark.parametrize("n", [5, 8])
def test_zero_uncle_kernel(n):
    h = assemble(zero_uncle_term(), n, "periodic")
    basis, dim = kernel_basis(h)
    assert dim == 2
    assert kernel_overlap(basis, [zero_state(n), w_state(n)]) >= 1 - 1e-8


def test_low_spectrum_dense_report():
    h = assemble(ising_parent_term(), 6)
    rep = low_spectrum(h, 5)
    assert rep.method == "dense" and rep.kernel_dim == 2
    assert list(rep.eigenvalues) == sorted(rep.eigenvalues)
    assert np.isclose(rep.lowest_nonzero(), 2)
    d = rep.to_dict()
    assert d["n"] == 6 and len(d["eigenvalues"]) == 5


def test_low_spectrum_clamps_count():
    h = assemble(ising_parent_term(), 3)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = low_spectrum(h, 100)
    assert len(rep.eigenvalues) == 8
    assert any("clamped" in str(w.message) for w in caught)
    with pytest.raises(InputError):
        low_spectrum(h, 0)


def test_low_spectrum_iterative_matches_dense_values():
    h = assemble(ghz_uncle_term(), 13, "periodic")
    rep = low_spectrum(h, 6)
    assert rep.method == "iterative"
    assert rep.kernel_dim == 2
    assert np.all(rep.residuals < 1e-8)
    assert np.all(rep.eigenvalues >= -1e-9)


def test_parent_gap_constant_and_uncle_gap_shrinks():
    parent = [spectral_gap(assemble(ising_parent_term(), n)) for n in (6, 8, 10, 12)]
    assert max(parent) - min(parent) < 0.05 * np.mean(parent)
    uncle = [spectral_gap(assemble(ghz_uncle_term(), n)) for n in (6, 8, 10, 12)]
    assert all(x > y for x, y in zip(uncle, uncle[1:]))


def test_nearest_eigenvalue():
    h = assemble(ising_parent_term(), 4)
    assert np.isclose(nearest_eigenvalue(h, 1.9), 2)


def test_subspace_intersection_basic():
    e = np.eye(4)
    inter, cosines = subspace_intersection(e[:, :2], e[:, 1:3])
    assert inter.shape[1] == 1 and np.isclose(abs(inter[1, 0]), 1)
    assert np.allclose(sorted(cosines), [0, 1])
    assert same_subspace(e[:, :2], e[:, [1, 0]])
    assert not same_subspace(e[:, :2], e[:, 1:3])


def test_ghz_intersection_scan():
    c = ghz_tensor()
    p = random_injective_perturbation(c, 0, sites=3)
    rows = intersection_scan(c, p, 6, n_min=3)
    for row in rows:
        assert row.dim_s == 4 == row.predicted
        assert row.mismatch == 0


def test_generic_two_by_two_blocks_intersection():
    c = random_block_mps(16, (2, 2), seed=0)
    rng = np.random.default_rng(0)
    g = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)  # noqa: E731
    p = Perturbation(g(16, 2, 2), g(16, 2, 2), g(16, 2, 2), g(16, 2, 2))
    (row,) = intersection_scan(c, p, 2)
    assert row.dim_s == 16 == row.predicted and row.mismatch == 0


def test_parent_case_intersection():
    c = random_block_mps(4, (1, 1), seed=2)
    for row in intersection_scan(c, None, 5):
        assert row.dim_s == 2 == row.predicted and row.mismatch == 0


def test_closure_ghz_and_parent():
    c = ghz_tensor()
    p = random_injective_perturbation(c, 0, sites=3)
    for n in (4, 6):
        rep = closure_check(c, p, n)
        assert rep.dim == 2 and rep.contained > 1 - 1e-9
        assert closure_check(c, None, n).dim == 2


def test_closure_zero_doubled_keeps_w():
    c = zero_doubled_tensor()
    r = np.array([[[0.0]], [[1.0]]])
    p = Perturbation.symmetric(np.zeros((2, 1, 1)), r)
    rep = closure_check(c, p, 6, expected=[zero_state(6), w_state(6)])
    assert rep.dim == 2 and rep.contained > 1 - 1e-9


def test_uncle_and_parent_kernels_match_for_distinct_blocks():
    c, p = random_two_block(seed=1)
    uncle = uncle_local_term(c, p, 2)
    parent = parent_local_term(c, 2)
    for n in (3, 4, 5):
        assert kernel_basis(assemble(uncle, n))[1] == kernel_basis(assemble(parent, n))[1] == 2


@pytest.mark.parametrize("N", [1, 2, 5, 9])
def test_ghz_wall_state_norm(N):
    f = ghz_domain_wall_state(N, ghz_uncle_term())
    assert f.chain_length == 2 * N + 3
    assert f.norm2 == N * N
    assert f.energy > 0


def test_ghz_wall_energy_decreases():
    energies = [ghz_domain_wall_state(N, ghz_uncle_term()).energy for N in (2, 4, 8, 16)]
    assert all(x > y for x, y in zip(energies, energies[1:]))
    assert max(e * N for e, N in zip(energies, (2, 4, 8, 16))) < 3


def test_ghz_momentum_zero_is_plain_sum():
    cfg, ph, n = ghz_wall_configs(6, 0)
    f = momentum_state("ghz", 6, 0)
    assert np.allclose(ph, 1)
    plain = SparseVector.build(cfg, np.ones(len(cfg)), 2, n)
    assert np.isclose(f.vector.vdot(plain), plain.norm2()) and np.isclose(f.norm2, plain.norm2())


def test_ghz_wall_config_contents():
    cfg, _, n = ghz_wall_configs(1)
    assert n == 5 and list(cfg) == [basis_index([0, 0, 1, 0, 0])]


def test_momentum_state_errors():
    with pytest.raises(GeometryError):
        momentum_state("ghz", 2, 1)
    with pytest.raises(InputError):
        momentum_state("bogus", 4, 1)
    with pytest.raises(InputError):
        momentum_state("injective", 4, 0, a=np.ones((2, 1, 1)), r=np.ones((2, 1, 1)))


def test_random_domain_wall_small():
    c = random_block_mps(2, (1, 1), 3)
    p = random_injective_perturbation(c, 3, sites=3)
    rows = [domain_wall_state(c, p, N) for N in (1, 2)]
    assert all(r.chain_length == 6 * r.params["N"] + 1 for r in rows)
    assert rows[1].norm2 > rows[0].norm2
    assert all(0 <= o <= 1 for r in rows for o in r.overlaps)


def test_concat_single_copy_reproduces_base():
    t = ghz_uncle_term()
    base = momentum_state("ghz", 4, 1, t)
    res = concat_approx_eigenvector(base, 1, 0, base.chain_length + 2, t, margin=1)
    assert abs(res.residual - base.residual) < 1e-12
    assert np.isclose(res.energy_target, base.energy)


@pytest.mark.parametrize("j", [2, 3])
def test_concat_residual_within_linear_bound(j):
    t = ghz_uncle_term()
    base = momentum_state("ghz", 4, 1, t)
    n = j * base.chain_length + (j - 1) * 6 + 2
    res = concat_approx_eigenvector(base, j, 6, n, t, margin=1)
    assert res.residual <= j * base.residual + 1e-12
    assert np.isclose(res.bound, j * base.residual)


def test_concat_geometry_error():
    t = ghz_uncle_term()
    base = momentum_state("ghz", 4, 1, t)
    with pytest.raises(GeometryError):
        concat_approx_eigenvector(base, 3, 6, 20, t)


def test_window_scan_kernel_and_parent():
    fam = lambda n: assemble(ghz_uncle_term(), n)  # noqa: E731
    scan = dense_window_scan(fam, [6, 7, 8], [(0.0, 1e-8)], positive_only=False)
    assert all(scan.hits[n] == (True,) for n in (6, 7, 8)) and scan.n0 == 6
    pfam = lambda n: assemble(ising_parent_term(), n)  # noqa: E731
    gamma = spectral_gap(pfam(6))
    pscan = dense_window_scan(pfam, [6, 8, 10], [(gamma / 2, gamma / 4)])
    assert not any(h[0] for h in pscan.hits.values()) and pscan.n0 is None


def test_window_scan_iterative_branch_agrees_with_dense():
    fam = lambda n: assemble(ghz_uncle_term(), n)  # noqa: E731
    w = np.linalg.eigvalsh(fam(10).to_dense())
    target = w[w > 1e-8][3]
    windows = [(target, 1e-6), (target + 0.0123, 1e-6)]
    dense = dense_window_scan(fam, [10], windows)
    assert dense.hits[10] == (True, bool(np.any(np.abs(w - target - 0.0123) < 1e-6)))
    it = dense_window_scan(fam, [13], [(0.0, 0.5)])
    assert it.hits[13] == (True,)


def test_window_hits():
    assert window_hits([0.0, 1.0, 2.5], [(1.1, 0.2), (2.0, 0.1)]) == (True, False)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(-3, 3))
def test_fits_recover_parameters(c, slope):
    x = np.array([2.0, 3.0, 5.0, 8.0])
    s, cc = fit_power(x, c * x**slope)
    assert np.isclose(s, slope) and np.isclose(cc, c)
    rate, c2 = fit_exponential(x, c * np.exp(slope * x))
    assert np.isclose(rate, slope) and np.isclose(c2, c)
    a, b = fit_quadratic(x, c * x**2 + slope)
    assert np.isclose(a, c) and np.isclose(b, slope, atol=1e-9)


def test_ghz_state_in_kernel_of_uncle_chain():
    h = assemble(ghz_uncle_term(), 9)
    assert np.allclose(h.apply(mps_state(ghz_tensor(), 9)), 0, atol=1e-12)
