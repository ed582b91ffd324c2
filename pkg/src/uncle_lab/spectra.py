"""Kernels, low-lying spectra, trial states and subspace-intersection checks."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from .chain import (
    DENSE_CAP,
    SPARSE_CAP,
    ChainOperator,
    SparseVector,
    assemble,
    basis_index,
    cyclic_shift,
    residual,
)
from .errors import ConvergenceError, GeometryError, InputError, SizeCapError
from .mps import BlockMps, as_tensor
from .span import STATE_CAP, LocalTerm, contract_state, domain_wall_span, orthonormal_columns
from .uncle import Perturbation, uncle_local_term

KERNEL_TOL = 1e-8
ANGLE_TOL = 1e-9
SHIFT = -0.1


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    n: int
    eigenvalues: np.ndarray
    kernel_dim: int
    method: str
    tol: float = KERNEL_TOL
    residuals: np.ndarray | None = None

    def lowest_nonzero(self) -> float | None:
        pos = self.eigenvalues[self.eigenvalues >= self.tol]
        return float(pos[0]) if pos.size else None

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "kernel_dim": self.kernel_dim,
            "method": self.method,
            "tol": self.tol,
        }
        if self.residuals is not None:
            out["residuals"] = [float(x) for x in self.residuals]
        return out


REAL_TOL = 1e-13
SIGMA_NUDGE = 1e-7


def _is_real(values: np.ndarray) -> bool:
    # round-off imaginary parts from SVD-built projectors
    return values.size == 0 or np.abs(values.imag).max() <= REAL_TOL * max(1.0, np.abs(values).max())


def _dense_matrix(h: ChainOperator) -> np.ndarray:
    m = h.to_dense()
    return m.real if _is_real(m) else m


def _sparse_matrix(h: ChainOperator):
    m = h.to_sparse()
    if _is_real(m.data):
        m = m.real
    return m.tocsc()


def _start_vector(dim: int, dtype) -> np.ndarray:
    # fixed start so iterative spectra are bitwise reproducible
    return np.random.default_rng(0).standard_normal(dim).astype(dtype)


def _shift_invert(h: ChainOperator, k: int, sigma: float = SHIFT):
    m = _sparse_matrix(h)
    k = min(k, h.dim - 2)
    v0 = _start_vector(h.dim, m.dtype)
    try:
        try:
            w, v = eigsh(m, k=k, sigma=sigma, which="LM", v0=v0)
        except RuntimeError:
            # sigma sits exactly on an eigenvalue and the factorization is singular
            w, v = eigsh(m, k=k, sigma=sigma + SIGMA_NUDGE * (1 + abs(sigma)), which="LM", v0=v0)
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"shift-invert Lanczos did not converge: {exc}") from exc
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    res = np.linalg.norm(m @ v - v * w, axis=0)
    return w, v, res


def _matvec_lowest(h: ChainOperator, k: int):
    op = h.as_linear_operator()
    try:
        w, v = eigsh(op, k=k, which="SA", tol=1e-12, v0=_start_vector(h.dim, op.dtype))
    except ArpackNoConvergence as exc:
        raise ConvergenceError(f"Lanczos did not converge: {exc}") from exc
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    res = np.array([np.linalg.norm(h.apply(v[:, i]) - w[i] * v[:, i]) for i in range(k)])
    return w, v, res


def kernel_basis(h: ChainOperator, tol: float = KERNEL_TOL):
    """Orthonormal basis (columns) of the zero-energy space and its dimension."""
    if h.dim <= DENSE_CAP:
        w, v = np.linalg.eigh(_dense_matrix(h))
        basis = v[:, w < tol]
        return basis.astype(complex), basis.shape[1]
    if h.dim > SPARSE_CAP:
        raise SizeCapError(f"kernel of d^n = {h.dim} states exceeds the sparse cap")
    k = 6
    while True:
        w, v, _ = _shift_invert(h, k)
        if w[-1] >= tol or k >= h.dim - 2:
            basis = v[:, w < tol]
            return basis.astype(complex), basis.shape[1]
        k *= 2


def low_spectrum(h: ChainOperator, count: int, tol: float = KERNEL_TOL) -> SpectrumReport:
    """The ``count`` smallest eigenvalues, dense below the dense cap."""
    if count < 1:
        raise InputError("count must be >= 1")
    if h.dim <= DENSE_CAP:
        if count > h.dim:
            warnings.warn(f"count {count} clamped to the dimension {h.dim}", stacklevel=2)
            count = h.dim
        w = np.linalg.eigvalsh(_dense_matrix(h))[:count]
        return SpectrumReport(h.sites, w, int(np.sum(w < tol)), "dense", tol)
    if count > h.dim - 2:
        warnings.warn(f"count {count} clamped to {h.dim - 2}", stacklevel=2)
        count = h.dim - 2
    if h.dim <= SPARSE_CAP:
        w, _, res = _shift_invert(h, count)
    else:
        w, _, res = _matvec_lowest(h, count)
    if np.any(res > 1e-6):
        raise ConvergenceError(f"eigenpair residuals too large: max {res.max():.3g}")
    return SpectrumReport(h.sites, w, int(np.sum(w < tol)), "iterative", tol, res)


def nearest_eigenvalue(h: ChainOperator, sigma: float) -> float:
    """Eigenvalue closest to ``sigma``."""
    if h.dim <= DENSE_CAP:
        w = np.linalg.eigvalsh(_dense_matrix(h))
        return float(w[np.argmin(np.abs(w - sigma))])
    w, _, _ = _shift_invert(h, 1, sigma)
    return float(w[0])


def spectral_gap(h: ChainOperator, count: int = 8, tol: float = KERNEL_TOL) -> float:
    """Lowest eigenvalue above the kernel threshold."""
    rep = low_spectrum(h, count, tol)
    gap = rep.lowest_nonzero()
    while gap is None and count < h.dim:
        count *= 2
        rep = low_spectrum(h, min(count, h.dim), tol)
        gap = rep.lowest_nonzero()
    if gap is None:
        raise ConvergenceError("no nonzero eigenvalue found")
    return gap


# subspace geometry


def subspace_intersection(q1: np.ndarray, q2: np.ndarray, tol: float = ANGLE_TOL):
    """Intersection of two subspaces given by orthonormal columns.

    Principal directions with cosine above ``1 - tol`` count as shared.
    Returns the basis (columns) and the cosines.
    """
    if q1.shape[1] == 0 or q2.shape[1] == 0:
        return np.zeros((q1.shape[0], 0), dtype=complex), np.zeros(0)
    u, s, _ = np.linalg.svd(q1.conj().T @ q2, full_matrices=False)
    keep = s > 1 - tol
    return q1 @ u[:, keep], s


def same_subspace(q1: np.ndarray, q2: np.ndarray, tol: float = ANGLE_TOL) -> bool:
    if q1.shape[1] != q2.shape[1]:
        return False
    if q1.shape[1] == 0:
        return True
    s = np.linalg.svd(q1.conj().T @ q2, compute_uv=False)
    return bool(np.all(s > 1 - tol))


def _walls(c: BlockMps, p: Perturbation | None):
    a, b = c.blocks
    if p is None:
        Da, Db = c.dims
        return a, b, np.zeros((c.d, Da, Db)), np.zeros((c.d, Db, Da))
    return a, b, p.r, p.l


def open_ground_space(c: BlockMps, p: Perturbation | None, n: int):
    """Orthonormal basis of ``S_n``, the predicted open-chain uncle kernel."""
    a, b, r, l = _walls(c, p)  # noqa: E741
    return domain_wall_span(a, b, r, l, n).total.vectors


def predicted_dim(c: BlockMps, p: Perturbation | None, n: int) -> int:
    la, lb = c.dims
    walls = p is not None and (np.any(p.r) or np.any(p.l))
    dim = la * la + lb * lb + (2 * la * lb if walls else 0)
    return min(dim, c.d**n)


@dataclass(frozen=True)
class IntersectionRow:
    n: int
    dim_s: int
    predicted: int
    dim_intersection: int
    dim_next: int
    mismatch: int


def intersection_scan(c: BlockMps, p: Perturbation | None, n_max: int, n_min: int = 2,
                      tol: float = ANGLE_TOL) -> list[IntersectionRow]:
    """Check ``(S_n (x) C^d) cap (C^d (x) S_n) = S_{n+1}`` for ``n_min <= n <= n_max``.

    ``mismatch`` is zero exactly when both sides have the same dimension and
    span the same subspace.
    """
    d = c.d
    if d ** (n_max + 1) > STATE_CAP:
        raise SizeCapError(f"d^(n_max+1) = {d ** (n_max + 1)} exceeds cap {STATE_CAP}")
    rows = []
    s_n = open_ground_space(c, p, n_min)
    eye = np.eye(d)
    for n in range(n_min, n_max + 1):
        s_next = open_ground_space(c, p, n + 1)
        left = np.kron(s_n, eye)
        right = np.kron(eye, s_n)
        inter, _ = subspace_intersection(left, right, tol)
        mismatch = abs(inter.shape[1] - s_next.shape[1])
        if mismatch == 0 and not same_subspace(orthonormal_columns(inter), s_next, tol):
            mismatch = s_next.shape[1]
        rows.append(IntersectionRow(n, s_n.shape[1], predicted_dim(c, p, n), inter.shape[1],
                                    s_next.shape[1], mismatch))
        s_n = s_next
    return rows


@dataclass(frozen=True, eq=False)
class ClosureReport:
    n: int
    dim: int
    overlaps: tuple  # norm of the projection of each expected state
    basis: np.ndarray = field(repr=False)

    @property
    def contained(self) -> float:
        return min(self.overlaps) if self.overlaps else 1.0


def closure_check(c: BlockMps, p: Perturbation | None, n: int, expected=None,
                  tol: float = ANGLE_TOL) -> ClosureReport:
    """Intersection of ``S_n`` with its cyclic translate by one site.

    ``expected`` defaults to the two block states ``|M(A)>`` and ``|M(B)>``;
    the overlaps report how much of each lies in the intersection.
    """
    s = open_ground_space(c, p, n)
    shifted = np.stack([cyclic_shift(s[:, i], c.d, n) for i in range(s.shape[1])], axis=1)
    inter, _ = subspace_intersection(s, shifted, tol)
    inter = orthonormal_columns(inter)
    if expected is None:
        expected = [contract_state([blk.mats] * n) for blk in c.blocks]
    overlaps = []
    for v in expected:
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        overlaps.append(float(np.linalg.norm(inter.conj().T @ v)))
    return ClosureReport(n, inter.shape[1], tuple(overlaps), inter)


def kernel_overlap(basis: np.ndarray, states) -> float:
    """Smallest squared projection of a normalized expected state onto ``basis``."""
    worst = 1.0
    for v in states:
        v = np.asarray(v, dtype=complex)
        v = v / np.linalg.norm(v)
        worst = min(worst, float(np.linalg.norm(basis.conj().T @ v) ** 2))
    return worst


def frustration_residuals(h: ChainOperator, basis: np.ndarray) -> float:
    """Largest ``||h_i v||`` over kernel vectors and individual terms."""
    worst = 0.0
    for i in range(basis.shape[1]):
        worst = max(worst, float(h.term_residuals(basis[:, i]).max()))
    return worst


# trial states


@dataclass(frozen=True, eq=False)
class TrialFamily:
    kind: str
    params: dict
    vector: object  # ndarray or SparseVector
    chain_length: int
    norm2: float
    energy: float | None = None
    residual: float | None = None
    overlaps: tuple = ()

    @property
    def normalized_energy(self) -> float | None:
        return self.energy


def _diagnose(v, h: ChainOperator | None):
    if isinstance(v, SparseVector):
        norm2 = v.norm2()
    else:
        norm2 = float(np.vdot(v, v).real)
    if norm2 == 0:
        raise InputError("trial vector vanishes")
    if h is None:
        return norm2, None, None
    energy = h.expectation(v)
    return norm2, energy, residual(h, v, energy)


def ghz_wall_configs(N: int, k: int | None = None):
    """Configurations and phases of the GHZ wall states on ``2N + 3`` sites.

    Sites are labelled ``-N-1 .. N+1``.  A term with walls at ``i < 0 < j``
    carries ones on ``i+1 .. j-1``.  Without momentum, ``-N <= i <= -1`` and
    ``1 <= j <= N``; with momentum ``k`` the ranges shrink to
    ``-N < i < -1``, ``1 < j < N`` and the phase is ``exp(2 pi i k i / N)``.
    """
    n = 2 * N + 3
    off = N + 1
    if k is None:
        irange, jrange = range(-N, 0), range(1, N + 1)
    else:
        irange, jrange = range(-N + 1, -1), range(2, N)
    configs, phases = [], []
    for i in irange:
        for j in jrange:
            bits = [0] * n
            for x in range(i + 1, j):
                bits[x + off] = 1
            configs.append(basis_index(bits, 2))
            phases.append(1.0 if k is None else np.exp(2j * np.pi * i * k / N))
    return np.array(configs, dtype=np.int64), np.array(phases, dtype=complex), n


def ghz_domain_wall_state(N: int, term: LocalTerm | None = None) -> TrialFamily:
    """GHZ wall state on ``2N + 3`` sites; its squared norm is ``N**2``."""
    if N < 1:
        raise InputError("N must be >= 1")
    cfg, ph, n = ghz_wall_configs(N)
    v = SparseVector.build(cfg, ph, 2, n)
    h = assemble(term, n, "periodic") if term is not None else None
    norm2, energy, res = _diagnose(v, h)
    return TrialFamily("ghz-wall", {"N": N}, v, n, norm2, energy, res)


def _uncle_chain(c, p, n, sites):
    return assemble(uncle_local_term(c, p, sites), n, "periodic")


def domain_wall_state(c: BlockMps, p: Perturbation, N: int, sites: int = 3,
                      with_energy: bool = True) -> TrialFamily:
    """Two-wall trial state on ``6N + 1`` sites.

    Sites are labelled ``-3N .. 3N``; the ``R`` wall sits at
    ``-2N <= i <= -N`` and the ``L`` wall at ``N <= j <= 2N`` with ``B``
    between them and ``A`` elsewhere, closed periodically.
    """
    if N < 1:
        raise InputError("N must be >= 1")
    n = 6 * N + 1
    if c.d**n > STATE_CAP:
        raise SizeCapError(f"chain of {n} sites exceeds the state cap")
    a, b = c.blocks
    v = np.zeros(c.d**n, dtype=complex)
    for i in range(-2 * N, -N + 1):
        for j in range(N, 2 * N + 1):
            fams = []
            for x in range(-3 * N, 3 * N + 1):
                if x == i:
                    fams.append(p.r)
                elif x == j:
                    fams.append(p.l)
                elif i < x < j:
                    fams.append(b.mats)
                else:
                    fams.append(a.mats)
            v += contract_state(fams)
    h = _uncle_chain(c, p, n, sites) if with_energy else None
    norm2, energy, res = _diagnose(v, h)
    overlaps = []
    for blk in c.blocks:
        m = contract_state([blk.mats] * n)
        overlaps.append(abs(np.vdot(m, v)) / np.sqrt(norm2 * np.vdot(m, m).real))
    return TrialFamily("domain-wall", {"N": N, "sites": sites}, v, n, norm2, energy, res, tuple(overlaps))


def injective_defect_state(a, r, N: int, k: int) -> np.ndarray:
    """``sum_j exp(2 pi i j k / N) tr[A..A R_j A..A]`` on a periodic ``N``-site chain."""
    am = as_tensor(a).mats
    r = np.asarray(r, dtype=complex)
    v = np.zeros(am.shape[0] ** N, dtype=complex)
    for j in range(N):
        fams = [am] * N
        fams[j] = r
        v += np.exp(2j * np.pi * j * k / N) * contract_state(fams)
    return v


def momentum_state(kind: str, N: int, k: int, term: LocalTerm | None = None,
                   a=None, r=None) -> TrialFamily:
    """Momentum-``k`` trial state.

    ``kind="ghz"`` gives phase-weighted GHZ wall states on ``2N + 3`` sites;
    ``kind="injective"`` gives single-defect states ``sum_j e^{2 pi i jk/N} zeta_j``
    on ``N`` sites built from an injective tensor ``a`` and defect ``r``.
    """
    if kind == "ghz":
        cfg, ph, n = ghz_wall_configs(N, k)
        if cfg.size == 0:
            raise GeometryError(f"N={N} leaves no room for momentum states")
        v = SparseVector.build(cfg, ph, 2, n)
    elif kind == "injective":
        if a is None or r is None:
            raise InputError("injective momentum states need a tensor and a defect")
        if not 0 < abs(k) < N:
            raise InputError("need 0 < |k| < N")
        n = N
        v = injective_defect_state(a, r, N, k)
    else:
        raise InputError(f"unknown momentum kind {kind!r}")
    h = assemble(term, n, "periodic") if term is not None else None
    norm2, energy, res = _diagnose(v, h)
    return TrialFamily(f"{kind}-momentum", {"N": N, "k": k}, v, n, norm2, energy, res)


@dataclass(frozen=True, eq=False)
class ConcatResult:
    vector: object
    energy_target: float
    residual: float
    bound: float


def concat_approx_eigenvector(base: TrialFamily, j: int, r: int, n: int, term: LocalTerm,
                              background: int = 0, margin: int = 0) -> ConcatResult:
    """Place ``j`` copies of the base window on an ``n``-site periodic chain.

    Copies are separated by ``r`` background sites; the background is the
    product basis state ``|background>`` (a bond-dimension-one block).  The
    returned residual is ``||(H - j lam) v|| / ||v||`` and the bound is
    ``j * delta'`` with ``delta'`` the base residual.
    """
    if j < 1 or r < 0 or margin < 0:
        raise GeometryError("need j >= 1, r >= 0, margin >= 0")
    w = base.chain_length
    if margin + j * w + (j - 1) * r > n:
        raise GeometryError(f"{j} windows of {w} sites with gap {r} do not fit on {n} sites")
    if base.energy is None or base.residual is None:
        raise InputError("base family needs energy and residual diagnostics")
    v = base.vector if isinstance(base.vector, SparseVector) else SparseVector.from_dense(base.vector, term.local_dim, w)
    d = term.local_dim
    bg = sum(background * d**q for q in range(n))
    configs = np.array([bg], dtype=np.int64)
    amps = np.array([1.0 + 0j])
    for t in range(j):
        start = margin + t * (w + r)
        shift = d ** (n - start - w)
        # replace the background digits of the window by the base configuration
        window_bg = sum(background * d**q for q in range(w)) * shift
        configs = (configs[:, None] - window_bg + v.configs[None, :] * shift).ravel()
        amps = (amps[:, None] * v.amps[None, :]).ravel()
    vec = SparseVector.build(configs, amps, d, n)
    h = assemble(term, n, "periodic")
    lam = j * base.energy
    return ConcatResult(vec, lam, residual(h, vec, lam), j * base.residual)


@dataclass(frozen=True)
class WindowScan:
    windows: tuple
    hits: dict  # n -> tuple of booleans
    n0: int | None


def window_hits(eigenvalues, windows) -> tuple:
    w = np.asarray(eigenvalues)
    return tuple(bool(np.any(np.abs(w - c) < hw)) for c, hw in windows)


def dense_window_scan(family, ns, windows, positive_only: bool = True,
                      tol: float = KERNEL_TOL) -> WindowScan:
    """Which windows ``(center, halfwidth)`` the spectrum meets, per chain length.

    ``family`` maps ``n`` to a ChainOperator.  Dense spectra are used below
    the dense cap; above it the eigenvalue nearest each window centre is
    found by shift-invert Lanczos.  With ``positive_only`` kernel
    eigenvalues do not count as hits.  ``n0`` is the smallest scanned
    length from which on every window is hit.
    """
    windows = tuple((float(c), float(hw)) for c, hw in windows)
    hits = {}
    for n in ns:
        h = family(n)
        if h.dim <= DENSE_CAP:
            w = np.linalg.eigvalsh(_dense_matrix(h))
            if positive_only:
                w = w[w >= tol]
            hits[n] = window_hits(w, windows)
        else:
            row = []
            for c, hw in windows:
                lam = nearest_eigenvalue(h, c)
                ok = abs(lam - c) < hw and (lam >= tol or not positive_only)
                if not ok and positive_only and lam < tol:
                    # the kernel was nearest: look just above the threshold
                    lam = nearest_eigenvalue(h, max(c, tol) + hw / 2)
                    ok = abs(lam - c) < hw and lam >= tol
                row.append(ok)
            hits[n] = tuple(row)
    n0 = None
    for n in sorted(hits, reverse=True):
        if all(hits[n]):
            n0 = n
        else:
            break
    return WindowScan(windows, hits, n0)


# fits


def fit_power(x, y) -> tuple[float, float]:
    """``y ~ c * x**slope``; returns ``(slope, c)``."""
    slope, icpt = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope), float(np.exp(icpt))


def fit_quadratic(x, y) -> tuple[float, float]:
    """``y ~ a x^2 + b``; returns ``(a, b)``."""
    x = np.asarray(x, float)
    a, b = np.linalg.lstsq(np.stack([x**2, np.ones_like(x)], axis=1), np.asarray(y, float), rcond=None)[0]
    return float(a), float(b)


def fit_exponential(x, y) -> tuple[float, float]:
    """``y ~ c * exp(rate x)``; returns ``(rate, c)``."""
    rate, icpt = np.polyfit(np.asarray(x, float), np.log(np.asarray(y, float)), 1)
    return float(rate), float(np.exp(icpt))


def gap_series(term: LocalTerm, ns, boundary: str = "periodic", count: int = 8) -> dict:
    """Lowest nonzero eigenvalue for each chain length."""
    return {n: spectral_gap(assemble(term, n, boundary), count) for n in ns}


def block_states(c: BlockMps, n: int) -> list:
    return [contract_state([blk.mats] * n) for blk in c.blocks]
