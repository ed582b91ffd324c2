"""Spans of tensors, complement projectors and explicit MPS state vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InputError, SizeCapError
from .mps import RANK_TOL, BlockMps, MpsTensor, as_tensor, concatenate_sites

STATE_CAP = 2**22


@dataclass(frozen=True, eq=False)
class SpanBasis:
    """Orthonormal columns spanning a subspace of the physical space."""

    vectors: np.ndarray  # shape (dim, k)
    source_dims: tuple  # (d, n, D)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def space_dim(self) -> int:
        return self.vectors.shape[0]

    def projector(self) -> np.ndarray:
        return self.vectors @ self.vectors.conj().T


@dataclass(frozen=True, eq=False)
class LocalTerm:
    """Hermitian operator on ``support`` consecutive sites of local dimension ``local_dim``."""

    matrix: np.ndarray
    support: int
    local_dim: int

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.local_dim**self.support,) * 2:
            raise DimensionMismatchError(
                f"term of shape {m.shape} does not act on {self.support} sites of dim {self.local_dim}"
            )
        if np.max(np.abs(m - m.conj().T), initial=0.0) > 1e-12 * max(1.0, np.abs(m).max()):
            raise InputError("local term is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def scaled(self, factor: float) -> "LocalTerm":
        return LocalTerm(self.matrix * factor, self.support, self.local_dim)

    def __add__(self, other: "LocalTerm") -> "LocalTerm":
        if (self.support, self.local_dim) != (other.support, other.local_dim):
            raise DimensionMismatchError("terms act on different supports")
        return LocalTerm(self.matrix + other.matrix, self.support, self.local_dim)


class ProjectorTerm(LocalTerm):
    """Orthogonal projector local term."""

    def __post_init__(self) -> None:
        super().__post_init__()
        m = self.matrix
        if m.size and np.max(np.abs(m @ m - m)) > 1e-10:
            raise InputError("projector term is not idempotent")

    def distance(self, other: LocalTerm) -> float:
        return float(np.linalg.norm(self.matrix - other.matrix, 2))


def _family(t) -> np.ndarray:
    if isinstance(t, (MpsTensor, BlockMps)):
        return as_tensor(t).mats
    return np.asarray(t, dtype=complex)


def orthonormal_columns(mat: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the column space, rank cut at ``tol * sigma_max``."""
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    return u[:, s > tol * s[0]]


def span_basis(t, tol: float = RANK_TOL, site_dim: int | None = None) -> SpanBasis:
    """Orthonormal basis of ``{sum_i tr[T_i X] |i> : X}``.

    ``t`` is a (possibly rectangular) family of shape ``(d^n, D_l, D_r)``;
    ``site_dim`` recovers the number of sites for bookkeeping.
    """
    fam = _family(t)
    phys = fam.shape[0]
    coeff = fam.reshape(phys, -1)
    vecs = orthonormal_columns(coeff, tol)
    sd = site_dim or phys
    n = int(round(np.log(phys) / np.log(sd))) if sd > 1 else 1
    return SpanBasis(vecs, (sd, n, fam.shape[1]))


def join_spans(*spans: SpanBasis, tol: float = RANK_TOL) -> SpanBasis:
    """Orthonormalized sum of subspaces."""
    stacked = np.concatenate([s.vectors for s in spans], axis=1)
    return SpanBasis(orthonormal_columns(stacked, tol), spans[0].source_dims)


def projector_complement(t, tol: float = RANK_TOL, site_dim: int | None = None) -> ProjectorTerm:
    """``1 - P_span``, the projector onto the orthocomplement of the span."""
    basis = t if isinstance(t, SpanBasis) else span_basis(t, tol, site_dim)
    dim = basis.space_dim
    d, n, _ = basis.source_dims
    if d**n != dim:
        d, n = dim, 1
    m = np.eye(dim, dtype=complex) - basis.projector()
    m = 0.5 * (m + m.conj().T)
    return ProjectorTerm(m, n, d)


def contract_state(families, boundary: np.ndarray | None = None, cap: int = STATE_CAP) -> np.ndarray:
    """Amplitudes ``tr[F1_{i1} ... Fn_{in} X]`` with site 1 most significant.

    ``boundary=None`` means ``X = 1`` (periodic closure).
    """
    families = [np.asarray(f, dtype=complex) for f in families]
    total = int(np.prod([f.shape[0] for f in families]))
    if total > cap:
        raise SizeCapError(f"state dimension {total} exceeds cap {cap}")
    left = families[0].shape[1]
    right = families[-1].shape[2]
    if boundary is None:
        if left != right:
            raise DimensionMismatchError("periodic closure needs matching outer bonds")
        boundary = np.eye(left)
    boundary = np.asarray(boundary, dtype=complex)
    if boundary.shape != (right, left):
        raise DimensionMismatchError(f"boundary must be {right}x{left}, got {boundary.shape}")
    # fold the boundary into the last family first to keep the bond small
    last = np.einsum("iab,bc->iac", families[-1], boundary)
    psi = concatenate_sites(*families[:-1], last) if len(families) > 1 else last
    return np.einsum("iaa->i", psi)


def mps_state(c, n: int, boundary="periodic", cap: int = STATE_CAP) -> np.ndarray:
    """Unnormalized state of ``n`` sites built from a tensor or block MPS.

    ``boundary`` is ``"periodic"`` or a ``D x D`` matrix ``X`` giving
    amplitudes ``tr[A_{i1} ... A_{in} X]``.
    """
    t = as_tensor(c)
    if n < 1:
        raise InputError("n must be >= 1")
    if t.d**n > cap:
        raise SizeCapError(f"d^n = {t.d**n} exceeds cap {cap}")
    if isinstance(boundary, str):
        if boundary == "periodic":
            x = None
        elif boundary == "open":
            raise InputError("open boundary needs an explicit boundary matrix")
        else:
            raise InputError(f"unknown boundary {boundary!r}")
    else:
        x = np.asarray(boundary)
    return contract_state([t.mats] * n, x, cap)


def wall_sum(left, wall, right, n: int) -> np.ndarray:
    """``sum_pos left..left wall right..right`` as a family on ``n`` sites."""
    left, wall, right = (np.asarray(x, dtype=complex) for x in (left, wall, right))
    terms = []
    for pos in range(n):
        terms.append(concatenate_sites(*([left] * pos), wall, *([right] * (n - pos - 1))))
    return np.sum(terms, axis=0)


@dataclass(frozen=True, eq=False)
class DomainWallSpans:
    a: SpanBasis
    b: SpanBasis
    r: SpanBasis
    l: SpanBasis  # noqa: E741
    total: SpanBasis

    @property
    def dims(self) -> dict:
        return {"A": self.a.dim, "B": self.b.dim, "R": self.r.dim, "L": self.l.dim, "S": self.total.dim}


def domain_wall_span(a, b, r, l, n: int, cap: int = STATE_CAP, tol: float = RANK_TOL) -> DomainWallSpans:  # noqa: E741
    """Bases of the pure-block and zero-momentum wall families on ``n`` sites."""
    if n < 2:
        raise InputError("n must be >= 2")
    am, bm = as_tensor(a).mats, as_tensor(b).mats
    d = am.shape[0]
    if d**n > cap:
        raise SizeCapError(f"d^n = {d**n} exceeds cap {cap}")
    sa = span_basis(concatenate_sites(*([am] * n)), tol, d)
    sb = span_basis(concatenate_sites(*([bm] * n)), tol, d)
    sr = span_basis(wall_sum(am, r, bm, n), tol, d)
    sl = span_basis(wall_sum(bm, l, am, n), tol, d)
    return DomainWallSpans(sa, sb, sr, sl, join_spans(sa, sb, sr, sl, tol=tol))
