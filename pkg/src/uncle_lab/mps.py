"""MPS tensors, blocking, transfer operators and the injectivity toolkit.

Conventions
-----------
A tensor is stored as an array ``mats`` of shape ``(d, D, D)`` with
``mats[i]`` the bond matrix ``A_i``.  Matrices are vectorized row-major, so
``vec(X)[a * D + b] == X[a, b]`` and the transfer map
``X -> sum_i A_i X B_i^dagger`` has matrix ``sum_i kron(A_i, conj(B_i))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    InjectivityError,
    InputError,
    SizeCapError,
    StandardFormError,
)

RANK_TOL = 1e-10
BLOCK_CAP = 2**16


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def numerical_rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True, eq=False)
class MpsTensor:
    """Family of ``d`` complex ``D x D`` bond matrices."""

    mats: np.ndarray

    def __post_init__(self) -> None:
        mats = np.asarray(self.mats, dtype=complex)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise InputError(f"expected shape (d, D, D), got {mats.shape}")
        if mats.shape[0] < 1 or mats.shape[1] < 1:
            raise InputError("physical and bond dimension must be >= 1")
        if not np.all(np.isfinite(mats)):
            raise InputError("tensor entries must be finite")
        object.__setattr__(self, "mats", _frozen(mats))

    @property
    def d(self) -> int:
        return self.mats.shape[0]

    @property
    def D(self) -> int:  # noqa: N802
        return self.mats.shape[1]

    @classmethod
    def from_matrices(cls, matrices) -> "MpsTensor":
        return cls(np.stack([np.asarray(m, dtype=complex) for m in matrices]))

    def scaled(self, factor: complex) -> "MpsTensor":
        return MpsTensor(self.mats * factor)

    def gauge(self, g: np.ndarray) -> "MpsTensor":
        """Return ``G^-1 A_i G``."""
        ginv = np.linalg.inv(g)
        return MpsTensor(np.einsum("ab,ibc,cd->iad", ginv, self.mats, g))

    def allclose(self, other: "MpsTensor", atol: float = 1e-12) -> bool:
        return self.mats.shape == other.mats.shape and np.allclose(
            self.mats, other.mats, atol=atol, rtol=0.0
        )


def direct_sum(mats_list) -> np.ndarray:
    """Block-diagonal stacking of tensors sharing the physical dimension."""
    d = mats_list[0].shape[0]
    total = sum(m.shape[1] for m in mats_list)
    out = np.zeros((d, total, total), dtype=complex)
    off = 0
    for m in mats_list:
        D = m.shape[1]
        out[:, off : off + D, off : off + D] = m
        off += D
    return out


@dataclass(frozen=True, eq=False)
class BlockMps:
    """Direct sum ``C = A (+) B (+) ...`` of injective blocks.

    Multiplicities are fixed to one: numerically identical blocks are
    rejected unless ``allow_repeated`` is set (the doubled representations
    used for injective states).
    """

    blocks: tuple
    allow_repeated: bool = False
    offsets: tuple = field(init=False)

    def __post_init__(self) -> None:
        blocks = tuple(self.blocks)
        if not blocks:
            raise InputError("BlockMps needs at least one block")
        d = blocks[0].d
        if any(b.d != d for b in blocks):
            raise DimensionMismatchError("all blocks must share the physical dimension")
        if not self.allow_repeated:
            for i, bi in enumerate(blocks):
                for bj in blocks[i + 1 :]:
                    if bi.allclose(bj):
                        raise StandardFormError(
                            "repeated block: multiplicities other than one are not supported"
                        )
        offsets = tuple(int(x) for x in np.cumsum([0] + [b.D for b in blocks[:-1]]))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "offsets", offsets)

    @property
    def d(self) -> int:
        return self.blocks[0].d

    @property
    def D(self) -> int:  # noqa: N802
        return sum(b.D for b in self.blocks)

    @property
    def dims(self) -> tuple:
        return tuple(b.D for b in self.blocks)

    @property
    def tensor(self) -> MpsTensor:
        return MpsTensor(direct_sum([b.mats for b in self.blocks]))


def as_tensor(c) -> MpsTensor:
    """Accept an MpsTensor, a BlockMps or a raw ``(d, D, D)`` array."""
    if isinstance(c, MpsTensor):
        return c
    if isinstance(c, BlockMps):
        return c.tensor
    return MpsTensor(np.asarray(c))


def concatenate_sites(*families: np.ndarray) -> np.ndarray:
    """Contract site tensors along the bond: ``T_{i1..ik} = F1_{i1} F2_{i2} ...``.

    Each family has shape ``(d_k, D_k, D_{k+1})``; the result has shape
    ``(prod d_k, D_1, D_{k+1})`` with the first site as the most significant
    physical digit.  Rectangular families (walls) are allowed.
    """
    out = np.asarray(families[0], dtype=complex)
    for f in families[1:]:
        f = np.asarray(f, dtype=complex)
        if out.shape[2] != f.shape[1]:
            raise DimensionMismatchError(
                f"bond mismatch: {out.shape[2]} vs {f.shape[1]}"
            )
        out = np.einsum("iab,jbc->ijac", out, f).reshape(
            out.shape[0] * f.shape[0], out.shape[1], f.shape[2]
        )
    return out


def block_sites(t: MpsTensor, k: int, cap: int = BLOCK_CAP) -> MpsTensor:
    """Block ``k`` sites into one with physical dimension ``d**k``."""
    if k < 1:
        raise InputError("k must be >= 1")
    if t.d**k > cap:
        raise SizeCapError(f"d^k = {t.d**k} exceeds blocking cap {cap}")
    return MpsTensor(concatenate_sites(*([t.mats] * k)))


@dataclass(frozen=True, eq=False)
class TransferOperator:
    """Matrix of ``X -> sum_i A_i X B_i^dagger`` on row-major ``vec(X)``."""

    matrix: np.ndarray
    shape: tuple  # (D_A, D_B): X is D_A x D_B

    @property
    def dim(self) -> int:
        return self.shape[0] * self.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (self.matrix @ np.asarray(x, dtype=complex).reshape(-1)).reshape(self.shape)

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, k)


def transfer_operator(a, b) -> TransferOperator:
    """Transfer operator ``E_A^B`` between two tensors with equal ``d``."""
    am = a.mats if isinstance(a, MpsTensor) else np.asarray(a, dtype=complex)
    bm = b.mats if isinstance(b, MpsTensor) else np.asarray(b, dtype=complex)
    if am.shape[0] != bm.shape[0]:
        raise DimensionMismatchError(
            f"physical dimensions differ: {am.shape[0]} vs {bm.shape[0]}"
        )
    Da, Db = am.shape[1], bm.shape[1]
    mat = np.einsum("iac,ibe->abce", am, bm.conj()).reshape(Da * Db, am.shape[2] * bm.shape[2])
    return TransferOperator(mat, (Da, Db))


def _eigvals(mat: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc


def spectral_radius(e: TransferOperator) -> float:
    return float(np.max(np.abs(_eigvals(e.matrix))))


def _leading_eig(mat: np.ndarray, tol: float):
    try:
        w, v = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(-np.abs(w))
    w, v = w[order], v[:, order]
    if len(w) > 1 and np.abs(w[1]) > np.abs(w[0]) * (1.0 - tol):
        raise StandardFormError(
            f"degenerate leading transfer eigenvalue: |{w[0]:.6g}| ~ |{w[1]:.6g}|"
        )
    return w[0], v[:, 0], w


def _positive_from_eigvec(vec: np.ndarray, D: int) -> np.ndarray:
    m = vec.reshape(D, D)
    tr = np.trace(m)
    if abs(tr) < 1e-14:
        raise StandardFormError("fixed point has vanishing trace")
    m = m * (np.conj(tr) / abs(tr))
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class CanonicalData:
    lam: np.ndarray
    trace_lambda: float
    leading_eigenvalue: complex
    second_modulus: float


def fixed_points(t: MpsTensor, tol: float = 1e-9) -> CanonicalData:
    """Leading eigenvalue of ``E_t^t`` and its left fixed point, ``tr = 1``."""
    _require_normal(t)
    e = transfer_operator(t, t)
    mu, _, w = _leading_eig(e.matrix, tol)
    # left fixed point: eigenvector of the adjoint map X -> sum A^dag X A
    wl, vl = np.linalg.eig(e.matrix.conj().T)
    lam = _positive_from_eigvec(vl[:, np.argmax(np.abs(wl))], t.D)
    lam = lam / np.trace(lam).real
    if np.linalg.eigvalsh(lam).min() < -tol:
        raise StandardFormError("left fixed point is not positive semidefinite")
    second = float(np.abs(w[1])) if len(w) > 1 else 0.0
    return CanonicalData(lam, float(np.trace(lam).real), complex(mu), second)


@dataclass(frozen=True, eq=False)
class GaugeRecord:
    """``canonical = scale * gauge^-1 A gauge``."""

    gauge: np.ndarray
    scale: float


def canonicalize(t: MpsTensor, tol: float = 1e-9) -> tuple[MpsTensor, GaugeRecord]:
    """Bring an injective tensor to standard form (right fixed point ``1``).

    The tensor is rescaled so the transfer operator has spectral radius one
    and gauge-transformed by the square root of its right fixed point.
    """
    _require_normal(t)
    e = transfer_operator(t, t)
    mu, vec, _ = _leading_eig(e.matrix, tol)
    if abs(mu.imag) > tol * abs(mu) or mu.real <= 0:
        raise StandardFormError(f"leading eigenvalue {mu} is not positive")
    rho = _positive_from_eigvec(vec, t.D)
    w, v = np.linalg.eigh(rho)
    if w.min() <= tol * w.max():
        raise StandardFormError("right fixed point is not positive definite")
    w = w * (t.D / w.sum())
    g = (v * np.sqrt(w)) @ v.conj().T
    scale = 1.0 / np.sqrt(mu.real)
    out = t.gauge(g).scaled(scale)
    return out, GaugeRecord(g, float(scale))


def coefficient_matrix(t) -> np.ndarray:
    """``d x (D_l * D_r)`` matrix of vectorized ``A_i``."""
    m = t.mats if isinstance(t, MpsTensor) else np.asarray(t, dtype=complex)
    return m.reshape(m.shape[0], -1)


def is_injective(t, tol: float = RANK_TOL) -> bool:
    m = coefficient_matrix(t)
    return numerical_rank(m, tol) == m.shape[1]


def _orth_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s[0] == 0.0:
        return rows[:0]
    return vh[s > tol * s[0]]


def injectivity_index(t: MpsTensor, k_max: int | None = None, tol: float = RANK_TOL):
    """Smallest ``k <= k_max`` with ``block_sites(t, k)`` injective, else ``None``.

    Works on the span of length-``k`` products inside ``M_D`` instead of the
    ``d**k``-dimensional blocked tensor, so no size cap applies.
    """
    D = t.D
    if k_max is None:
        k_max = 2 * D * D
    if k_max < 1:
        raise InputError("k_max must be >= 1")
    span = _orth_rows(coefficient_matrix(t), tol)
    for k in range(1, k_max + 1):
        if span.shape[0] == D * D:
            return k
        mats = span.reshape(-1, D, D)
        nxt = np.einsum("sab,ibc->siac", mats, t.mats).reshape(-1, D * D)
        nxt = _orth_rows(nxt, tol)
        if nxt.shape[0] == span.shape[0]:
            overlap = np.linalg.svd(span.conj() @ nxt.T, compute_uv=False)
            if np.all(overlap > 1 - 1e-9):
                return None  # span has stabilised below full rank
        span = nxt
    return None


def _require_normal(t: MpsTensor) -> None:
    # injective after blocking is enough: the transfer operator is unchanged
    if not is_injective(t) and injectivity_index(t) is None:
        raise InjectivityError("tensor is not injective for any blocking length")


def left_inverse_tensor(t, tol: float = RANK_TOL) -> MpsTensor:
    """Tensor ``A^-1`` with ``sum_i (A_i)_ab (A^-1_i)_a'b' = delta_aa' delta_bb'``."""
    m = coefficient_matrix(t)
    if numerical_rank(m, tol) < m.shape[1]:
        raise InjectivityError("tensor is not injective: no left inverse")
    D = t.D if isinstance(t, MpsTensor) else np.asarray(t).shape[1]
    inv = np.linalg.pinv(m.T, rcond=tol)
    return MpsTensor(inv.reshape(-1, D, D))


def arrange(a, r, l, b) -> MpsTensor:  # noqa: E741
    """The 2x2 block tensor ``(A R; L B)``."""
    a, b = as_tensor(a).mats, as_tensor(b).mats
    r, l = np.asarray(r, dtype=complex), np.asarray(l, dtype=complex)  # noqa: E741
    d, Da, Db = a.shape[0], a.shape[1], b.shape[1]
    if b.shape[0] != d or r.shape != (d, Da, Db) or l.shape != (d, Db, Da):
        raise DimensionMismatchError(
            f"blocks do not fit: A{a.shape} B{b.shape} R{r.shape} L{l.shape}"
        )
    out = np.zeros((d, Da + Db, Da + Db), dtype=complex)
    out[:, :Da, :Da] = a
    out[:, :Da, Da:] = r
    out[:, Da:, :Da] = l
    out[:, Da:, Da:] = b
    return MpsTensor(out)


def block_left_inverse(a, r, l, b, tol: float = 1e-9) -> dict:  # noqa: E741
    """Per-block left inverses of ``(A R; L B)``.

    Each returned inverse contracts to the identity with its own block and
    to zero with the other three.  Identically-zero blocks (decoupled
    arrangements) get ``None``; every other block must satisfy its
    identities or :class:`InjectivityError` is raised.
    """
    full = arrange(a, r, l, b)
    Da = as_tensor(a).D
    Dt = full.D
    m = coefficient_matrix(full)
    inv = np.linalg.pinv(m.T, rcond=RANK_TOL).reshape(-1, Dt, Dt)
    sl = {"A": (slice(0, Da), slice(0, Da)), "R": (slice(0, Da), slice(Da, Dt)),
          "L": (slice(Da, Dt), slice(0, Da)), "B": (slice(Da, Dt), slice(Da, Dt))}
    blocks = {k: full.mats[:, s0, s1] for k, (s0, s1) in sl.items()}
    present = {k: bool(np.any(blk != 0)) for k, blk in blocks.items()}
    out = {}
    for k, (s0, s1) in sl.items():
        if not present[k]:
            out[k] = None
            continue
        cand = inv[:, s0, s1]
        for k2, blk in blocks.items():
            c = np.einsum("iab,icd->abcd", blk, cand)
            if k2 == k:
                target = np.einsum("ac,bd->abcd", np.eye(blk.shape[1]), np.eye(blk.shape[2]))
            else:
                target = np.zeros_like(c)
            if np.max(np.abs(c - target)) > tol:
                raise InjectivityError(
                    f"arrangement not injective: inverse of block {k} fails against {k2}"
                )
        out[k] = cand
    return out


def random_tensor(d: int, D: int, rng: np.random.Generator, canonical: bool = True) -> MpsTensor:
    """Complex Gaussian tensor, optionally brought to standard form."""
    mats = rng.standard_normal((d, D, D)) + 1j * rng.standard_normal((d, D, D))
    t = MpsTensor(mats)
    if canonical:
        t, _ = canonicalize(t)
    return t


def random_block_mps(d: int, dims, seed: int) -> BlockMps:
    rng = np.random.default_rng(seed)
    return BlockMps(tuple(random_tensor(d, D, rng) for D in dims))


def fixed_point_projector(t: MpsTensor) -> np.ndarray:
    """Matrix of ``X -> 1 * tr(Lambda X)`` on row-major ``vec(X)``."""
    lam = fixed_points(t).lam
    return np.outer(np.eye(t.D).reshape(-1), lam.T.reshape(-1))


def transfer_convergence(t: MpsTensor, ks) -> np.ndarray:
    """Operator-norm distance ``||E^k - P||`` for each ``k`` in ``ks``."""
    e = transfer_operator(t, t).matrix
    p = fixed_point_projector(t)
    out = []
    for k in ks:
        out.append(np.linalg.norm(np.linalg.matrix_power(e, k) - p, 2))
    return np.array(out)
