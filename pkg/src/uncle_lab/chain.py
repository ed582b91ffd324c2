"""Translation-invariant sums of local terms on spin chains.

Basis states are indexed with site 1 as the most significant base-``d``
digit.  Internally sites are numbered from 0; a periodic chain of ``n``
sites carries ``n`` terms, the last ``support - 1`` of which wrap around.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .errors import DimensionMismatchError, InputError, SizeCapError
from .span import LocalTerm

DENSE_CAP = 4096
MATVEC_CAP = 2**22
SPARSE_CAP = 2**20
DROP_TOL = 1e-14

BOUNDARIES = ("open", "periodic")


def digits_of(index: np.ndarray, d: int, n: int) -> np.ndarray:
    """Base-``d`` digits of integer indices, most significant first."""
    index = np.asarray(index, dtype=np.int64)
    powers = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (index[:, None] // powers[None, :]) % d


def index_of(digits: np.ndarray, d: int) -> np.ndarray:
    n = digits.shape[1]
    powers = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return digits.astype(np.int64) @ powers


def basis_index(config, d: int = 2) -> int:
    """Index of a basis state given as a digit sequence (site 1 first)."""
    out = 0
    for x in config:
        out = out * d + int(x)
    return out


@dataclass(frozen=True, eq=False)
class SparseVector:
    """State given by a few basis configurations and their amplitudes.

    Used for trial states on chains far beyond the dense cap.
    """

    configs: np.ndarray
    amps: np.ndarray
    d: int
    n: int

    @classmethod
    def from_dict(cls, entries: dict, d: int, n: int) -> "SparseVector":
        keys = np.fromiter(entries.keys(), dtype=np.int64, count=len(entries))
        vals = np.fromiter(entries.values(), dtype=complex, count=len(entries))
        return cls.build(keys, vals, d, n)

    @classmethod
    def build(cls, configs, amps, d: int, n: int) -> "SparseVector":
        configs = np.asarray(configs, dtype=np.int64)
        amps = np.asarray(amps, dtype=complex)
        uniq, inv = np.unique(configs, return_inverse=True)
        summed = np.zeros(len(uniq), dtype=complex)
        np.add.at(summed, inv, amps)
        keep = summed != 0
        return cls(uniq[keep], summed[keep], d, n)

    def norm2(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def vdot(self, other: "SparseVector") -> complex:
        common, ia, ib = np.intersect1d(self.configs, other.configs, return_indices=True)
        return complex(np.vdot(self.amps[ia], other.amps[ib]))

    def __add__(self, other: "SparseVector") -> "SparseVector":
        return SparseVector.build(
            np.concatenate([self.configs, other.configs]),
            np.concatenate([self.amps, other.amps]),
            self.d,
            self.n,
        )

    def __mul__(self, scalar) -> "SparseVector":
        return SparseVector(self.configs, self.amps * scalar, self.d, self.n)

    __rmul__ = __mul__

    def __sub__(self, other: "SparseVector") -> "SparseVector":
        return self + other * (-1.0)

    def to_dense(self, cap: int = MATVEC_CAP) -> np.ndarray:
        if self.d**self.n > cap:
            raise SizeCapError(f"d^n = {self.d ** self.n} exceeds cap {cap}")
        v = np.zeros(self.d**self.n, dtype=complex)
        v[self.configs] = self.amps
        return v

    @classmethod
    def from_dense(cls, v: np.ndarray, d: int, n: int, tol: float = 0.0) -> "SparseVector":
        idx = np.flatnonzero(np.abs(v) > tol)
        return cls(idx.astype(np.int64), v[idx].astype(complex), d, n)


@dataclass(frozen=True, eq=False)
class ChainOperator:
    """``H = sum_i h_{i..i+support-1}`` on ``sites`` sites."""

    term: LocalTerm
    sites: int
    boundary: str = "periodic"

    def __post_init__(self) -> None:
        if self.boundary not in BOUNDARIES:
            raise InputError(f"boundary must be one of {BOUNDARIES}")
        if self.sites < self.term.support:
            raise InputError(f"chain of {self.sites} sites is shorter than the term support")

    @property
    def local_dim(self) -> int:
        return self.term.local_dim

    @property
    def support(self) -> int:
        return self.term.support

    @property
    def dim(self) -> int:
        return self.local_dim**self.sites

    def positions(self) -> list[tuple[int, ...]]:
        """Zero-based site tuples of every translated term."""
        n, s = self.sites, self.support
        last = n if self.boundary == "periodic" else n - s + 1
        return [tuple((p + q) % n for q in range(s)) for p in range(last)]

    @property
    def n_terms(self) -> int:
        return len(self.positions())

    def _apply_at(self, psi: np.ndarray, where: tuple) -> np.ndarray:
        d, s, n = self.local_dim, self.support, self.sites
        moved = np.moveaxis(psi, where, range(s)).reshape(d**s, -1)
        out = (self.term.matrix @ moved).reshape((d,) * n)
        return np.moveaxis(out, range(s), where)

    def apply_term(self, v, where: tuple):
        """Apply a single translated term at the given zero-based sites."""
        if isinstance(v, SparseVector):
            return _sparse_apply(self.term, v, where)
        psi = self._reshape(v)
        return self._apply_at(psi, where).reshape(-1)

    def _reshape(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(f"vector of length {v.size}, expected {self.dim}")
        return v.astype(complex, copy=False).reshape((self.local_dim,) * self.sites)

    def apply(self, v):
        """``H v`` term by term, never building the full matrix."""
        if isinstance(v, SparseVector):
            if (v.d, v.n) != (self.local_dim, self.sites):
                raise DimensionMismatchError("sparse vector lives on a different chain")
            out = None
            for where in self.positions():
                w = _sparse_apply(self.term, v, where)
                out = w if out is None else out + w
            return out
        if self.dim > MATVEC_CAP:
            raise SizeCapError(f"d^n = {self.dim} exceeds matvec cap {MATVEC_CAP}")
        psi = self._reshape(v)
        out = np.zeros_like(psi)
        for where in self.positions():
            out += self._apply_at(psi, where)
        return out.reshape(-1)

    def term_residuals(self, v) -> np.ndarray:
        """``||h_i v||`` for every translated term."""
        out = []
        for where in self.positions():
            w = self.apply_term(v, where)
            out.append(np.sqrt(w.norm2()) if isinstance(w, SparseVector) else np.linalg.norm(w))
        return np.array(out)

    def to_sparse(self) -> sp.csr_matrix:
        if self.dim > SPARSE_CAP:
            raise SizeCapError(f"d^n = {self.dim} exceeds sparse cap {SPARSE_CAP}")
        d, n, s = self.local_dim, self.sites, self.support
        local = self.term.matrix.copy()
        # round-off entries would otherwise densify the matrix and its LU factors
        local[np.abs(local) <= DROP_TOL * max(1.0, np.abs(local).max())] = 0.0
        base = sp.kron(sp.csr_matrix(local), sp.identity(d ** (n - s)), format="coo")
        digits = digits_of(np.arange(self.dim), d, n)
        powers = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
        rows, cols, data = [], [], []
        n_start = n if self.boundary == "periodic" else n - s + 1
        for p in range(n_start):
            # site q of the base placement moves to site p + q
            idx = np.roll(digits, p, axis=1) @ powers
            rows.append(idx[base.row])
            cols.append(idx[base.col])
            data.append(base.data)
        h = sp.csr_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.dim, self.dim),
        )
        h.sum_duplicates()
        return h

    def to_dense(self) -> np.ndarray:
        if self.dim > DENSE_CAP:
            raise SizeCapError(f"d^n = {self.dim} exceeds dense cap {DENSE_CAP}")
        return self.to_sparse().toarray()

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.apply, dtype=complex)

    def expectation(self, v) -> float:
        return expectation(self, v)


def assemble(term: LocalTerm, n: int, boundary: str = "periodic") -> ChainOperator:
    """Sum of translated copies of ``term`` on an ``n``-site chain."""
    if n < term.support:
        raise InputError(f"n={n} is smaller than the term support {term.support}")
    return ChainOperator(term, n, boundary)


def _sparse_apply(term: LocalTerm, v: SparseVector, where: tuple) -> SparseVector:
    d, n, s = v.d, v.n, len(where)
    shifts = np.array([n - 1 - q for q in where], dtype=np.int64)
    weights = d**shifts
    local = (v.configs[:, None] // weights[None, :]) % d
    loc = local @ (d ** np.arange(s - 1, -1, -1, dtype=np.int64))
    stripped = v.configs - local @ weights
    out_digits = digits_of(np.arange(d**s), d, s)
    new_cfg = stripped[None, :] + (out_digits @ weights)[:, None]
    new_amp = term.matrix[:, loc] * v.amps[None, :]
    return SparseVector.build(new_cfg.ravel(), new_amp.ravel(), d, n)


def expectation(h: ChainOperator, v) -> float:
    """``Re <v|H v> / <v|v>``."""
    if isinstance(v, SparseVector):
        norm = v.norm2()
        if norm == 0:
            raise InputError("expectation of the zero vector")
        val = v.vdot(h.apply(v))
    else:
        v = np.asarray(v, dtype=complex)
        norm = float(np.vdot(v, v).real)
        if norm == 0:
            raise InputError("expectation of the zero vector")
        val = np.vdot(v, h.apply(v))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val)):
        raise InputError(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real / norm)


def residual(h: ChainOperator, v, lam: float) -> float:
    """``||(H - lam) v|| / ||v||``."""
    if isinstance(v, SparseVector):
        w = h.apply(v) - v * lam
        return float(np.sqrt(w.norm2() / v.norm2()))
    v = np.asarray(v, dtype=complex)
    return float(np.linalg.norm(h.apply(v) - lam * v) / np.linalg.norm(v))


def cyclic_shift(v: np.ndarray, d: int, n: int, k: int = 1) -> np.ndarray:
    """Translate a state by ``k`` sites (site i moves to i + k)."""
    psi = np.asarray(v).reshape((d,) * n)
    return np.moveaxis(psi, list(range(n)), [(i + k) % n for i in range(n)]).reshape(-1)
