"""Closed-form instances: GHZ/Ising, the doubled product state, XY duality.

Also hosts the small Pauli-string algebra used to cross-check the
closed-form terms and the doubled-injective uncle construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .chain import assemble, digits_of, index_of
from .errors import InjectivityError, InputError, SizeCapError
from .mps import BlockMps, MpsTensor, as_tensor, is_injective
from .span import LocalTerm, ProjectorTerm, contract_state
from .spectra import frustration_residuals, injective_defect_state, kernel_basis, kernel_overlap
from .uncle import Perturbation, uncle_local_term

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-site products: (a, b) -> (phase, label)
_PRODUCT = {}
for _a in "IXYZ":
    for _b in "IXYZ":
        _m = PAULI[_a] @ PAULI[_b]
        for _c in "IXYZ":
            _ph = np.trace(PAULI[_c].conj().T @ _m) / 2
            if abs(_ph) > 0.5:
                _PRODUCT[_a, _b] = (complex(np.round(_ph)), _c)


@dataclass(frozen=True)
class PauliString:
    labels: str
    coeff: complex = 1.0

    def __post_init__(self) -> None:
        if not self.labels or any(ch not in PAULI for ch in self.labels):
            raise InputError(f"invalid Pauli labels {self.labels!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def matrix(self) -> np.ndarray:
        return self.coeff * reduce(np.kron, (PAULI[ch] for ch in self.labels))

    def __mul__(self, other):
        if isinstance(other, PauliString):
            if len(other) != len(self):
                raise InputError("Pauli strings of different length")
            coeff = self.coeff * other.coeff
            labels = []
            for a, b in zip(self.labels, other.labels):
                ph, c = _PRODUCT[a, b]
                coeff *= ph
                labels.append(c)
            return PauliString("".join(labels), coeff)
        return PauliString(self.labels, self.coeff * other)

    __rmul__ = __mul__

    def tensor(self, other: "PauliString") -> "PauliString":
        return PauliString(self.labels + other.labels, self.coeff * other.coeff)

    def embed(self, n: int, start: int) -> "PauliString":
        """Pad with identities to ``n`` sites, first label on site ``start`` (0-based)."""
        if start < 0 or start + len(self) > n:
            raise InputError("embedding does not fit")
        return PauliString("I" * start + self.labels + "I" * (n - start - len(self)), self.coeff)


def pauli_sum(strings) -> np.ndarray:
    return sum(s.matrix() for s in strings)


def _ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def _projector_minus(vectors, n: int) -> ProjectorTerm:
    m = np.eye(2**n, dtype=complex)
    for v in vectors:
        v = v / np.linalg.norm(v)
        m -= np.outer(v, v.conj())
    return ProjectorTerm(m, n, 2)


def ghz_tensor() -> BlockMps:
    """Blocks ``(1)`` on ``|0>`` and ``(1)`` on ``|1>``: ``A_0 = diag(1,0)``, ``A_1 = diag(0,1)``."""
    a = MpsTensor(np.array([[[1.0]], [[0.0]]]))
    b = MpsTensor(np.array([[[0.0]], [[1.0]]]))
    return BlockMps((a, b))


def zero_doubled_tensor() -> BlockMps:
    """``|0...0>`` written with bond dimension two: ``A_0 = 1``, ``A_1 = 0``."""
    a = MpsTensor(np.array([[[1.0]], [[0.0]]]))
    return BlockMps((a, a), allow_repeated=True)


def ising_parent_term() -> ProjectorTerm:
    return _projector_minus([_ket("00"), _ket("11")], 2)


def ghz_uncle_term() -> ProjectorTerm:
    """``1 - [|000><000| + |111><111| + |0+1><0+1| + |1+0><1+0|]``."""
    plus = (_ket("0") + _ket("1")) / np.sqrt(2)
    z, o = _ket("0"), _ket("1")
    vecs = [_ket("000"), _ket("111"), np.kron(np.kron(z, plus), o), np.kron(np.kron(o, plus), z)]
    return _projector_minus(vecs, 3)


def w_state(n: int) -> np.ndarray:
    """Unnormalized sum of all single-excitation basis states."""
    v = np.zeros(2**n, dtype=complex)
    for q in range(n):
        v[1 << q] = 1.0
    return v


def zero_state(n: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=complex)
    v[0] = 1.0
    return v


def zero_uncle_term() -> ProjectorTerm:
    """Three-site uncle of the doubled product state: ``1 - |000><000| - |W><W|``."""
    return _projector_minus([zero_state(3), w_state(3)], 3)


def zero_uncle_two_site() -> ProjectorTerm:
    """``1 - |00><00| - |Phi+><Phi+|`` with ``|Phi+> = (|01> + |10>)/sqrt 2``."""
    return _projector_minus([zero_state(2), w_state(2)], 2)


def xy_pauli_form(shift: float = 0.5, zxz_sign: float = -1.0) -> np.ndarray:
    """``-1/4 [IZZ + ZZI + IXI + zxz_sign * ZXZ] + shift * III``."""
    terms = [PauliString("IZZ"), PauliString("ZZI"), PauliString("IXI"), PauliString("ZXZ", zxz_sign)]
    return -0.25 * pauli_sum(terms) + shift * np.eye(8)


def xy_identity_check(shift: float = 0.5, zxz_sign: float = -1.0) -> float:
    """Operator-norm distance between the GHZ uncle term and its Pauli form."""
    return float(np.linalg.norm(ghz_uncle_term().matrix - xy_pauli_form(shift, zxz_sign), 2))


def xy_chain(n: int) -> np.ndarray:
    """``-1/4 sum_i [X_i X_{i+1} + Y_i Y_{i+1} + 2 Z_i] + n/2`` on a periodic ring."""
    if 2**n > 4096:
        raise SizeCapError("XY chain is built densely; n <= 12")
    h = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        j = (i + 1) % n
        for lab in "XY":
            ls = ["I"] * n
            ls[i] = ls[j] = lab
            h -= 0.25 * PauliString("".join(ls)).matrix()
        ls = ["I"] * n
        ls[i] = "Z"
        h -= 0.5 * PauliString("".join(ls)).matrix()
    return h + 0.5 * n * np.eye(2**n)


@dataclass(frozen=True)
class DualityReport:
    n: int
    sector_mismatch: float
    operator_mismatch: float
    full_mismatch: float
    ground_energies: tuple


def duality_map(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Unitary between the ``X^n = +1`` sector and the even-parity sector.

    Returns ``(flip_basis, parity_basis)`` as columns in the full space;
    the column ``c`` of the first is ``(|c> + |not c>)/sqrt 2`` (first bit 0)
    and the matching column of the second is ``|c_1+c_2, ..., c_n+c_1>``.
    """
    half = 2 ** (n - 1)
    cfg = digits_of(np.arange(half), 2, n)  # first digit is 0
    comp = 1 - cfg
    dual = cfg ^ np.roll(cfg, -1, axis=1)
    src = np.zeros((2**n, half))
    dst = np.zeros((2**n, half))
    cols = np.arange(half)
    src[index_of(cfg, 2), cols] = 1 / np.sqrt(2)
    src[index_of(comp, 2), cols] = 1 / np.sqrt(2)
    dst[index_of(dual, 2), cols] = 1.0
    return src, dst


def duality_sector_check(n: int) -> DualityReport:
    """Compare the GHZ uncle on ``X^n = +1`` with the XY ring on even parity."""
    if n % 2:
        raise InputError("n must be even")
    hu = assemble(ghz_uncle_term(), n, "periodic").to_dense()
    hxy = xy_chain(n)
    src, dst = duality_map(n)
    a = src.T @ hu @ src
    b = dst.T @ hxy @ dst
    ea, eb = np.linalg.eigvalsh(a), np.linalg.eigvalsh(b)
    full = np.abs(np.linalg.eigvalsh(hu) - np.linalg.eigvalsh(hxy)).max()
    return DualityReport(
        n,
        float(np.abs(ea - eb).max()),
        float(np.abs(a - b).max()),
        float(full),
        (float(ea[0]), float(eb[0])),
    )


@dataclass(frozen=True)
class SandwichReport:
    n: int
    holds: bool
    lower: float
    lower_margin: float  # min_i (lt_i - lower * l_i)
    upper_margin: float  # min_i (l_i - lt_i)
    best_lower: float  # min over nonzero l_i of lt_i / l_i


def local_sandwich_margins() -> dict:
    """Smallest eigenvalues of ``m - c h'`` for several ``c`` and of ``h' - m``.

    ``m = (h~_12 + h~_23) / 2`` on three sites.
    """
    h3 = zero_uncle_term().matrix
    h2 = zero_uncle_two_site().matrix
    m = 0.5 * (np.kron(h2, np.eye(2)) + np.kron(np.eye(2), h2))
    out = {"upper": float(np.linalg.eigvalsh(h3 - m).min())}
    for c in (0.5, 0.25):
        out[c] = float(np.linalg.eigvalsh(m - c * h3).min())
    return out


def sandwich_check(n: int, lower: float = 0.5, slack: float = 1e-9) -> SandwichReport:
    """Ordered-eigenvalue comparison of the three- and two-site product-state uncles."""
    l3 = np.linalg.eigvalsh(assemble(zero_uncle_term(), n, "periodic").to_dense())
    l2 = np.linalg.eigvalsh(assemble(zero_uncle_two_site(), n, "periodic").to_dense())
    lo = float((l2 - lower * l3).min())
    up = float((l3 - l2).min())
    nz = l3 > 1e-8
    best = float((l2[nz] / l3[nz]).min())
    return SandwichReport(n, lo >= -slack and up >= -slack, lower, lo, up, best)


def is_injective_row(a, r, tol: float = 1e-10) -> bool:
    """Whether the ``D x 2D`` family ``(A R)`` spans all ``D x 2D`` matrices."""
    am, rm = as_tensor(a).mats, np.asarray(r, dtype=complex)
    return is_injective(np.concatenate([am, rm], axis=2), tol)


def doubled_uncle_term(a, pert: Perturbation, sites: int = 3) -> LocalTerm:
    """Uncle term of ``A (+) A`` under a symmetric perturbation ``(P R; R P)``.

    Asymmetric perturbations are rejected: the repeated block only yields
    the defect-sum ground space when both blocks are perturbed alike.
    """
    a = as_tensor(a)
    if not pert.is_symmetric():
        raise InputError("doubled-block route needs a symmetric perturbation (P R; R P)")
    c = BlockMps((a, a), allow_repeated=True)
    return uncle_local_term(c, pert, sites)


@dataclass(frozen=True, eq=False)
class InjectiveUncleReport:
    n: int
    kernel_dim: int
    overlap: float
    frustration: float
    predicted: tuple


def injective_uncle_check(a, r, n: int, p=None, sites: int = 3) -> InjectiveUncleReport:
    """Kernel of the doubled-injective uncle on a periodic ``n``-site chain.

    The prediction is the pair ``|M(A)>`` and the zero-momentum defect sum
    ``sum_pos tr[A..A R A..A]`` (only ``|M(A)>`` when ``r = 0``).
    """
    a = as_tensor(a)
    r = np.asarray(r, dtype=complex)
    if r.shape != a.mats.shape:
        raise InputError(f"defect must have shape {a.mats.shape}, got {r.shape}")
    if np.any(r) and not is_injective_row(a, r):
        raise InjectivityError("(A R) is not injective")
    p = np.zeros_like(a.mats) if p is None else np.asarray(p, dtype=complex)
    term = doubled_uncle_term(a, Perturbation.symmetric(p, r), sites)
    h = assemble(term, n, "periodic")
    basis, dim = kernel_basis(h)
    predicted = [contract_state([a.mats] * n)]
    if np.any(r):
        predicted.append(injective_defect_state(a, r, n, 0))
    return InjectiveUncleReport(
        n, dim, kernel_overlap(basis, predicted), frustration_residuals(h, basis), tuple(predicted)
    )
