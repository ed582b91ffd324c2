"""Uncle tensors, injective perturbations and the vanishing-perturbation limit.

A two-block MPS ``C = A (+) B`` perturbed by ``P = (P^A R; L P^B)`` has a
parent Hamiltonian whose local projector jumps discontinuously as the
perturbation strength goes to zero.  The limit projector is the complement
of the span of the uncle tensor, whose diagonal blocks are the blocked
``A`` and ``B`` strings and whose off-diagonal blocks are zero-momentum
sums of a single ``R`` (or ``L``) wall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InputError, UncleUndefinedError
from .mps import BlockMps, MpsTensor, arrange, as_tensor, concatenate_sites, is_injective
from .span import ProjectorTerm, orthonormal_columns, projector_complement, wall_sum

ADMISSIBLE_MARGIN = 1e-3
CERTIFY_EPS = (1e-2, 1e-3, 1e-4)
CERTIFY_TOL = 1e-2
CERTIFY_RATIO = 0.5  # per decade of eps; a plateau then a sudden drop is a rank-cutoff artefact


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=complex)


@dataclass(frozen=True, eq=False)
class Perturbation:
    """Blocks ``(pa, r; l, pb)`` of a perturbing tensor, each of shape ``(d, rows, cols)``."""

    pa: np.ndarray
    pb: np.ndarray
    r: np.ndarray
    l: np.ndarray  # noqa: E741

    def __post_init__(self) -> None:
        for name in ("pa", "pb", "r", "l"):
            arr = _arr(getattr(self, name))
            if arr.ndim != 3:
                raise InputError(f"perturbation block {name} must have shape (d, rows, cols)")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"perturbation block {name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        d = self.pa.shape[0]
        if any(getattr(self, n).shape[0] != d for n in ("pb", "r", "l")):
            raise DimensionMismatchError("perturbation blocks disagree on the physical dimension")
        Da, Db = self.pa.shape[1], self.pb.shape[1]
        if self.pa.shape[2] != Da or self.pb.shape[2] != Db:
            raise DimensionMismatchError("diagonal perturbation blocks must be square")
        if self.r.shape[1:] != (Da, Db) or self.l.shape[1:] != (Db, Da):
            raise DimensionMismatchError(
                f"off-diagonal blocks must be {Da}x{Db} and {Db}x{Da}, got "
                f"{self.r.shape[1:]} and {self.l.shape[1:]}"
            )

    @property
    def d(self) -> int:
        return self.pa.shape[0]

    @property
    def dims(self) -> tuple:
        return self.pa.shape[1], self.pb.shape[1]

    def full(self) -> np.ndarray:
        return arrange(self.pa, self.r, self.l, self.pb).mats

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return (
            self.pa.shape == self.pb.shape
            and np.allclose(self.pa, self.pb, atol=tol, rtol=0)
            and np.allclose(self.r, self.l, atol=tol, rtol=0)
        )

    @classmethod
    def symmetric(cls, p, r) -> "Perturbation":
        return cls(_arr(p), _arr(p), _arr(r), _arr(r))


def _two_blocks(c: BlockMps) -> tuple[MpsTensor, MpsTensor]:
    if not isinstance(c, BlockMps) or len(c.blocks) != 2:
        raise InputError("uncle constructions need a BlockMps with exactly two blocks")
    return c.blocks


def _check_fit(c: BlockMps, p: Perturbation) -> None:
    if p.d != c.d:
        raise DimensionMismatchError(f"perturbation has d={p.d}, host has d={c.d}")
    if p.dims != c.dims:
        raise DimensionMismatchError(f"perturbation blocks {p.dims} do not match host {c.dims}")


def is_injective_perturbation(c: BlockMps, p: Perturbation, tol: float = 1e-10) -> bool:
    """Whether the arrangement ``(A R; L B)`` is injective."""
    a, b = _two_blocks(c)
    _check_fit(c, p)
    return is_injective(arrange(a, p.r, p.l, b), tol)


@dataclass(frozen=True, eq=False)
class UncleTensor:
    tensor: MpsTensor  # physical dim d**sites, bond D_A + D_B
    sites: int
    dims: tuple
    local_dim: int

    @property
    def diagonal(self) -> tuple:
        Da = self.dims[0]
        m = self.tensor.mats
        return m[:, :Da, :Da], m[:, Da:, Da:]

    @property
    def off_diagonal(self) -> tuple:
        Da = self.dims[0]
        m = self.tensor.mats
        return m[:, :Da, Da:], m[:, Da:, :Da]


def uncle_tensor(c: BlockMps, p: Perturbation, sites: int = 2) -> UncleTensor:
    """Blocked uncle tensor on two or three sites."""
    if sites not in (2, 3):
        raise InputError("sites must be 2 or 3")
    a, b = _two_blocks(c)
    _check_fit(c, p)
    aa = concatenate_sites(*([a.mats] * sites))
    bb = concatenate_sites(*([b.mats] * sites))
    rw = wall_sum(a.mats, p.r, b.mats, sites)
    lw = wall_sum(b.mats, p.l, a.mats, sites)
    return UncleTensor(arrange(aa, rw, lw, bb), sites, c.dims, c.d)


def wall_margin(c: BlockMps, p: Perturbation, sites: int = 3) -> float:
    """Smallest singular value of the wall images projected off the block span.

    Normalized by ``sqrt(sites - 1)``; for the GHZ tensor this is
    ``min(|b0 + b1|, |c0 + c1|)``.
    """
    u = uncle_tensor(c, p, sites)
    da, db = u.diagonal
    r, l = u.off_diagonal  # noqa: E741
    phys = da.shape[0]
    diag = orthonormal_columns(np.concatenate([da.reshape(phys, -1), db.reshape(phys, -1)], axis=1))
    walls = np.concatenate([r.reshape(phys, -1), l.reshape(phys, -1)], axis=1)
    walls = walls - diag @ (diag.conj().T @ walls)
    s = np.linalg.svd(walls, compute_uv=False)
    return float(s.min() / np.sqrt(sites - 1)) if s.size else 0.0


def perturbed_tensor(c: BlockMps, p: Perturbation, eps: float) -> np.ndarray:
    return as_tensor(c).mats + eps * p.full()


def perturbed_parent_term(c: BlockMps, p: Perturbation, sites: int, eps: float) -> ProjectorTerm:
    """Parent projector of ``C + eps P`` on ``sites`` consecutive sites."""
    ce = perturbed_tensor(c, p, eps)
    return projector_complement(concatenate_sites(*([ce] * sites)), site_dim=c.d)


@dataclass(frozen=True)
class ProbeTable:
    eps: tuple
    distances: tuple
    slope: float | None

    def rows(self):
        return list(zip(self.eps, self.distances))


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _probe(c, p, sites, eps_list, target: np.ndarray) -> ProbeTable:
    dists = []
    for eps in eps_list:
        h = perturbed_parent_term(c, p, sites, eps).matrix
        dists.append(float(np.linalg.norm(h - target, 2)))
    pos = [(e, dd) for e, dd in zip(eps_list, dists) if e > 0 and dd > 0]
    slope = loglog_slope(*zip(*pos)) if len(pos) >= 2 else None
    return ProbeTable(tuple(float(e) for e in eps_list), tuple(dists), slope)


def _check_eps(eps_list) -> None:
    eps = list(eps_list)
    if not eps:
        raise InputError("eps_list is empty")
    if any(e < 0 for e in eps) or any(x <= y for x, y in zip(eps, eps[1:])):
        raise InputError("eps_list must be strictly decreasing and non-negative")


def _certified(table: ProbeTable) -> bool:
    d = table.distances
    if max(d) < 1e-10:
        return True  # the perturbation does not move the span at all
    return all(y <= CERTIFY_RATIO * x for x, y in zip(d, d[1:])) and d[-1] < CERTIFY_TOL


def uncle_local_term(c: BlockMps, p: Perturbation, sites: int = 2) -> ProjectorTerm:
    """Limit projector ``Pi[U]`` of the perturbed parent terms.

    The two-site route needs an injective perturbation.  On the three-site
    route an injective uncle tensor settles the limit directly; otherwise
    (for example repeated blocks) the limit is accepted only if a
    convergence probe at small perturbation strength certifies it.
    """
    u = uncle_tensor(c, p, sites)
    term = projector_complement(u.tensor.mats, site_dim=c.d)
    if sites == 2:
        if not is_injective_perturbation(c, p):
            Dt = sum(c.dims)
            hint = (
                f" (d={c.d} < (D_A+D_B)^2={Dt * Dt}: use the three-site route)"
                if c.d < Dt * Dt
                else ""
            )
            raise UncleUndefinedError("perturbation is not injective" + hint)
        return term
    if is_injective(u.tensor):
        return term
    table = _probe(c, p, sites, CERTIFY_EPS, term.matrix)
    if not _certified(table):
        raise UncleUndefinedError(
            "uncle tensor is not injective and the limit could not be certified "
            f"(distances {', '.join(f'{x:.3g}' for x in table.distances)})"
        )
    return term


def parent_local_term(c, sites: int = 2) -> ProjectorTerm:
    """Projector onto the complement of the span of ``sites`` blocked copies."""
    t = as_tensor(c)
    if sites < 1:
        raise InputError("sites must be >= 1")
    return projector_complement(concatenate_sites(*([t.mats] * sites)), site_dim=t.d)


def limit_convergence_probe(c: BlockMps, p: Perturbation, sites: int, eps_list) -> ProbeTable:
    """Operator-norm distance between perturbed parent terms and ``Pi[U]``.

    A zero entry in ``eps_list`` gives the distance to the unperturbed
    parent term; the slope is fitted over positive entries only.
    """
    _check_eps(eps_list)
    target = uncle_local_term(c, p, sites).matrix
    return _probe(c, p, sites, list(eps_list), target)


def random_perturbation(c: BlockMps, rng: np.random.Generator) -> Perturbation:
    d = c.d
    Da, Db = c.dims

    def g(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return Perturbation(g(d, Da, Da), g(d, Db, Db), g(d, Da, Db), g(d, Db, Da))


def random_injective_perturbation(
    c: BlockMps, seed: int, sites: int = 2, max_tries: int = 100
) -> Perturbation:
    """Seeded complex-Gaussian perturbation passing the admissibility test.

    ``sites=2`` asks for an injective perturbation; ``sites=3`` asks for an
    injective uncle tensor whose wall margin exceeds ``1e-3``.
    """
    _two_blocks(c)
    Dt = sum(c.dims)
    if sites == 2 and c.d < Dt * Dt:
        # d matrices cannot span all Dt x Dt matrices
        raise UncleUndefinedError(
            f"no injective perturbation exists: d={c.d} < (D_A+D_B)^2={Dt * Dt}; use the three-site route"
        )
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        p = random_perturbation(c, rng)
        if sites == 2:
            if is_injective_perturbation(c, p):
                return p
        elif sites == 3:
            u = uncle_tensor(c, p, 3)
            if is_injective(u.tensor) and wall_margin(c, p, 3) > ADMISSIBLE_MARGIN:
                return p
        else:
            raise InputError("sites must be 2 or 3")
    raise UncleUndefinedError(f"no admissible perturbation found in {max_tries} draws")
