"""Parent and uncle Hamiltonians of matrix product states."""

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    GeometryError,
    InjectivityError,
    InputError,
    SizeCapError,
    StandardFormError,
    UncleLabError,
    UncleUndefinedError,
)
from .mps import (
    BlockMps,
    MpsTensor,
    canonicalize,
    fixed_points,
    injectivity_index,
    is_injective,
    transfer_operator,
)
from .span import LocalTerm, ProjectorTerm, domain_wall_span, mps_state, projector_complement, span_basis
from .uncle import (
    Perturbation,
    limit_convergence_probe,
    parent_local_term,
    random_injective_perturbation,
    uncle_local_term,
    uncle_tensor,
)
from .chain import ChainOperator, SparseVector, assemble
from .spectra import SpectrumReport, intersection_scan, kernel_basis, low_spectrum, spectral_gap
from .models import ghz_tensor, ghz_uncle_term, ising_parent_term, zero_doubled_tensor

__version__ = "0.1.0"

__all__ = [
    "assemble",
    "BlockMps",
    "canonicalize",
    "ChainOperator",
    "ConvergenceError",
    "DimensionMismatchError",
    "domain_wall_span",
    "fixed_points",
    "GeometryError",
    "ghz_tensor",
    "ghz_uncle_term",
    "injectivity_index",
    "InjectivityError",
    "InputError",
    "intersection_scan",
    "is_injective",
    "ising_parent_term",
    "kernel_basis",
    "limit_convergence_probe",
    "LocalTerm",
    "low_spectrum",
    "mps_state",
    "MpsTensor",
    "parent_local_term",
    "Perturbation",
    "projector_complement",
    "ProjectorTerm",
    "random_injective_perturbation",
    "SizeCapError",
    "span_basis",
    "SparseVector",
    "spectral_gap",
    "SpectrumReport",
    "StandardFormError",
    "transfer_operator",
    "uncle_local_term",
    "uncle_tensor",
    "UncleLabError",
    "UncleUndefinedError",
    "zero_doubled_tensor",
]
