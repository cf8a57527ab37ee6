"""Spectral asymptotics of Volterra-type compact operators.

The package predicts the leading eigenvalue asymptotics ("capacity") of
quadratic forms built from a matrix family Z_t and the standard symplectic
structure, cross-validates the prediction against a Legendre Galerkin
discretization, factorizes the finite-rank skew part of the operator, and
checks the associated optimality conditions for singular extremals of
optimal control problems.
"""

from .matfun import MatrixFunction, SymplecticForm, sandwich, stack_rows
from .capacity import (
    CapacityResult,
    build_Aj,
    first_nonzero_order,
    mu_profile,
    predict_capacity,
)
from .galerkin import (
    QuadraticFormSpec,
    SubspaceSelector,
    SpectrumResult,
    SkewFactorization,
    assemble,
    restrict,
    spectrum,
    skew_factorize,
    capacity_bound,
    solve,
)
from .modelbvp import ModelSpectrum, exact_spectrum, merge_direct_sum, shift_bounds
from .asympt import (
    CapacityFit,
    counting_function,
    fit_capacity,
    check_additivity,
    check_restriction_stability,
    default_window,
)
from .control import (
    ControlProblemLQ,
    TripleSpec,
    second_variation,
    realize_lq,
    gram,
    goh_check,
    glc_check,
    hessian_bound,
    gauge_equivalent,
    compact_part,
)

__all__ = [
    "MatrixFunction",
    "SymplecticForm",
    "sandwich",
    "stack_rows",
    "CapacityResult",
    "build_Aj",
    "first_nonzero_order",
    "mu_profile",
    "predict_capacity",
    "QuadraticFormSpec",
    "SubspaceSelector",
    "SpectrumResult",
    "SkewFactorization",
    "assemble",
    "restrict",
    "spectrum",
    "skew_factorize",
    "capacity_bound",
    "solve",
    "ModelSpectrum",
    "exact_spectrum",
    "merge_direct_sum",
    "shift_bounds",
    "CapacityFit",
    "counting_function",
    "fit_capacity",
    "check_additivity",
    "check_restriction_stability",
    "default_window",
    "ControlProblemLQ",
    "TripleSpec",
    "second_variation",
    "realize_lq",
    "gram",
    "goh_check",
    "glc_check",
    "hessian_bound",
    "gauge_equivalent",
    "compact_part",
]

__version__ = "0.1.0"
