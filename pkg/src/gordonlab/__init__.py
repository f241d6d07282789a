"""Periodic-approximant experiments for quasiperiodic Schrodinger operators.

Exact continued fractions and Liouville frequencies, sampled potentials,
transfer-matrix propagation, Gordon-type L1 distances and no-decay witnesses.
"""

from .dsl import parse_potential
from .errors import (
    DomainError,
    DSLSyntaxError,
    GordonLabError,
    InvariantViolation,
    NumericalBlowup,
    RangeError,
    ResourceBudgetError,
    SingularityHit,
    StepSizeUnderflow,
)
from .exact_arith import (
    ContinuedFraction,
    Frequency,
    build_liouville,
    cf_expand,
    convergents,
    liouville_certify,
    preset,
)
from .gordon import gordon_sequence, l1_distance, osc_bound, singular_bound
from .kernels import BACKEND
from .nodecay import gronwall_check, growth_bound, witness_run
from .potentials import (
    ZERO,
    PowerSingular,
    QuasiPotential,
    Smooth,
    Step,
    Sum,
    holder_certificate,
    l1_unif_norm,
    osc_integral,
)
from .propagator import SolutionState, monodromy, propagate, three_point_bound, transfer

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ContinuedFraction",
    "DomainError",
    "DSLSyntaxError",
    "Frequency",
    "GordonLabError",
    "InvariantViolation",
    "NumericalBlowup",
    "PowerSingular",
    "QuasiPotential",
    "RangeError",
    "ResourceBudgetError",
    "SingularityHit",
    "Smooth",
    "SolutionState",
    "Step",
    "StepSizeUnderflow",
    "Sum",
    "ZERO",
    "build_liouville",
    "cf_expand",
    "convergents",
    "gordon_sequence",
    "gronwall_check",
    "growth_bound",
    "holder_certificate",
    "l1_distance",
    "l1_unif_norm",
    "liouville_certify",
    "monodromy",
    "osc_bound",
    "osc_integral",
    "parse_potential",
    "preset",
    "propagate",
    "singular_bound",
    "three_point_bound",
    "transfer",
    "witness_run",
]
