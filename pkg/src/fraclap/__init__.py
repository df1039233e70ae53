"""Variational solver for kernel-driven nonlocal Dirichlet problems.

The package discretizes the energy space of a radial singular kernel
(model case: the un-normalized fractional Laplacian) with zero-extended
P1 elements, checks the hypotheses of a local-minimum existence result,
and searches the prescribed energy ball for a nontrivial weak solution.
"""

__version__ = "0.1.0"

from .assembly import (
    HField,
    StiffnessSystem,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
)
from .embedding import EmbeddingEstimate, critical_exponent, estimate_c_q
from .errors import (
    AssemblyError,
    ConfigurationError,
    EvaluationError,
    FraclapError,
    HypothesisError,
    NumericError,
    SpectralError,
)
from .kernel import Kernel, exterior_weight, validate_conditions
from .mesh import Mesh, build_interval_mesh, build_rectangle_mesh, eval_p1
from .solver import (
    BallConstraint,
    SolveReport,
    energy,
    gradient,
    nontriviality_certificate,
    solve_in_ball,
    verify_weak_solution,
)
from .spectral import EigenPair, first_eigenpair, rayleigh_quotient

__all__ = [
    "__version__",
    "AssemblyError",
    "BallConstraint",
    "ConfigurationError",
    "EigenPair",
    "EmbeddingEstimate",
    "EvaluationError",
    "FraclapError",
    "HField",
    "HypothesisError",
    "Kernel",
    "Mesh",
    "NumericError",
    "SolveReport",
    "SpectralError",
    "StiffnessSystem",
    "assemble_load",
    "assemble_mass",
    "assemble_stiffness",
    "build_interval_mesh",
    "build_rectangle_mesh",
    "critical_exponent",
    "energy",
    "estimate_c_q",
    "eval_p1",
    "exterior_weight",
    "first_eigenpair",
    "gradient",
    "nontriviality_certificate",
    "rayleigh_quotient",
    "solve_in_ball",
    "validate_conditions",
    "verify_weak_solution",
]
