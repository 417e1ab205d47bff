"""Resolvents and bounded functional calculus for half-space boundary value problems."""
from .calculus import (ContourQuadrature, HInftyFunction, apply_function, apply_functions,
                       bound_probe, build_contour, hstar_family)
from .degenerate import (BoundaryOperatorSpec, PRESETS, degenerate_sin2_bc, dirichlet_bc,
                         neumann_bc, robin_bc, verify_hypoellipticity)
from .errors import (AssemblyError, ConfigError, DegeneratePairError, EllipticityError, HinfError,
                     InstabilityError, PreconditionError, SolverError, SpecError,
                     SymbolEvaluationError)
from .grid import DiscreteField, Grid, read_field, write_field
from .kernels import BACKEND
from .oracle import assemble, matrix_function, semigroup_step, solve_resolvent
from .resolvent import ResolventEngine, SpectralPoint, apply_resolvent, sector_scan
from .roots import EllipticOperatorSpec, KappaPair, kappa_at, kappa_roots, laplacian

__version__ = "0.1.0"

__all__ = [
    "ContourQuadrature",
    "HInftyFunction",
    "apply_function",
    "apply_functions",
    "bound_probe",
    "build_contour",
    "hstar_family",
    "BoundaryOperatorSpec",
    "PRESETS",
    "degenerate_sin2_bc",
    "dirichlet_bc",
    "neumann_bc",
    "robin_bc",
    "verify_hypoellipticity",
    "AssemblyError",
    "ConfigError",
    "DegeneratePairError",
    "EllipticityError",
    "HinfError",
    "InstabilityError",
    "PreconditionError",
    "SolverError",
    "SpecError",
    "SymbolEvaluationError",
    "DiscreteField",
    "Grid",
    "read_field",
    "write_field",
    "BACKEND",
    "assemble",
    "matrix_function",
    "semigroup_step",
    "solve_resolvent",
    "ResolventEngine",
    "SpectralPoint",
    "apply_resolvent",
    "sector_scan",
    "EllipticOperatorSpec",
    "KappaPair",
    "kappa_at",
    "kappa_roots",
    "laplacian",
    "__version__",
]
