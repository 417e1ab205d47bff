"""Exception hierarchy.

Each class carries the CLI exit code it maps to.
"""


class HinfError(Exception):
    exit_code = 1


class ConfigError(HinfError, ValueError):
    exit_code = 2


class SpecError(HinfError, ValueError):
    """Operator or boundary data violates a stated invariant."""

    exit_code = 3


class EllipticityError(HinfError, ArithmeticError):
    """A boundary quadratic has a real root (or both roots on one side)."""

    exit_code = 3

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PreconditionError(HinfError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SymbolEvaluationError(HinfError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DegeneratePairError(HinfError, ArithmeticError):
    exit_code = 3


class AssemblyError(HinfError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, frequencies=()):
        super().__init__(message)
        self.frequencies = tuple(frequencies)


class SolverError(HinfError, ArithmeticError):
    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InstabilityError(HinfError, RuntimeError):
    """A probe failed its refinement / convergence check."""

    exit_code = 4

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
