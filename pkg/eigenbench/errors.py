"""
Exception hierarchy.

InputError subclasses signal bad input (CLI exit code 2), NumericalError
subclasses signal a numerical failure inside a module (CLI exit code 3).
"""


class EigenbenchError(Exception):
    module = "eigenbench"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module


class InputError(EigenbenchError, ValueError):
    pass


class MeshParseError(InputError):
    module = "mesh"

    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MeshValidationError(InputError):
    module = "mesh"

    def __init__(self, invariant, detail=""):
        message = f"mesh invariant violated: {invariant}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)
        self.invariant = invariant


class ConfigError(InputError):
    module = "cli"

    def __init__(self, pointer, message):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


class NumericalError(EigenbenchError):
    pass


class MetricError(NumericalError):
    module = "metric"

    def __init__(self, vertex, t, detail="metric is not positive definite"):
        super().__init__(f"{detail} at vertex {vertex} (t={t!r})")
        self.vertex = vertex
        self.t = t


class AssemblyError(NumericalError):
    module = "fem"

    def __init__(self, element, detail="metric is not positive definite at a quadrature point"):
        super().__init__(f"{detail} in element {element}")
        self.element = element


class FactorizationError(NumericalError):
    module = "eigensolver"


class ConsistencyError(NumericalError):
    module = "perturbation"


class DomainError(NumericalError):
    module = "chart_calculus"


class DegenerateNormalError(NumericalError):
    module = "chart_calculus"


class TrackingError(NumericalError):
    module = "perturbation"

    def __init__(self, t, count, expected):
        super().__init__(
            f"tracking window holds {count} eigenvalues at t={t!r}, expected {expected}"
        )
        self.t = t
        self.count = count
        self.expected = expected


class SingularSystemError(NumericalError):
    module = "liapunov_schmidt"

    def __init__(self, lam, t):
        super().__init__(f"bordered system singular at lambda={lam!r}, t={t!r}")
        self.lam = lam
        self.t = t


class WindowError(NumericalError):
    module = "liapunov_schmidt"

    def __init__(self, count, expected, t):
        super().__init__(f"found {count} roots of det A(t, .) at t={t!r}, expected {expected}")
        self.count = count
        self.t = t
        self.expected = expected
