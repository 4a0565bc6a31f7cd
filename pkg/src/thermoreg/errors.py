"""Exception hierarchy. The CLI maps each class to a stable exit code."""


class ThermoregError(Exception):
    """Base class for library errors."""


class DomainError(ThermoregError, ValueError):
    """An argument lies outside the admissible chart or domain."""


class NonFiniteError(ThermoregError, ArithmeticError):
    """A computation produced NaN or infinity."""


class ConvergenceError(ThermoregError, RuntimeError):
    """An iterative solver ran out of iterations."""


class ManifoldMismatchError(ThermoregError, TypeError):
    """Points from different belief manifolds were combined."""


class SecondLawError(ThermoregError, ValueError):
    """Reported energy is below the Landauer minimum for the information erased."""


class DivergenceError(ThermoregError, RuntimeError):
    """A learner left its chart too often to be trusted."""


class SingularMetricError(DomainError):
    """The Fisher metric is not positive-definite at the requested point."""
