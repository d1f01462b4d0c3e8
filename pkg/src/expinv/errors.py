"""Exception types raised across the package."""


class ExpInvError(Exception):
    """Base class for all package errors."""


class CapacityError(ExpInvError, ValueError):
    """A requested table size exceeds the supported limit."""


class DomainError(ExpInvError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ContractError(ExpInvError, ValueError):
    """A caller violated an operation's precondition (e.g. missing handles)."""


class NonFiniteSampleError(ExpInvError, ArithmeticError):
    """A function handle returned inf/nan at a sample point."""

    def __init__(self, abscissa, value):
        self.abscissa = abscissa
        self.value = value
        super().__init__(f"non-finite sample g({abscissa!r}) = {value!r}")


class ToleranceNotMetError(ExpInvError, ArithmeticError):
    """Adaptive quadrature hit its refinement cap before reaching tolerance."""


class ConvergenceError(ExpInvError, ArithmeticError):
    """An iterative method did not converge within its iteration budget."""


class SpectrumError(ExpInvError, ValueError):
    """A matrix has an eigenvalue outside the interval an operation requires."""

    def __init__(self, eigenvalue, lo, hi):
        self.eigenvalue = eigenvalue
        super().__init__(f"eigenvalue {eigenvalue!r} outside [{lo!r}, {hi!r}]")


class GraphError(ExpInvError, ValueError):
    """Malformed or disconnected graph input."""
