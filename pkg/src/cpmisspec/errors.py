"""Exception types raised across the package."""


class CPMisspecError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CPMisspecError, ValueError):
    """Invalid model, sampler or experiment parameters."""


class DegenerateDesignError(CPMisspecError, ValueError):
    """The covariates do not admit a split (e.g. all x identical)."""


class NumericalFailureError(CPMisspecError, RuntimeError):
    """An iterative solver did not converge.

    The last iterate is kept on ``last_iterate`` for diagnostics.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class DomainError(CPMisspecError, ValueError):
    """An iterate left the admissible parameter domain."""


class NonPositiveDriftError(CPMisspecError, ValueError):
    """The quadratic drift ``b`` of a Chernoff-type limit is not positive."""


class IntegrabilityError(CPMisspecError, ValueError):
    """Tail integrability of a signal function cannot be certified."""


class SpecificationError(CPMisspecError, ValueError):
    """A compound-Poisson argmin specification has non-positive drift."""


class PathologicalDriftError(CPMisspecError, RuntimeError):
    """A compound-Poisson path did not settle within the jump cap."""


class DegenerateDeviationError(CPMisspecError, ValueError):
    """All subsample estimates coincide with the full-sample estimate."""


class UnstableQuantileError(CPMisspecError, ValueError):
    """Too few subsamples to estimate tail quantiles."""


class ResumeError(CPMisspecError, RuntimeError):
    """An output directory holds results from an incompatible run."""
