"""Exception types shared across the package."""


class CrmpcError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(CrmpcError):
    """Matrix or vector dimensions are inconsistent."""


class NonConvergence(CrmpcError):
    """An iterative method exceeded its iteration cap."""


class UnstablePrestabilization(CrmpcError):
    """The candidate feedback gain does not stabilize the system."""


class NotPositiveDefinite(CrmpcError):
    """A matrix required to be positive definite is not."""


class InfeasibleState(CrmpcError):
    """The MPC quadratic program has no feasible point at this state."""


class SamplingStalled(CrmpcError):
    """Rejection sampling of initial states accepts too rarely to continue."""


class EmptySelection(CrmpcError):
    """A statistic was requested over an empty record set."""


class IoFailure(CrmpcError):
    """Reading or writing a benchmark artifact failed."""
