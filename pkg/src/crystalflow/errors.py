"""Exception types shared across the package.

Everything numerical that can fail in a structured way raises one of these,
so callers (and the CLI) can distinguish bad input from a genuine bug.
"""


class CrystalflowError(Exception):
    """Base class for all package errors."""


class ConfigError(CrystalflowError):
    """Malformed or inconsistent run configuration."""


class GridError(CrystalflowError):
    """Slope grid cannot be built or does not meet its contract."""


class CoverageError(CrystalflowError):
    """Slope grid does not cover the range of the initial slope data."""


class InvalidProfile(CrystalflowError):
    """Profile fails structural validation (ordering, adjacency, closure)."""


class DegenerateFace(CrystalflowError):
    """An operation hit a zero-length face where a positive length is required."""


class NotStrictlyStable(CrystalflowError):
    """Angular energy violates f + f'' > 0 somewhere on the sampled circle."""


class UnboundedWulffSet(CrystalflowError):
    """Half-plane intersection for the given angles/values is unbounded."""


class NotAFacet(CrystalflowError):
    """Queried normal angle does not match any facet of the polygon."""


class UnsupportedCollapse(CrystalflowError):
    """Face collapse pattern matches neither single-face nor paired-face surgery.

    Carries the last few integrator states to make post-mortems possible.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history else []


class StepRejected(CrystalflowError):
    """A trial integrator step produced an invalid intermediate state."""


class EventLocalizationError(CrystalflowError):
    """Time bisection for an event failed to bracket or converge."""


class InternalInconsistency(CrystalflowError):
    """Scheme state violates an assumption the evolution relies on."""
