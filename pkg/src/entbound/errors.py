"""Exception hierarchy shared across the package."""


class EntboundError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EntboundError):
    """An input value violates a documented invariant."""


class DimensionError(EntboundError):
    """Operator or state dimensions are inconsistent or exceed guards."""


class UnmeasuredMomentError(EntboundError):
    """A computation touched a moment entry flagged as unmeasured."""


class EstimationError(EntboundError):
    """Shot records are insufficient or inconsistent for estimation."""


class SchemaError(EntboundError):
    """A serialized file violates the expected schema."""


class DegenerateCriterionError(EntboundError):
    """A criterion is degenerate for the supplied moments (e.g. <B> = 0)."""


class NormalizationError(EntboundError):
    """A spectral normalization constant is nonpositive."""


class ConvergenceError(EntboundError):
    """An iterative solver failed to reach its tolerance."""
