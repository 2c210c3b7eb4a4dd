"""Exception and warning types shared across the package."""


class TunnelPathError(Exception):
    """Base class for package errors."""


class DomainError(TunnelPathError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class PathRangeError(DomainError):
    """A dimensionless time lies outside the attainable range of S(D)."""

    def __init__(self, value, lo, hi):
        self.value = value
        self.lo = lo
        self.hi = hi
        super().__init__(f"S={value!r} outside attainable range [{lo!r}, {hi!r}]")


class IllConditionedError(TunnelPathError, ArithmeticError):
    """Transfer-matrix coefficients grew past the overflow guard."""


class MonotonicityError(TunnelPathError):
    """A sampled S(D) table decreased somewhere."""


class FlatDensityError(TunnelPathError):
    """A density has no discernible peak on the scanned window."""


class ConvergenceWarning(RuntimeWarning):
    """Doubling the quadrature node count moved the result past tolerance."""


class PacketWarning(UserWarning):
    """Wave-packet parameters violate the narrow-band / well-separated assumptions."""


class NormalizationWarning(RuntimeWarning):
    """A probability left [0, 1] by more than the tolerance."""
