"""Exceptions shared across the toolkit."""


class HitchinLabError(Exception):
    """Base class for all toolkit errors."""


class NonInvertible(HitchinLabError):
    """Matrix is singular where an invertible one is required."""


class EigenFailure(HitchinLabError):
    """Eigenvalue iteration failed to converge."""


class NonTransverse(HitchinLabError):
    """Pair of subspaces does not span the ambient space.

    Carries the offending smallest singular value as ``sigma``.
    """

    def __init__(self, sigma, message="non-transverse"):
        super().__init__(f"{message} (sigma_min={sigma:.3e})")
        self.sigma = float(sigma)


class BudgetExceeded(HitchinLabError):
    """Word enumeration would exceed the configured budget."""


class InadmissibleParameter(HitchinLabError):
    """Constructor parameters lie outside the admissible family."""


class NotLoxodromic(HitchinLabError):
    """Element is not loxodromic where loxodromy is required."""


class EmptyBall(HitchinLabError):
    """No admissible word in the truncation ball."""


class UndefinedForSmallN(HitchinLabError):
    """Bouquet quantities are only defined for n > 3."""


class NarrowCloud(HitchinLabError):
    """Pair cloud spans too little scale range for an envelope fit."""


class CertificationFailure(HitchinLabError):
    """A representation failed its certification checks."""
