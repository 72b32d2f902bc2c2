"""Exception types shared across the toolkit."""


class GreengeoError(Exception):
    """Base class for all toolkit errors."""


class PointOutsideDomain(GreengeoError):
    """Evaluation point is outside the chart domain (or too close to its boundary)."""


class MetricNotPositiveDefinite(GreengeoError):
    """Metric failed a Cholesky factorization at a sampled point."""


class StepTooLargeForDomain(GreengeoError):
    """A finite-difference stencil would leave the chart domain."""


class InvalidProfile(GreengeoError):
    """Radial warp profile violates the pole conditions or requested curvature sign."""


class CutLocusPoint(GreengeoError):
    """Quotient distance has a non-unique minimizing lift at this point."""


class NoRegularPoints(GreengeoError):
    """Level-set sampler could not find points above the gradient floor."""


class DegenerateGradient(GreengeoError):
    """|grad u| at or below the gradient floor; caller should resample."""


class PrecheckFailed(GreengeoError):
    """The function u does not satisfy the standing equation at this point."""


class ParabolicManifold(GreengeoError):
    """Tail integral of 1/A diverges; no positive Green's function."""


class TailNotConical(GreengeoError):
    """Area profile has no stable power-law slope on the last grid decade."""


class NonRegularLevel(GreengeoError):
    """Requested level value is not a regular value of u."""


class CoareaMismatch(GreengeoError):
    """Shell and volume quadratures of the same bulk integral disagree."""


class TailTruncationDominates(GreengeoError):
    """Truncated outer-integral tail bound exceeds the match tolerance."""


class BetaBelowCritical(GreengeoError):
    """Exponent beta below (n-2)/(n-1); the B(n) weight would be negative."""


class ConfigError(GreengeoError):
    """Run configuration failed to parse or validate."""
