"""Common objects shared by other modules."""

from typing import Any, Union


class ExceptionFromDocstring(Exception):
    """Exception that returns its own docstring, if no message is explicitly given."""

    def __init__(self, exception_message: Union[str, None] = None, *args: Any):
        super().__init__(exception_message or self.__doc__, *args)


class CharnumError(ExceptionFromDocstring):
    """Characteristic number computation failed."""


# Configuration errors (CLI exit code 2).
class ConfigError(CharnumError):
    """Invalid run configuration."""


class UnknownManifoldError(ConfigError):
    """Unknown manifold name."""


class UnknownPolynomialError(ConfigError):
    """Unknown invariant polynomial."""


class UnknownSuiteError(ConfigError):
    """Unknown verification suite."""


class MetricConnectionRequiredError(ConfigError):
    """The Euler class requires a metric (Levi-Civita) connection."""


class ParameterRangeError(ConfigError):
    """Parameter outside of its admissible range."""


# Tensor kernel errors.
class DimensionError(CharnumError, ValueError):
    """Array dimensions do not match."""


class OddDimensionError(DimensionError):
    """Operation requires an even size."""


class AsymmetryError(DimensionError):
    """Matrix is not antisymmetric within tolerance."""


# Atlas and numerical errors (CLI exit code 3).
class AtlasError(CharnumError):
    """Atlas is inconsistent."""


class SingularMetricError(AtlasError):
    """Metric tensor is singular."""


class NotPositiveDefiniteError(AtlasError):
    """Metric tensor is not positive definite."""


class CoverageError(AtlasError):
    """Partition of unity denominator vanishes: charts do not cover the manifold."""


class OverlapError(AtlasError):
    """Evaluation point outside of the overlap of two charts."""


class MarginError(AtlasError):
    """Mollification radius exceeds the margin between weight supports and chart boundaries."""


class GridTooSmallError(AtlasError):
    """Sample grid too small for the requested stencil."""


class GridFormatError(AtlasError):
    """Malformed CHGRID01 file."""


class OrientationError(AtlasError):
    """Transition Jacobian sign disagrees with chart orientations."""


# Property checks (CLI exit code 1).
class VerificationError(CharnumError):
    """A verified property does not hold."""


class CountingBoundViolation(VerificationError):
    """Separated net has more points than the volume counting bound allows."""


class DegreeMismatchWarning(UserWarning):
    """Polynomial degree does not match the manifold dimension."""


class SubsampledSearchWarning(UserWarning):
    """Hölder seminorm pair search was subsampled."""


class DuplicatedKeyWarning(UserWarning):
    """JSON object has repeated keys; the last value wins."""

