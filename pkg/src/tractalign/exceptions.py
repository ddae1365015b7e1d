"""Exception hierarchy.

Every error raised on purpose by this package derives from
:class:`TractAlignError`, so callers can catch one type at the boundary.
"""


class TractAlignError(Exception):
    """Base class for all package errors."""


class DegenerateFiber(TractAlignError, ValueError):
    """A fiber has zero total arc length."""


class GridMismatch(TractAlignError, ValueError):
    """Two curves or profiles are not sampled on the same grid."""


class NonMonotoneGamma(TractAlignError, ValueError):
    """A reparameterization is decreasing somewhere or has bad endpoints."""


class AntipodalPoint(TractAlignError, ValueError):
    """The log map or transport is undefined between antipodal points."""


class TangencyViolation(TractAlignError, ValueError):
    """A vector is not tangent at the base point it is used with."""


class BaseMismatch(TractAlignError, ValueError):
    """Coefficients or tangent vectors do not belong to the given basis."""


class EmptyBundle(TractAlignError, ValueError):
    """A bundle has no fibers."""


class FiberCountMismatch(TractAlignError, ValueError):
    """Bundles have incompatible fiber counts."""


class ShapeMismatch(TractAlignError, ValueError):
    """Matrices have incompatible shapes."""


class DegenerateGeodesic(TractAlignError, ValueError):
    """The geodesic between two base points has (numerically) zero length."""


class EmptySet(TractAlignError, ValueError):
    """A point set is empty."""


class TooFewProfiles(TractAlignError, ValueError):
    """At least two profiles are needed."""


class PairMismatch(TractAlignError, ValueError):
    """Rigid and soft results cannot be paired up."""


class BadSpec(TractAlignError, ValueError):
    """Invalid synthetic generator parameters."""


class ArchiveError(TractAlignError, ValueError):
    """A bundle archive is malformed or uses an unsupported schema."""


class TckFormatError(TractAlignError, ValueError):
    """Malformed TCK file.

    Attributes
    ----------
    position : int
        Byte offset in the file where the problem was detected.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at byte {position})")
        self.position = position


class BadMagic(TckFormatError):
    """The file does not start with the ``mrtrix tracks`` magic line."""


class MalformedHeader(TckFormatError):
    """Header lines are not ``key: value`` pairs or END is missing."""


class MissingOffset(TckFormatError):
    """The header has no usable ``file: . <offset>`` entry."""


class UnknownDatatype(TckFormatError):
    """The ``datatype`` entry is missing or not a supported float type."""


class TruncatedPayload(TckFormatError):
    """The binary payload ends early or lacks the Inf terminator."""
