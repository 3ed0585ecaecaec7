# engine/errors.py


class OpenGameError(Exception):
    """Base class for every error raised by the engine."""

    kind = "OpenGameError"


class InvalidFinSet(OpenGameError):
    kind = "InvalidFinSet"


class BoundaryMismatch(OpenGameError):
    kind = "BoundaryMismatch"


class EmptyIndexSet(OpenGameError):
    kind = "EmptyIndexSet"


class EmptyMoveSet(OpenGameError):
    kind = "EmptyMoveSet"


class EnumerationTooLarge(OpenGameError):
    kind = "EnumerationTooLarge"


class NotCoutilityFree(OpenGameError):
    kind = "NotCoutilityFree"


class InvalidMorphism(OpenGameError):
    kind = "InvalidMorphism"


class EmptyPrefix(OpenGameError):
    kind = "EmptyPrefix"


class HorizonExhausted(OpenGameError):
    kind = "HorizonExhausted"


class UnsupportedUtility(OpenGameError):
    kind = "UnsupportedUtility"


class NotAffineInvariant(OpenGameError):
    kind = "NotAffineInvariant"


class NumericallyMarginal(OpenGameError):
    kind = "NumericallyMarginal"


class UnknownMove(OpenGameError):
    kind = "UnknownMove"


class ParseError(OpenGameError):
    kind = "ParseError"


class SchemaError(OpenGameError):
    kind = "SchemaError"


class ApproximateUtilityWarning(UserWarning):
    """Utility values were truncated with a tail bound larger than the tolerance."""
