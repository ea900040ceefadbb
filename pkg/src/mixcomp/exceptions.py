"""Exception hierarchy for mixcomp."""


class MixcompError(Exception):
    """Base class for all errors raised by mixcomp."""


class InputError(MixcompError, ValueError):
    """Malformed arguments or data (shape, domain, ordering)."""


class NumericalError(MixcompError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""


class DimensionMismatch(InputError):
    pass


class NotSorted(InputError):
    pass


class NonFinite(InputError):
    pass


class BadDelta(InputError):
    pass


class BadDesign(InputError):
    pass


class TooFewPoints(InputError):
    pass


class TooManyPartitions(InputError):
    pass


class NotSymmetric(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class DegenerateSample(NumericalError):
    """All observations coincide (or have zero spread), so the threshold is undefined."""


class DegenerateStats(NumericalError):
    pass


class NoBracket(NumericalError):
    pass
