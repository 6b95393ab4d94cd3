"""Exception hierarchy shared by every module of the package."""


class TwistedTriplesError(Exception):
    """Base class for all errors raised by this package."""


class AliasingError(TwistedTriplesError):
    """Energy leaked past the requested band limit."""


class NonMonotoneError(TwistedTriplesError):
    """A circle map is not orientation preserving."""


class ConvergenceError(TwistedTriplesError):
    """An iterative solver failed to reach its tolerance."""


class TruncationError(TwistedTriplesError):
    """A heat parameter is too small for the Fourier truncation."""


class DegenerateSpectrumError(TwistedTriplesError):
    """Too few nonzero singular values for a slope fit."""


class IllConditionedFit(TwistedTriplesError):
    """Heat-curve least squares exceeded its condition bound."""


class UnreliableResidue(TwistedTriplesError):
    """Heat-curve fit residual exceeded its bound."""


class NotUnitalError(TwistedTriplesError):
    """Algebra handle has no unit."""


class NotDerivationError(TwistedTriplesError):
    """A candidate derivation violates the Leibniz rule on samples."""


class DegreeMismatchError(TwistedTriplesError):
    """Cochain operator applied outside the degree where it is defined."""


class LocalizationError(TwistedTriplesError):
    """Closed-form evaluation requested off the localized stratum."""


class NotSelfAdjointError(TwistedTriplesError):
    pass


class GradingError(TwistedTriplesError):
    pass


class SingularDError(TwistedTriplesError):
    pass


class NotIdempotentError(TwistedTriplesError):
    pass


class ConfigError(TwistedTriplesError):
    pass


class UnknownExpressionError(TwistedTriplesError):
    pass
