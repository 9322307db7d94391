# cr_app/exceptions.py


class CRError(Exception):
    """Base class for every error raised by the cr_app package."""


# Series core

class FrameMismatch(CRError):
    """Arithmetic was attempted across two different variable frames."""


class PrecisionUnderflow(CRError):
    """A differentiation or bracket would leave no known coefficient."""

    def __init__(self, message='precision underflow'):
        super().__init__(message)


class SubstitutionError(CRError):
    """A substituted series with a constant term replaced a used variable."""


class CancellationError(CRError):
    """A product handed to cofactor cancellation is not zero."""


class SingularMatrix(CRError):
    """An exact matrix over the Gaussian rationals has no inverse."""


# Manifold models

class ManifoldValidationError(CRError):
    """The defining series do not describe a generic submanifold through 0."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class OriginNotOnManifold(ManifoldValidationError):
    pass


class NormalizationFailure(ManifoldValidationError):
    pass


class InvolutionFailure(ManifoldValidationError):
    """w_j is not recovered from Theta_bar_j(z, zeta, Theta(zeta, z, w))."""

    def __init__(self, message, witness=None, equation=None):
        super().__init__(message, witness=witness)
        self.equation = equation


# Constancy pipeline

class InsufficientPrecision(CRError):
    """The certified degree bound reached zero at some pipeline stage."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class ZeroSeriesError(CRError):
    """A series required to be not identically zero has an empty table."""


class HypothesisNotSatisfied(CRError):
    """The reality identity does not hold for the given pair."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CertificationError(CRError):
    """An identity that must hold at the certified bound did not."""


class FalsificationFound(CRError):
    """The fuzzing harness found a pair contradicting the constancy lemma."""

    def __init__(self, message, instance=None):
        super().__init__(message)
        self.instance = instance


# Expression front-end

class ExpressionError(CRError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f'{message} at position {position}'
        super().__init__(message)
        self.position = position


class UnknownVariable(ExpressionError):
    pass


class FrameConflict(ExpressionError):
    pass


class DegreeTooHigh(ExpressionError):
    pass
