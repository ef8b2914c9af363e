"""Exception hierarchy shared by all modules."""


class QmsError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QmsError):
    """Input violates a structural requirement (symmetry, positivity, ...)."""


class NumericalError(QmsError):
    """A numerical procedure failed or an invariant was violated at runtime."""


class NonHermitianInput(ValidationError):
    pass


class DomainViolation(ValidationError):
    pass


class SingularKernel(NumericalError):
    pass


class SupportViolation(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class NotAnAlgebra(ValidationError):
    pass


class MissingIdentity(ValidationError):
    pass


class NotCompletelyPositive(ValidationError):
    pass


class GeneratorError(ValidationError):
    """Raised by generator validation; ``failures`` lists every failed check."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class NotSymmetric(GeneratorError):
    pass


class NotPositive(GeneratorError):
    pass


class NotUnital(GeneratorError):
    pass


class NotMarkov(GeneratorError):
    pass


class NotConditionallyNegative(ValidationError):
    pass


class NotCentral(ValidationError):
    pass


class NegativeTime(ValidationError):
    pass


class NonpositiveTime(ValidationError):
    pass


class NoGap(NumericalError):
    pass


class NotErgodic(ValidationError):
    pass


class NotStrictlyPositive(ValidationError):
    pass


class DegenerateInput(ValidationError):
    pass


class InvariantViolation(NumericalError):
    pass
