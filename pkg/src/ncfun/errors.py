"""Exception hierarchy.

Every failure a caller can act on is a :class:`DomainError`; the CLI maps
those to exit code 3.  :class:`SchemaError` covers malformed input (exit 2).
"""


class NcError(Exception):
    pass


class SchemaError(NcError):
    pass


class DomainError(NcError, ValueError):
    pass


class KernelMismatch(DomainError):
    pass


class LetterCountMismatch(DomainError):
    pass


class ComponentCountMismatch(DomainError):
    pass


class ShapeMismatch(DomainError):
    pass


class SizeMismatch(ShapeMismatch):
    pass


class SingularSimilarity(DomainError):
    pass


class NonScalarCenter(DomainError):
    pass


class NotNilpotent(DomainError):
    pass


class NotSquare(DomainError):
    pass


class SingularDifferential(DomainError):
    pass


class CenterResidualNonzero(DomainError):
    pass


class IterationBudgetExceeded(DomainError):
    pass


class NotNilpotentOperator(DomainError):
    pass


class NoContractionFound(DomainError):
    pass


class MaxIterationsExceeded(DomainError):
    pass


class DomainEscape(DomainError):
    pass


class BlowupDetected(DomainError):
    pass


class SingularKktJacobian(DomainError):
    pass


class UnknownSuite(DomainError):
    pass
