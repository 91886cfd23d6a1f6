"""Exception hierarchy shared by every module of the package."""


class KreinCanonError(Exception):
    """Base class for all errors raised by :mod:`krein_canon`."""


class ValidationError(KreinCanonError, ValueError):
    """Input does not satisfy a structural precondition."""


class NondegenerateViolation(ValidationError):
    """The Gram operator ``H`` is singular (within tolerance) or not symmetric."""


class SingularTransform(ValidationError):
    """A change of basis is not invertible."""


class NotHNormal(ValidationError):
    """``N`` does not commute with its ``H``-adjoint."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ParameterDomainViolation(ValidationError):
    """Canonical parameters lie outside the family domain."""

    def __init__(self, family, violations):
        self.family = family
        self.violations = list(violations)
        super().__init__(f"{family}: " + "; ".join(self.violations))


class DegenerateBlock(KreinCanonError):
    """A constructed block has a singular Gram matrix (tolerance breakdown)."""


class ClassificationError(KreinCanonError):
    """Base for failures of the canonical reduction pipelines."""


class RankMismatch(ClassificationError):
    """The space rank does not match the reducer being called."""


class DecomposableInput(ClassificationError):
    """The pair splits into an orthogonal sum; ``split`` carries the pieces."""

    def __init__(self, message, split=None):
        super().__init__(message)
        self.split = split


class DimensionOutOfTheorem(ClassificationError):
    """An indecomposable block has a dimension the theory excludes."""


class NotIndecomposableHint(ClassificationError):
    """The eigenvector subspace is not neutral, so the pair must split."""


class NoFit(ClassificationError):
    """No catalog template could be fitted to the pair."""


class MultipleFit(ClassificationError):
    """Several catalog templates fit the pair at the same tolerance."""
