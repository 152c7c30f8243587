"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` which the CLI prints
to standard error when a computation fails.
"""


class ArtifactError(Exception):
    code = "error"


class InvalidDimensionError(ArtifactError, ValueError):
    code = "invalid-dimension"


class DimensionMismatchError(ArtifactError, ValueError):
    code = "dimension-mismatch"


class OrderExceededError(ArtifactError, ValueError):
    code = "order-exceeded"


class SizeCapExceededError(ArtifactError, ValueError):
    code = "size-cap-exceeded"


class NotUnimodularError(ArtifactError, ValueError):
    code = "not-unimodular"


class NonFiniteObjectiveError(ArtifactError, ArithmeticError):
    code = "non-finite-objective"


class NotSymmetricError(ArtifactError, ValueError):
    code = "not-symmetric"


class ShapeError(ArtifactError, ValueError):
    code = "shape-invalid"


class EmptySetError(ArtifactError, ValueError):
    code = "empty-set"


class DegenerateNormError(ArtifactError, ValueError):
    code = "degenerate-norm"


class EmptyVBetaError(ArtifactError, RuntimeError):
    code = "empty-v-beta"


class UndefinedAtPointError(ArtifactError, ValueError):
    code = "undefined-at-point"


class EmptyPullbackError(ArtifactError, ValueError):
    code = "empty-pullback"


class InfeasibleSizeError(ArtifactError, ValueError):
    code = "infeasible-m"


class NotHomogeneousError(ArtifactError, ValueError):
    code = "not-homogeneous"


class ParseError(ArtifactError, ValueError):
    code = "parse-error"
