"""Exception hierarchy shared across the package."""


class JetGeomError(Exception):
    """Base class for all errors raised by this package."""


class ExprSyntaxError(JetGeomError):
    """Malformed expression text; `offset` is the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownIdentifierError(JetGeomError):
    """Identifier that is neither a coordinate nor a known function."""

    def __init__(self, name, offset):
        super().__init__(f"unknown identifier '{name}' (at offset {offset})")
        self.name = name
        self.offset = offset


class EvalDomainError(JetGeomError):
    """Evaluation hit a singularity: division by zero, log of a nonpositive
    value, square root of a negative value, or an invalid power."""


class SingularJetError(JetGeomError):
    """First-jet block of a jet element is singular."""


class VerificationError(JetGeomError):
    """A reconstruction or homomorphism check failed beyond tolerance."""


class NotPositiveDefiniteError(JetGeomError):
    """Metric failed the positive-definiteness check; `point` is a witness."""

    def __init__(self, point, detail=""):
        msg = f"metric is not positive-definite at {tuple(point)}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.point = tuple(point)


class GeometryError(JetGeomError):
    """Invalid geometric data (asymmetric metric, singular frame or chart)."""


class MembershipError(JetGeomError):
    """An input jet violates its fiber-membership precondition."""


class RankDeficiencyError(JetGeomError):
    """The pointwise linear system has unexpected rank (degenerate metric)."""


class ConstraintDriftError(JetGeomError):
    """Algebraic constraint drifted beyond tolerance during transport."""

    def __init__(self, drift, tol):
        super().__init__(
            f"constraint residual {drift:.3e} exceeded tolerance {tol:.3e}; "
            "the structure is non-integrable along this path or the step is too large"
        )
        self.drift = drift


class DomainExitError(JetGeomError):
    """A path or flow left the coordinate box."""

    def __init__(self, point):
        super().__init__(f"path left the coordinate domain at {tuple(point)}")
        self.point = tuple(point)


class PreconditionError(JetGeomError):
    """A documented operation precondition does not hold."""


class MetricFileError(JetGeomError):
    """Malformed metric definition file; `line` is the 1-based line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
