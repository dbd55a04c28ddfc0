"""Jet-groupoid computations for Riemannian and affine structures.

The package builds a second-order geometric object (metric plus a
connection-like companion) from symbolic component expressions, measures
the integrability obstructions of its symmetry groupoid and algebroid,
fits the constant-curvature condition, transports symmetry jets along
paths, and classifies the uniformizing space form by the signature of the
Killing form of the resulting algebra.
"""

from .errors import (
    ConstraintDriftError,
    DomainExitError,
    EvalDomainError,
    ExprSyntaxError,
    GeometryError,
    JetGeomError,
    MembershipError,
    MetricFileError,
    NotPositiveDefiniteError,
    PreconditionError,
    RankDeficiencyError,
    SingularJetError,
    UnknownIdentifierError,
    VerificationError,
)
from .expr import Expr, compile_grid, diff, evaluate, parse_expr, substitute
from .jets import (
    AFFINE,
    RIEMANNIAN,
    CosetInvariant,
    Jet2Element,
    Jet3Element1d,
    compose2,
    compose3_1d,
    coset_invariant,
    coset_transport,
    identity2,
    inverse2,
    project,
    recover_conjugator,
    split_epsilon,
    split_schwarzian,
)
from .geometry import (
    Arrow2,
    Box,
    GeometricObject,
    MembershipResidual,
    arrow_membership,
    cholesky_frame_exprs,
    frame_arrow,
    frame_jet,
    from_metric,
    from_section,
    quadratic_chart,
    regular_normalization,
    transform_chart,
)
from .algebroid import (
    JetVector,
    JetVectorField,
    SpencerDefect,
    algebraic_bracket,
    algebraic_bracket_point,
    algebroid_membership,
    fiber_basis,
    prolong,
    spencer_bracket,
    spencer_operator,
    stabilizer_fiber,
    structure_lift,
)
from .curvature import (
    FLAT,
    HYPERBOLIC,
    NON_CONSTANT,
    SPHERICAL,
    AlgebroidCurvature,
    FraudRiemann,
    GroupoidCurvature,
    MCConstants,
    SpaceFormVerdict,
    algebroid_curvature,
    constant_curvature_fit,
    fraud_riemann,
    groupoid_curvature,
    mc_constants,
)
from .integrator import (
    KillingBasis,
    PathSpec,
    TransportResult,
    integrate_killing,
    killing_algebra,
    killing_verify,
    monodromy_defect,
)
from .metricfile import MetricFile, load_metric_file, parse_metric_text

__version__ = "0.1.0"
