"""Integrability obstructions of a geometric object.

Two cross-differentiation obstructions are computed: the *algebroid*
curvature, a pair of expressions linear in an order-1 jet (X0, X1) whose
vanishing on the symmetry fibers makes the linear system completely
integrable, and the *groupoid* curvature, attached to a 1-arrow between two
points, whose vanishing characterizes integrability of the nonlinear
system.  Both reduce to the same scalar condition: the connection-built
("fraud") Riemann tensor is a constant multiple of the antisymmetrized
metric model, and that constant classifies the uniformizing space form.

Conventions.  Alternation is the plain difference ``A_[ab] = A_ab - A_ba``.
With the fraud tensor stored as ``R[i, a, b, c] = [d_a g^i_bc -
g^s_ac g^i_bs]_[ab]`` this reproduces the classical Riemann tensor when the
connection block is Levi-Civita, and the fitted constant in
``R[i, k, r, j] = c (d^i_k g_jr - d^i_r g_jk)`` equals the sectional
curvature: +1 on the unit sphere, -1 on the Poincare disk.  `MODEL_SIGN`
freezes that calibration (and exists so the self-test can corrupt it as a
negative control).
"""

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import GeometryError, PreconditionError, SingularJetError
from .geometry import GeometricObject
from .jets import RIEMANNIAN

__all__ = [
    "MODEL_SIGN", "SPHERICAL", "FLAT", "HYPERBOLIC", "NON_CONSTANT",
    "FraudRiemann", "AlgebroidCurvature", "GroupoidCurvature",
    "MCConstants", "SpaceFormVerdict",
    "fraud_riemann", "algebroid_curvature", "groupoid_curvature",
    "constant_curvature_fit", "mc_constants", "space_form_model",
]

# calibrated sign of the constant-curvature model tensor; see module docstring
MODEL_SIGN = 1.0

SPHERICAL = "spherical"
FLAT = "flat"
HYPERBOLIC = "hyperbolic"
NON_CONSTANT = "non_constant"


def _alt(a, ax1, ax2):
    return a - a.swapaxes(ax1, ax2)


@dataclass(frozen=True)
class FraudRiemann:
    """Connection-built Riemann tensor at a point: ``R[i, a, b, c] =
    R^i_ab,c``, antisymmetric in the (a, b) pair."""

    point: tuple
    R: np.ndarray

    @property
    def n(self) -> int:
        return self.R.shape[0]


def fraud_riemann(g: GeometricObject, x) -> FraudRiemann:
    """Riemann-shaped tensor built from the connection block of g at x."""
    G = g.connection_at(x)
    dG = g.d_connection_at(x)
    # hat[i,a,b,c] = d_a g^i_bc - g^s_ac g^i_bs
    hat = np.transpose(dG, (0, 3, 1, 2)) - np.einsum("sac,ibs->iabc", G, G)
    R = _alt(hat, 1, 2)
    return FraudRiemann(point=tuple(np.asarray(x, float)), R=R)


@dataclass(frozen=True)
class AlgebroidCurvature:
    """Linear-map form of the algebroid obstruction at a point.

    ``c2_x0[i,k,r,j,b]`` and ``c2_x1[i,k,r,j,b,c]`` are the coefficients of
    X0[b] and X1[b,c] in the connection-level component N2^i_kr,j;
    ``c1_x0[k,i,j,b]`` / ``c1_x1[k,i,j,b,c]`` likewise for the metric-level
    component N1_ki,j.  Both are antisymmetric in their alternated pair and
    exactly linear in the jet by construction.
    """

    point: tuple
    c2_x0: np.ndarray
    c2_x1: np.ndarray
    c1_x0: np.ndarray
    c1_x1: np.ndarray

    @property
    def n(self) -> int:
        return self.c2_x0.shape[0]

    def evaluate(self, X0, X1):
        """Values (N2[i,k,r,j], N1[k,i,j]) on the order-1 jet (X0, X1)."""
        X0 = np.asarray(X0, float)
        X1 = np.asarray(X1, float)
        N2 = (np.einsum("ikrjb,b->ikrj", self.c2_x0, X0)
              + np.einsum("ikrjbc,bc->ikrj", self.c2_x1, X1))
        N1 = (np.einsum("kijb,b->kij", self.c1_x0, X0)
              + np.einsum("kijbc,bc->kij", self.c1_x1, X1))
        return N2, N1

    def max_on(self, X0, X1) -> float:
        N2, N1 = self.evaluate(X0, X1)
        return max(float(np.max(np.abs(N2))), float(np.max(np.abs(N1))))


def algebroid_curvature(g: GeometricObject, x) -> AlgebroidCurvature:
    """Coefficient tensors of the algebroid obstruction at x.

    For the Euclidean object every coefficient vanishes identically, since
    each term carries a derivative of the object or a connection factor.
    The metric-level component exists only for the riemannian kind (it is
    returned as zero arrays for the affine kind).
    """
    n = g.n
    G = g.connection_at(x)
    dG = g.d_connection_at(x)
    d2G = g.d2_connection_at(x)

    # X0[b] coefficient of the hatted expression at (i,k,r,j):
    #   d2_rb g^i_jk + g^a_jk d_b g^i_ra - g^i_ak d_b g^a_jr
    hat2_x0 = (np.einsum("ijkrb->ikrjb", d2G)
               + np.einsum("ajk,irab->ikrjb", G, dG)
               - np.einsum("iak,ajrb->ikrjb", G, dG))
    # X1[b,c] coefficients, filled one column slot at a time
    hat2_x1 = np.zeros((n, n, n, n, n, n))
    tA = np.einsum("ibjr->irjb", dG)           # X1[b,k] * d_r g^i_bj
    for k in range(n):
        hat2_x1[:, k, :, :, :, k] += tA
    tB = (np.einsum("ibkr->ikrb", dG)          # X1[b,j] * (d_r g^i_bk - g^i_ak g^a_br)
          - np.einsum("iak,abr->ikrb", G, G))
    for j in range(n):
        hat2_x1[:, :, :, j, :, j] += tB
    tC = (np.einsum("ijkb->ikjb", dG)          # X1[b,r] * (d_b g^i_jk - g^i_ak g^a_bj
          - np.einsum("iak,abj->ikjb", G, G)   #           + g^a_jk g^i_ba)
          + np.einsum("ajk,iba->ikjb", G, G))
    for r in range(n):
        hat2_x1[:, :, r, :, :, r] += tC
    tD = (np.einsum("bjkr->krjb", dG)          # -X1[i,b] * (d_r g^b_jk + g^a_jk g^b_ra)
          + np.einsum("ajk,bra->krjb", G, G))
    for i in range(n):
        hat2_x1[i, :, :, :, i, :] -= tD

    c2_x0 = _alt(hat2_x0, 1, 2)
    c2_x1 = _alt(hat2_x1, 1, 2)

    if g.kind == RIEMANNIAN:
        g1 = g.metric_at(x)
        dg1 = g.d_metric_at(x)
        d2g1 = g.d2_metric_at(x)
        hat1_x0 = (np.einsum("ijkb->kijb", d2g1)
                   - np.einsum("ai,ajkb->kijb", g1, dG))
        hat1_x1 = np.zeros((n, n, n, n, n))
        u = (dg1                               # X1[b,k] * (d_b g_ij - g_ai g^a_bj)
             - np.einsum("ai,abj->ijb", g1, G))
        for k in range(n):
            hat1_x1[k, :, :, :, k] += u
        v = (np.einsum("bik->kib", dg1)        # X1[b,j] * (d_k g_bi - g_ai g^a_bk)
             - np.einsum("ai,abk->kib", g1, G))
        for j in range(n):
            hat1_x1[:, :, j, :, j] += v
        w = np.einsum("bjk->kjb", dg1)         # X1[b,i] * d_k g_bj
        for i in range(n):
            hat1_x1[:, i, :, :, i] += w
        hat1_x1 += np.einsum("ai,bjk->kijab", g1, G)   # X1[a,b] * g_ai g^b_jk
        c1_x0 = _alt(hat1_x0, 0, 1)
        c1_x1 = _alt(hat1_x1, 0, 1)
    else:
        c1_x0 = np.zeros((n, n, n, n))
        c1_x1 = np.zeros((n, n, n, n, n))

    return AlgebroidCurvature(point=tuple(np.asarray(x, float)),
                              c2_x0=c2_x0, c2_x1=c2_x1,
                              c1_x0=c1_x0, c1_x1=c1_x1)


@dataclass(frozen=True)
class GroupoidCurvature:
    """Obstruction attached to a 1-arrow: connection level ``R2[i, r, j, k]``
    (antisymmetric in (r, j)) and metric level ``R1[i, k, j]`` (antisymmetric
    in (k, j); zero array for the affine kind)."""

    x: tuple
    y: tuple
    phi1: np.ndarray
    R2: np.ndarray
    R1: np.ndarray

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.R2))), float(np.max(np.abs(self.R1))))


def groupoid_curvature(g: GeometricObject, x, y, phi1) -> GroupoidCurvature:
    """Curvature of the 1-arrow `phi1` from x to y.

    The connection level transports the fraud tensor at x through the arrow
    and subtracts the tensor at y; the metric level cross-differentiates the
    metric-preservation equation.  Both vanish on arrows of an integrable
    structure.
    """
    phi1 = np.asarray(phi1, dtype=float)
    if np.linalg.det(phi1) == 0.0:
        raise SingularJetError("arrow first block is singular")
    phinv = np.linalg.inv(phi1)
    Rx = fraud_riemann(g, x).R
    Ry = fraud_riemann(g, y).R
    R2 = np.einsum("dabc,id,ar,bj,ck->irjk", Rx, phi1, phinv, phinv, phinv) - Ry
    n = g.n
    if g.kind == RIEMANNIAN:
        g1y = g.metric_at(y)
        ginvy = np.linalg.inv(g1y)
        dg1x = g.d_metric_at(x)
        dg1y = g.d_metric_at(y)
        Gx = g.connection_at(x)
        Gy = g.connection_at(y)
        hat = (np.einsum("ba,bjk,ai->ikj", phinv, dg1x, ginvy)
               - np.einsum("ak,bj,cba,ci->ikj", phi1, phi1, dg1y, ginvy)
               - np.einsum("ed,ac,bj,ab,cke,di->ikj",
                           phinv, phi1, phi1, g1y, Gx, ginvy)
               + np.einsum("ab,acd,ck,bj,di->ikj", g1y, Gy, phi1, phi1, ginvy))
        R1 = _alt(hat, 1, 2)
    else:
        R1 = np.zeros((n, n, n))
    return GroupoidCurvature(x=tuple(np.asarray(x, float)),
                             y=tuple(np.asarray(y, float)),
                             phi1=phi1, R2=R2, R1=R1)


@dataclass(frozen=True)
class SpaceFormVerdict:
    """Fitted constant, worst misfit, and the resulting classification."""

    c: float
    residual: float
    label: str


def space_form_model(g1: np.ndarray) -> np.ndarray:
    """Model tensor M[i,k,r,j] = d^i_k g_jr - d^i_r g_jk (times MODEL_SIGN)."""
    n = g1.shape[0]
    eye = np.eye(n)
    return MODEL_SIGN * (np.einsum("ik,jr->ikrj", eye, g1)
                         - np.einsum("ir,jk->ikrj", eye, g1))


def constant_curvature_fit(g: GeometricObject, samples, tol: float = 1e-6) -> SpaceFormVerdict:
    """Least-squares fit of one scalar c to R = c * model across samples.

    `residual` is the worst componentwise misfit over all samples; the
    classification is by the sign of c with a dead band ``|c| <= 10 tol``
    mapped to flat.  For the affine kind the model degenerates to c = 0 and
    the verdict is flat exactly when the fraud tensor vanishes.
    """
    samples = [np.asarray(p, float) for p in samples]
    if not samples:
        raise ValueError("at least one sample point is required")
    if g.kind == RIEMANNIAN and len(samples) < 5:
        raise ValueError("the fit needs at least 5 sample points")
    tensors = [fraud_riemann(g, p).R for p in samples]
    if g.kind != RIEMANNIAN:
        residual = max(float(np.max(np.abs(R))) for R in tensors)
        label = FLAT if residual <= tol else NON_CONSTANT
        return SpaceFormVerdict(c=0.0, residual=residual, label=label)
    models = [space_form_model(g.metric_at(p)) for p in samples]
    num = sum(float(np.sum(R * M)) for R, M in zip(tensors, models))
    den = sum(float(np.sum(M * M)) for M in models)
    c = num / den
    residual = max(float(np.max(np.abs(R - c * M)))
                   for R, M in zip(tensors, models))
    if residual > tol:
        label = NON_CONSTANT
    elif abs(c) <= 10.0 * tol:
        label = FLAT
    else:
        label = SPHERICAL if c > 0 else HYPERBOLIC
    return SpaceFormVerdict(c=c, residual=residual, label=label)


@dataclass(frozen=True)
class MCConstants:
    """Frame-factored curvature constants and their constancy defect.

    `c2[i,r,j,k]` and `c1[i,k,j]` are the sample means of the alternated
    frame-factored expressions; `defect` is the largest deviation of any
    sample from the mean (zero defect = the expressions are constants,
    which characterizes integrability).
    """

    c2: np.ndarray
    c1: np.ndarray
    defect: float
    sample_count: int


def mc_constants(g: GeometricObject, frame, samples, tol: float = 1e-6) -> MCConstants:
    """Evaluate the frame-factored curvature expressions across samples.

    `frame` is an (n, n) grid of expressions with frame^T frame = metric
    (checked numerically).  Requires an integrable object: the constant
    curvature fit must have residual <= tol, otherwise the notion of
    structure constants is vacuous and PreconditionError reports the fit.
    """
    if g.kind != RIEMANNIAN:
        raise PreconditionError("frame-factored constants require a metric")
    samples = [np.asarray(p, float) for p in samples]
    verdict = constant_curvature_fit(g, samples, tol=tol)
    if verdict.residual > tol:
        raise PreconditionError(
            f"object is not integrable: constant-curvature residual "
            f"{verdict.residual:.3e} exceeds {tol:.1e}")
    n = g.n
    frame_grid = np.empty((n, n), dtype=object)
    src = np.asarray(frame, dtype=object)
    for i, j in np.ndindex(n, n):
        e = src[i, j]
        frame_grid[i, j] = e if isinstance(e, ex.Expr) else ex.Num(e)
    frame_fn = ex.compile_grid(frame_grid)

    c2_vals, c1_vals = [], []
    for p in samples:
        B = frame_fn(p)
        g1 = g.metric_at(p)
        if np.max(np.abs(B.T @ B - g1)) > 1e-8 * (1.0 + np.max(np.abs(g1))):
            raise GeometryError(
                f"frame does not factor the metric at {tuple(p)}")
        Binv = np.linalg.inv(B)
        Rf = fraud_riemann(g, p).R
        T2 = np.einsum("dabc,id,ar,bj,ck->irjk", Rf, B, Binv, Binv, Binv)
        c2_vals.append(_alt(T2, 1, 2))
        dg1 = g.d_metric_at(p)
        G = g.connection_at(p)
        S = np.einsum("bca->abc", dg1) + np.einsum("da,dbc->abc", g1, G)
        T1 = np.einsum("ai,bj,ck,abc->ikj", Binv, Binv, Binv, S)
        c1_vals.append(_alt(T1, 0, 1))
    c2_mean = np.mean(c2_vals, axis=0)
    c1_mean = np.mean(c1_vals, axis=0)
    defect = 0.0
    for v2, v1 in zip(c2_vals, c1_vals):
        defect = max(defect,
                     float(np.max(np.abs(v2 - c2_mean))),
                     float(np.max(np.abs(v1 - c1_mean))))
    return MCConstants(c2=c2_mean, c1=c1_mean, defect=defect,
                       sample_count=len(samples))
