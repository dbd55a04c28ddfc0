"""Numerical continuation of the symmetry system along paths.

The first-order transport reads, for an order-1 jet (X0, X1) moved along a
path with velocity v,

    dX0[i]/dt = X1[i,j] v[j]
    dX1[i,j]/dt = (-G[i,a,k] X1[a,j] - G[i,a,j] X1[a,k] + G[a,j,k] X1[i,a]
                   - X0[a] dG[i,j,k,a]) v[k]

with G the connection block of the object.  The metric-level equation is an
algebraic constraint on (X0, X1): it is monitored, not enforced, because its
drift is itself a curvature diagnostic.  Transport is linear in the initial
jet, so whole fiber bases ride along as one batched system.
"""

import math
from dataclasses import dataclass

import numpy as np

from .algebroid import JetVector, algebraic_bracket_point, fiber_basis
from .curvature import constant_curvature_fit
from .errors import ConstraintDriftError, DomainExitError, PreconditionError
from .expr import Expr, Num, compile_grid
from .geometry import GeometricObject
from .jets import RIEMANNIAN

__all__ = [
    "PathSpec", "TransportResult", "KillingBasis",
    "integrate_killing", "monodromy_defect", "killing_algebra",
    "killing_verify",
]

DEFAULT_STEP = 1e-3
DRIFT_TOL = 1e-4
INIT_TOL = 1e-8


@dataclass(frozen=True)
class _Segment:
    """One smooth piece of a path, parametrized over [0, 1]."""

    point: callable
    velocity: callable
    length: float


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-linear or circular path with a fixed integration step."""

    segments: tuple
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.step <= 0.0:
            raise ValueError("step must be positive")

    @staticmethod
    def polyline(points, step: float = DEFAULT_STEP) -> "PathSpec":
        pts = [np.asarray(p, dtype=float) for p in points]
        if len(pts) < 2:
            raise ValueError("a polyline needs at least two vertices")
        segs = []
        for p, q in zip(pts[:-1], pts[1:]):
            v = q - p
            segs.append(_Segment(
                point=lambda t, p=p, v=v: p + t * v,
                velocity=lambda t, v=v: v,
                length=float(np.linalg.norm(v)),
            ))
        return PathSpec(segments=tuple(segs), step=step)

    @staticmethod
    def circle(center, radius: float, step: float = DEFAULT_STEP,
               plane=(0, 1), angle0: float = 0.0,
               angle1: float = 2.0 * math.pi) -> "PathSpec":
        center = np.asarray(center, dtype=float)
        i, j = plane
        sweep = angle1 - angle0

        def point(t):
            a = angle0 + sweep * t
            p = center.copy()
            p[i] += radius * math.cos(a)
            p[j] += radius * math.sin(a)
            return p

        def velocity(t):
            a = angle0 + sweep * t
            v = np.zeros_like(center)
            v[i] = -radius * sweep * math.sin(a)
            v[j] = radius * sweep * math.cos(a)
            return v

        seg = _Segment(point=point, velocity=velocity,
                       length=abs(sweep) * radius)
        return PathSpec(segments=(seg,), step=step)

    def start(self) -> np.ndarray:
        return self.segments[0].point(0.0)

    def end(self) -> np.ndarray:
        return self.segments[-1].point(1.0)


@dataclass(frozen=True)
class TransportResult:
    """Endpoint jet of a transport with its worst constraint residual."""

    jet: JetVector
    max_drift: float
    steps: int


def _constraint_residual(g, x, Y0, Y1):
    """Batched metric-constraint residual; columns are independent jets."""
    g1 = g.metric_at(x)
    dg1 = g.d_metric_at(x)
    lie = (np.einsum("am,ija->ijm", Y0, dg1)
           + np.einsum("ai,ajm->ijm", g1, Y1) + np.einsum("aj,aim->ijm", g1, Y1))
    return float(np.max(np.abs(lie)))


def _transport_batch(g: GeometricObject, Y0, Y1, path: PathSpec,
                     drift_tol: float):
    """RK4 transport of a batch of order-1 jets along `path`.

    Y0 has shape (n, m), Y1 shape (n, n, m); the linear system is advanced
    with classical RK4 at fixed step, evaluating the object at the three
    stage abscissae per step.  Returns (Y0, Y1, max_drift, steps).
    """
    monitor = g.kind == RIEMANNIAN
    max_drift = 0.0
    steps = 0

    def rhs(G, dG, v, y0, y1):
        d0 = np.einsum("ijm,j->im", y1, v)
        d1 = (-np.einsum("iak,ajm,k->ijm", G, y1, v)
              - np.einsum("iaj,akm,k->ijm", G, y1, v)
              + np.einsum("ajk,iam,k->ijm", G, y1, v)
              - np.einsum("am,ijka,k->ijm", y0, dG, v))
        return d0, d1

    for seg in path.segments:
        nsteps = max(1, math.ceil(seg.length / path.step))
        h = 1.0 / nsteps
        for s in range(nsteps):
            t0 = s * h
            data = []
            for t in (t0, t0 + 0.5 * h, t0 + h):
                x = seg.point(t)
                if not g.domain.contains(x):
                    raise DomainExitError(x)
                data.append((g.connection_at(x), g.d_connection_at(x),
                             seg.velocity(t), x))
            (Ga, dGa, va, _), (Gb, dGb, vb, _), (Gc, dGc, vc, xc) = data
            k1_0, k1_1 = rhs(Ga, dGa, va, Y0, Y1)
            k2_0, k2_1 = rhs(Gb, dGb, vb, Y0 + 0.5 * h * k1_0, Y1 + 0.5 * h * k1_1)
            k3_0, k3_1 = rhs(Gb, dGb, vb, Y0 + 0.5 * h * k2_0, Y1 + 0.5 * h * k2_1)
            k4_0, k4_1 = rhs(Gc, dGc, vc, Y0 + h * k3_0, Y1 + h * k3_1)
            Y0 = Y0 + (h / 6.0) * (k1_0 + 2.0 * k2_0 + 2.0 * k3_0 + k4_0)
            Y1 = Y1 + (h / 6.0) * (k1_1 + 2.0 * k2_1 + 2.0 * k3_1 + k4_1)
            steps += 1
            if monitor:
                drift = _constraint_residual(g, xc, Y0, Y1)
                max_drift = max(max_drift, drift)
                if drift > drift_tol:
                    raise ConstraintDriftError(drift, drift_tol)
    return Y0, Y1, max_drift, steps


def integrate_killing(g: GeometricObject, init: JetVector, path: PathSpec,
                      drift_tol: float = DRIFT_TOL) -> TransportResult:
    """Transport an order-1 jet along `path` under the symmetry system.

    The initial jet must satisfy the algebraic constraint at the path start
    (residual <= 1e-8 for the riemannian kind).  The constraint residual is
    monitored at every step; exceeding `drift_tol` raises
    ConstraintDriftError (pass a large tolerance to measure failure instead,
    as the monodromy routine does).  Transport is exactly linear in `init`.
    """
    if init.order < 1:
        raise ValueError("initial jet must carry at least order 1")
    start = path.start()
    if not g.domain.contains(start):
        raise DomainExitError(start)
    Y0 = init.X0.reshape(-1, 1).astype(float)
    Y1 = init.X1.reshape(g.n, g.n, 1).astype(float)
    if g.kind == RIEMANNIAN:
        res = _constraint_residual(g, start, Y0, Y1)
        if res > INIT_TOL:
            raise PreconditionError(
                f"initial jet violates the constraint at the path start: "
                f"residual {res:.3e} exceeds {INIT_TOL:.1e}")
    Y0, Y1, drift, steps = _transport_batch(g, Y0, Y1, path, drift_tol)
    jet = JetVector(X0=Y0[:, 0], X1=Y1[:, :, 0])
    return TransportResult(jet=jet, max_drift=drift, steps=steps)


def monodromy_defect(g: GeometricObject, p, loops) -> float:
    """Worst holonomy of the fiber basis around the given closed loops.

    Transports every basis jet at `p` around each loop (which must start
    and end at `p`) and returns the largest componentwise difference between
    the returned and the initial jet.  The drift guard is disabled: on a
    non-integrable object the defect *is* the quantity of interest.
    """
    p = np.asarray(p, dtype=float)
    basis = fiber_basis(g, p)
    n = g.n
    Y0 = np.stack([b.X0 for b in basis], axis=-1)
    Y1 = np.stack([b.X1 for b in basis], axis=-1)
    worst = 0.0
    for loop in loops:
        if (np.max(np.abs(loop.start() - p)) > 1e-9
                or np.max(np.abs(loop.end() - p)) > 1e-9):
            raise ValueError("each loop must start and end at the base point")
        Z0, Z1, _, _ = _transport_batch(g, Y0, Y1, loop, drift_tol=np.inf)
        worst = max(worst,
                    float(np.max(np.abs(Z0 - Y0))),
                    float(np.max(np.abs(Z1 - Y1))))
    return worst


@dataclass(frozen=True)
class KillingBasis:
    """Pointwise basis of the symmetry algebra with its structure data.

    `basis` holds order-1 jets at `point`; `structure` has entries
    f[c, a, b] with bracket(e_a, e_b) = sum_c f[c, a, b] e_c.  The signature
    counts (positive, zero, negative) eigenvalues of the Killing form, which
    separates the three space-form algebras at this size.
    """

    point: tuple
    basis: tuple
    structure: np.ndarray
    killing_form: np.ndarray
    signature: tuple
    jacobi_residual: float
    closure_residual: float

    @property
    def dimension(self) -> int:
        return len(self.basis)


def killing_algebra(g: GeometricObject, p, samples=None,
                    tol: float = 1e-6) -> KillingBasis:
    """Symmetry algebra at `p` of an integrable riemannian object.

    Requires the constant-curvature fit to succeed (residual <= tol);
    structure constants are computed pointwise through the algebraic
    bracket of structure lifts, with no integration involved.
    """
    if g.kind != RIEMANNIAN:
        raise PreconditionError("the symmetry algebra is computed for metrics")
    p = np.asarray(p, dtype=float)
    if samples is None:
        samples = g.sample_points(extra=0)
    verdict = constant_curvature_fit(g, samples, tol=tol)
    if verdict.residual > tol:
        raise PreconditionError(
            f"object is not integrable: constant-curvature residual "
            f"{verdict.residual:.3e} exceeds {tol:.1e}")
    basis = fiber_basis(g, p)
    dim = len(basis)
    n = g.n
    coeff = np.stack(
        [np.concatenate([b.X0, b.X1.reshape(-1)]) for b in basis], axis=-1)
    structure = np.zeros((dim, dim, dim))
    closure = 0.0
    for a in range(dim):
        for b in range(a + 1, dim):
            z = algebraic_bracket_point(basis[a], basis[b], g, p, tol=1e-8)
            zv = np.concatenate([z.X0, z.X1.reshape(-1)])
            comps = coeff.T @ zv          # basis columns are orthonormal
            closure = max(closure, float(np.max(np.abs(zv - coeff @ comps))))
            structure[:, a, b] = comps
            structure[:, b, a] = -comps
    jac = (np.einsum("edc,dab->eabc", structure, structure)
           + np.einsum("eda,dbc->eabc", structure, structure)
           + np.einsum("edb,dca->eabc", structure, structure))
    jacobi = float(np.max(np.abs(jac)))
    killing_form = np.einsum("cad,dbc->ab", structure, structure)
    eigs = np.linalg.eigvalsh(killing_form)
    cut = 1e-8 * max(1.0, float(np.max(np.abs(eigs))) if eigs.size else 0.0)
    signature = (int(np.sum(eigs > cut)),
                 int(np.sum(np.abs(eigs) <= cut)),
                 int(np.sum(eigs < -cut)))
    return KillingBasis(
        point=tuple(p),
        basis=tuple(b.project(1) for b in basis),
        structure=structure,
        killing_form=killing_form,
        signature=signature,
        jacobi_residual=jacobi,
        closure_residual=closure,
    )


def _flow(fn, p, t, step):
    """RK4 flow of the compiled field `fn` from p for time t."""
    nsteps = max(1, math.ceil(abs(t) / step))
    h = t / nsteps
    x = np.asarray(p, dtype=float).copy()
    for _ in range(nsteps):
        k1 = fn(x)
        k2 = fn(x + 0.5 * h * k1)
        k3 = fn(x + 0.5 * h * k2)
        k4 = fn(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x


def killing_verify(g: GeometricObject, X, t: float, points=None,
                   rk_step: float = DEFAULT_STEP, fd_h: float = 1e-5) -> float:
    """Deviation of the metric under the time-t flow of the field X.

    Integrates the flow from each sample point, differentiates the flow map
    by central finite differences, pulls the metric back through it, and
    returns the worst componentwise deviation from the metric itself.  An
    exact isometry flow yields zero up to integration error.
    """
    if g.kind != RIEMANNIAN:
        raise PreconditionError("isometry verification requires a metric")
    comps = [c if isinstance(c, Expr) else Num(c) for c in X]
    fn = compile_grid(np.array(comps, dtype=object))
    if points is None:
        lo = np.asarray(g.domain.lo)
        hi = np.asarray(g.domain.hi)
        shrink = 0.25 * (hi - lo)
        inner = type(g.domain)(tuple(lo + shrink), tuple(hi - shrink))
        points = inner.grid(3)
    worst = 0.0
    n = g.n
    for p in points:
        p = np.asarray(p, dtype=float)
        image = _flow(fn, p, t, rk_step)
        if not g.domain.contains(image):
            raise DomainExitError(image)
        J = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = fd_h
            plus = _flow(fn, p + e, t, rk_step)
            minus = _flow(fn, p - e, t, rk_step)
            if not (g.domain.contains(plus) and g.domain.contains(minus)):
                raise DomainExitError(plus)
            J[:, j] = (plus - minus) / (2.0 * fd_h)
        pulled = np.einsum("ab,ai,bj->ij", g.metric_at(image), J, J)
        worst = max(worst, float(np.max(np.abs(pulled - g.metric_at(p)))))
    return worst
