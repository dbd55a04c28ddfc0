"""The second-order geometric object: a metric paired with a connection-like
companion field, built from frame sections through the coset invariant.

Index layout conventions used throughout the package:

* metric grid ``[i][j]``            -> g_ij
* connection grid ``[i][j][k]``     -> g^i_jk   (upper index first)
* appended axes are derivatives: ``d_metric[i, j, a] = d_a g_ij``,
  ``d2_connection[i, j, k, a, b] = d^2_ab g^i_jk`` and so on.

Charts are always given as the *source* coordinates expressed in the new
variables (the pullback direction), which is exactly the direction in which
the transformation laws of both blocks are polynomial in the chart jet.
"""

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .errors import (
    GeometryError,
    NotPositiveDefiniteError,
    PreconditionError,
    SingularJetError,
)
from .jets import AFFINE, RIEMANNIAN, Jet2Element, compose2, inverse2

__all__ = [
    "Box", "GeometricObject", "Arrow2", "MembershipResidual",
    "from_metric", "from_section", "transform_chart",
    "regular_normalization", "quadratic_chart", "arrow_membership",
    "frame_jet", "frame_arrow", "cholesky_frame_exprs",
]

_ZERO = ex.Num(0.0)
_HALF = ex.Num(0.5)

# deterministic sampling: lattice resolution and random-point seed
_GRID_PER_AXIS = 5
_RANDOM_POINTS = 100
_SAMPLE_SEED = 20259


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be nonempty and of equal length")
        if any(l >= h for l, h in zip(lo, hi)):
            raise ValueError("box is degenerate: each lo must be < hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self) -> int:
        return len(self.lo)

    def contains(self, point, slack: float = 1e-9) -> bool:
        p = np.asarray(point, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return bool(np.all(p >= lo - slack) and np.all(p <= hi + slack))

    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))

    def grid(self, per_axis: int = _GRID_PER_AXIS) -> np.ndarray:
        axes = [np.linspace(l, h, per_axis) for l, h in zip(self.lo, self.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def uniform(self, count: int, rng) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return lo + (hi - lo) * rng.random((count, self.n))


# ---------------------------------------------------------------------------
# symbolic linear algebra on object arrays of expressions

def _expr_det(m):
    k = m.shape[0]
    if k == 1:
        return m[0, 0]
    if k == 2:
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    total = _ZERO
    for j in range(k):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        term = m[0, j] * _expr_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def _expr_inverse(m):
    k = m.shape[0]
    det = _expr_det(m)
    inv = np.empty((k, k), dtype=object)
    if k == 1:
        inv[0, 0] = ex.Num(1.0) / det
        return inv
    for i in range(k):
        for j in range(k):
            minor = np.delete(np.delete(m, j, axis=0), i, axis=1)
            cof = _expr_det(minor)
            inv[i, j] = cof / det if (i + j) % 2 == 0 else -cof / det
    return inv


def _levi_civita(metric):
    """Christoffel symbols of `metric`, symbolically: (i, j, k) -> G^i_jk."""
    n = metric.shape[0]
    ginv = _expr_inverse(metric)
    dg = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for a in range(n):
                dg[i, j, a] = ex.diff(metric[i, j], a)
    gamma = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = _ZERO
                for l in range(n):
                    acc = acc + ginv[i, l] * (dg[l, k, j] + dg[l, j, k] - dg[j, k, l])
                gamma[i, j, k] = _HALF * acc
    return gamma


def _as_expr_grid(grid, shape):
    out = np.empty(shape, dtype=object)
    src = np.asarray(grid, dtype=object)
    if src.shape != shape:
        raise ValueError(f"expected grid of shape {shape}, got {src.shape}")
    for idx in np.ndindex(shape):
        e = src[idx]
        out[idx] = e if isinstance(e, ex.Expr) else ex.Num(e)
    return out


# ---------------------------------------------------------------------------

class GeometricObject:
    """Paired fields (metric, connection) over a single coordinate box.

    Immutable after construction; all evaluators are compiled lazily and
    cached, so evaluation at distinct points is cheap and thread-safe.
    Use the `from_metric` / `from_section` / `transform_chart` factories,
    which run the sampling-based validity checks.
    """

    def __init__(self, n, kind, metric, connection, domain, base_point):
        if kind not in (RIEMANNIAN, AFFINE):
            raise ValueError(f"unknown kind {kind!r}")
        self.n = int(n)
        self.kind = kind
        self.metric = None if metric is None else _as_expr_grid(metric, (n, n))
        if kind == RIEMANNIAN and self.metric is None:
            raise ValueError("riemannian object requires a metric grid")
        self.connection = _as_expr_grid(connection, (n, n, n))
        if domain.n != n:
            raise ValueError("domain dimension does not match")
        self.domain = domain
        self.base_point = np.array(base_point, dtype=float)
        self.base_point.setflags(write=False)
        if self.base_point.shape != (n,):
            raise ValueError("base point dimension does not match")
        if not domain.contains(self.base_point):
            raise ValueError("base point must lie inside the domain box")
        self._cache = {}

    # -- lazy compiled evaluators -------------------------------------

    def _grid(self, name):
        grid = self._cache.get(name)
        if grid is not None:
            return grid
        n = self.n
        if name == "dg1":
            grid = np.empty((n, n, n), dtype=object)
            for i, j, a in np.ndindex(n, n, n):
                grid[i, j, a] = ex.diff(self.metric[i, j], a)
        elif name == "d2g1":
            dg1 = self._grid("dg1")
            grid = np.empty((n, n, n, n), dtype=object)
            for i, j, a, b in np.ndindex(n, n, n, n):
                grid[i, j, a, b] = ex.diff(dg1[i, j, a], b)
        elif name == "dg2":
            grid = np.empty((n, n, n, n), dtype=object)
            for i, j, k, a in np.ndindex(n, n, n, n):
                grid[i, j, k, a] = ex.diff(self.connection[i, j, k], a)
        elif name == "d2g2":
            dg2 = self._grid("dg2")
            grid = np.empty((n, n, n, n, n), dtype=object)
            for idx in np.ndindex(n, n, n, n, n):
                grid[idx] = ex.diff(dg2[idx[:-1]], idx[-1])
        else:
            raise KeyError(name)
        self._cache[name] = grid
        return grid

    def _fn(self, name):
        fn = self._cache.get("fn_" + name)
        if fn is None:
            source = {"g1": self.metric, "g2": self.connection}.get(name)
            if source is None:
                source = self._grid(name)
            fn = ex.compile_grid(source)
            self._cache["fn_" + name] = fn
        return fn

    def _need_metric(self):
        if self.metric is None:
            raise PreconditionError("operation requires a metric (riemannian kind)")

    def metric_at(self, p) -> np.ndarray:
        self._need_metric()
        return self._fn("g1")(p)

    def metric_inv_at(self, p) -> np.ndarray:
        return np.linalg.inv(self.metric_at(p))

    def connection_at(self, p) -> np.ndarray:
        return self._fn("g2")(p)

    def d_metric_at(self, p) -> np.ndarray:
        self._need_metric()
        return self._fn("dg1")(p)

    def d2_metric_at(self, p) -> np.ndarray:
        self._need_metric()
        return self._fn("d2g1")(p)

    def d_connection_at(self, p) -> np.ndarray:
        return self._fn("dg2")(p)

    def d2_connection_at(self, p) -> np.ndarray:
        return self._fn("d2g2")(p)

    # -- sampling ------------------------------------------------------

    def sample_points(self, extra: int = _RANDOM_POINTS, seed: int = _SAMPLE_SEED):
        """Deterministic lattice plus seeded uniform points, both in the box."""
        pts = [self.domain.grid(_GRID_PER_AXIS)]
        if extra:
            rng = np.random.default_rng(seed)
            pts.append(self.domain.uniform(extra, rng))
        return np.concatenate(pts, axis=0)


def _validate_riemannian(obj: GeometricObject):
    g1 = obj._fn("g1")
    for p in obj.sample_points():
        g = g1(p)
        if not np.all(np.isfinite(g)):
            raise GeometryError(f"metric is not finite at {tuple(p)}")
        if np.max(np.abs(g - g.T)) > 1e-9 * (1.0 + np.max(np.abs(g))):
            raise GeometryError(f"metric is not symmetric at {tuple(p)}")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(p) from None


def _validate_connection(obj: GeometricObject):
    g2 = obj._fn("g2")
    for p in obj.sample_points(extra=10):
        G = g2(p)
        if not np.all(np.isfinite(G)):
            raise GeometryError(f"connection is not finite at {tuple(p)}")
        if np.max(np.abs(G - G.swapaxes(1, 2))) > 1e-9 * (1.0 + np.max(np.abs(G))):
            raise GeometryError(f"connection is not symmetric in its lower indices at {tuple(p)}")


def from_metric(metric, domain: Box, base_point, connection=None,
                kind: str = RIEMANNIAN) -> GeometricObject:
    """Build the object from a symmetric metric grid of expressions.

    When `connection` is omitted the companion field defaults to the
    Levi-Civita symbols computed symbolically from the metric; any supplied
    torsion-free connection is accepted instead (objects over the same
    metric may legitimately differ in this block).
    """
    n = domain.n
    if kind == AFFINE:
        if connection is None:
            raise ValueError("affine kind requires an explicit connection grid")
        obj = GeometricObject(n, AFFINE, None, connection, domain, base_point)
        _validate_connection(obj)
        return obj
    metric = _as_expr_grid(metric, (n, n))
    if connection is None:
        connection = _levi_civita(metric)
    obj = GeometricObject(n, RIEMANNIAN, metric, connection, domain, base_point)
    _validate_riemannian(obj)
    _validate_connection(obj)
    return obj


def from_section(s1, s2, domain: Box, base_point,
                 kind: str = RIEMANNIAN) -> GeometricObject:
    """Build the object from a frame section: g1 = s1^T s1, g2 = s1^{-1} s2.

    Left-multiplying the section by a constant orthogonal block leaves the
    result unchanged, which is what makes the construction well defined.
    """
    n = domain.n
    s1 = _as_expr_grid(s1, (n, n))
    s2 = _as_expr_grid(s2, (n, n, n))
    det_fn = ex.compile_grid(np.array([[_expr_det(s1)]], dtype=object))
    inv1 = _expr_inverse(s1)
    metric = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            acc = _ZERO
            for s in range(n):
                acc = acc + s1[s, i] * s1[s, j]
            metric[i, j] = acc
    connection = np.empty((n, n, n), dtype=object)
    for i, j, k in np.ndindex(n, n, n):
        acc = _ZERO
        for s in range(n):
            acc = acc + inv1[i, s] * s2[s, j, k]
        connection[i, j, k] = acc
    obj = GeometricObject(
        n, kind, metric if kind == RIEMANNIAN else None,
        connection, domain, base_point,
    )
    for p in obj.sample_points(extra=10):
        if abs(det_fn(p)[0, 0]) < 1e-12:
            raise GeometryError(f"frame section is singular at {tuple(p)}")
    if kind == RIEMANNIAN:
        _validate_riemannian(obj)
    _validate_connection(obj)
    return obj


def transform_chart(g: GeometricObject, chart, domain: Box = None,
                    base_point=None) -> GeometricObject:
    """Transport `g` through a chart given as source coordinates x(y).

    `chart` lists n expressions for the old coordinates in terms of the new
    variables x1..xn.  Both blocks follow the coset-transport law applied
    pointwise to the chart jet (Jacobian, Hessian), so repeated transports
    compose like the group operation.  `domain`/`base_point` describe the
    new coordinates; they default to the old ones (identity-like charts).
    """
    n = g.n
    chart = [c if isinstance(c, ex.Expr) else ex.Num(c) for c in chart]
    if len(chart) != n:
        raise ValueError("chart must provide one expression per coordinate")
    domain = domain or g.domain
    base_point = g.base_point if base_point is None else np.asarray(base_point, float)

    J = np.empty((n, n), dtype=object)
    H = np.empty((n, n, n), dtype=object)
    for a in range(n):
        for i in range(n):
            J[a, i] = ex.diff(chart[a], i)
            for j in range(n):
                H[a, i, j] = ex.diff(J[a, i], j)

    # precondition checks at sample points: chart invertible, image in old box
    chart_fn = ex.compile_grid(np.array(chart, dtype=object))
    jac_fn = ex.compile_grid(J)
    probe = Box(domain.lo, domain.hi).grid(3)
    for p in probe:
        if abs(np.linalg.det(jac_fn(p))) < 1e-12:
            raise GeometryError(f"chart Jacobian is singular at {tuple(p)}")
        image = chart_fn(p)
        if not g.domain.contains(image, slack=1e-6):
            raise GeometryError(
                f"chart image {tuple(image)} of {tuple(p)} leaves the source box")

    def comp(e):
        return ex.substitute(e, chart)

    Jinv = _expr_inverse(J)
    new_conn = np.empty((n, n, n), dtype=object)
    for i, j, k in np.ndindex(n, n, n):
        acc = _ZERO
        for a in range(n):
            acc = acc + Jinv[i, a] * H[a, j, k]
            for b in range(n):
                for c in range(n):
                    acc = acc + Jinv[i, a] * comp(g.connection[a, b, c]) * J[b, j] * J[c, k]
        new_conn[i, j, k] = acc

    if g.kind == AFFINE:
        obj = GeometricObject(n, AFFINE, None, new_conn, domain, base_point)
        _validate_connection(obj)
        return obj

    new_metric = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            acc = _ZERO
            for a in range(n):
                for b in range(n):
                    acc = acc + comp(g.metric[a, b]) * J[a, i] * J[b, j]
            new_metric[i, j] = acc
    obj = GeometricObject(n, RIEMANNIAN, new_metric, new_conn, domain, base_point)
    _validate_riemannian(obj)
    _validate_connection(obj)
    return obj


def regular_normalization(g: GeometricObject, p) -> Jet2Element:
    """Jet of a quadratic chart that makes the object regular at `p`.

    Transforming through `quadratic_chart(p, jet)` yields metric = identity
    and connection = 0 at the image of `p` (the new origin).  The first
    block is the inverse transposed Cholesky factor of the metric at p; the
    second block cancels the connection.
    """
    p = np.asarray(p, dtype=float)
    if not g.domain.contains(p):
        raise PreconditionError(f"point {tuple(p)} is outside the domain")
    if g.kind == RIEMANNIAN:
        try:
            L = np.linalg.cholesky(g.metric_at(p))
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(p) from None
        b1 = np.linalg.inv(L.T)
    else:
        b1 = np.eye(g.n)
    G = g.connection_at(p)
    b2 = -np.einsum("str,tj,rk->sjk", G, b1, b1)
    return Jet2Element(b1, b2)


def quadratic_chart(p, jet: Jet2Element):
    """Expressions x(y) = p + a1 y + (1/2) a2 y y for the given 2-jet."""
    n = jet.n
    ys = [ex.Var(i) for i in range(n)]
    chart = []
    for a in range(n):
        acc = ex.Num(float(p[a]))
        for i in range(n):
            acc = acc + ex.Num(jet.a1[a, i]) * ys[i]
            for j in range(n):
                acc = acc + ex.Num(0.5 * jet.a2[a, i, j]) * ys[i] * ys[j]
        chart.append(acc)
    return chart


@dataclass(frozen=True)
class Arrow2:
    """A 2-arrow: source and target points with first/second jet blocks."""

    x: tuple
    y: tuple
    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        n = len(x)
        phi1 = np.array(self.phi1, dtype=float)
        phi2 = np.array(self.phi2, dtype=float)
        if phi1.shape != (n, n) or phi2.shape != (n, n, n):
            raise ValueError("arrow blocks have inconsistent shapes")
        if np.linalg.det(phi1) == 0.0:
            raise SingularJetError("arrow first block is singular")
        phi2 = 0.5 * (phi2 + phi2.swapaxes(1, 2))
        phi1.setflags(write=False)
        phi2.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "phi1", phi1)
        object.__setattr__(self, "phi2", phi2)

    @property
    def n(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class MembershipResidual:
    """Max-norm defects of the two structure equations; membership means both
    are below tolerance.  Only the connection part is meaningful for the
    affine kind (the metric part is reported as 0)."""

    metric: float
    connection: float

    def max(self) -> float:
        return max(self.metric, self.connection)


def arrow_membership(g: GeometricObject, arrow: Arrow2) -> MembershipResidual:
    """Residuals of the structure-preservation equations for a 2-arrow.

    Given a first block with zero residuals, the second block is uniquely
    determined, which is why one residual per equation suffices.
    """
    x = np.asarray(arrow.x)
    y = np.asarray(arrow.y)
    for q in (x, y):
        if not g.domain.contains(q):
            raise PreconditionError(f"arrow endpoint {tuple(q)} is outside the domain")
    phi1, phi2 = arrow.phi1, arrow.phi2
    res1 = 0.0
    if g.kind == RIEMANNIAN:
        gx = g.metric_at(x)
        gy = g.metric_at(y)
        res1 = float(np.max(np.abs(gx - np.einsum("ab,ai,bj->ij", gy, phi1, phi1))))
    Gx = g.connection_at(x)
    Gy = g.connection_at(y)
    lhs = np.einsum("ajk,ia->ijk", Gx, phi1)
    rhs = np.einsum("ibc,bj,ck->ijk", Gy, phi1, phi1) + phi2
    res2 = float(np.max(np.abs(lhs - rhs)))
    return MembershipResidual(metric=res1, connection=res2)


def cholesky_frame_exprs(metric) -> np.ndarray:
    """Symbolic upper-triangular frame with frame^T frame = metric.

    Entries are built from the recursive Cholesky formulas, so they are
    valid wherever the metric is positive-definite.
    """
    metric = np.asarray(metric, dtype=object)
    n = metric.shape[0]
    L = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            L[i, j] = _ZERO
    for j in range(n):
        acc = metric[j, j]
        for k in range(j):
            acc = acc - L[j, k] * L[j, k]
        L[j, j] = ex.Call("sqrt", acc)
        for i in range(j + 1, n):
            acc = metric[i, j]
            for k in range(j):
                acc = acc - L[i, k] * L[j, k]
            L[i, j] = acc / L[j, j]
    return L.T.copy()


def frame_jet(g: GeometricObject, x) -> Jet2Element:
    """Cholesky frame section at x: a 2-jet whose coset invariant is g(x)."""
    if g.kind == RIEMANNIAN:
        b1 = np.linalg.cholesky(g.metric_at(x)).T
    else:
        b1 = np.eye(g.n)
    b2 = np.einsum("is,sjk->ijk", b1, g.connection_at(x))
    return Jet2Element(b1, b2)


def frame_arrow(g: GeometricObject, x, y) -> Arrow2:
    """Structure arrow from x to y assembled from the Cholesky frame."""
    j = compose2(inverse2(frame_jet(g, y)), frame_jet(g, x))
    return Arrow2(x=tuple(np.asarray(x, float)), y=tuple(np.asarray(y, float)),
                  phi1=j.a1, phi2=j.a2)
