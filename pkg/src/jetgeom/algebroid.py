"""Jet-vector fibers and sections, the Spencer operator and bracket, and the
pointwise linear system cutting out the symmetry algebroid of a geometric
object.

A jet vector of order k stacks blocks ``X0[i] = X^i``, ``X1[i, j] = X^i_j``,
``X2[i, j, k] = X^i_jk`` (symmetric in j, k) and ``X3[i, m, j, k] =
X^i_mjk`` (symmetric in m, j, k).  Fields carry the same blocks with
expression entries over the chart box.
"""

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .errors import MembershipError, PreconditionError, RankDeficiencyError
from .geometry import GeometricObject, MembershipResidual
from .jets import RIEMANNIAN

__all__ = [
    "JetVector", "JetVectorField", "SpencerDefect",
    "prolong", "spencer_operator", "spencer_bracket", "algebraic_bracket",
    "algebroid_membership", "fiber_basis", "stabilizer_fiber",
    "structure_lift", "algebraic_bracket_point", "RANK_TOL",
]

# relative singular-value cutoff for the pointwise nullspace solves
RANK_TOL = 1e-10

_ZERO = ex.Num(0.0)


def _sym_last2(a):
    return 0.5 * (a + a.swapaxes(-1, -2))


def _sym_last3(a):
    acc = np.zeros_like(a)
    for perm in ((1, 2, 3), (1, 3, 2), (2, 1, 3), (2, 3, 1), (3, 1, 2), (3, 2, 1)):
        acc += a.transpose((0,) + perm)
    return acc / 6.0


@dataclass(frozen=True)
class JetVector:
    """Numeric jet of a vector field at a point, truncated at `order`."""

    X0: np.ndarray
    X1: np.ndarray = None
    X2: np.ndarray = None
    X3: np.ndarray = None

    def __post_init__(self):
        X0 = np.array(self.X0, dtype=float)
        n = X0.shape[0]
        object.__setattr__(self, "X0", X0)
        blocks = {"X1": (n, n), "X2": (n, n, n), "X3": (n, n, n, n)}
        seen_none = False
        for name, shape in blocks.items():
            b = getattr(self, name)
            if b is None:
                seen_none = True
                continue
            if seen_none:
                raise ValueError("jet blocks must be contiguous from order 0")
            b = np.array(b, dtype=float)
            if b.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {b.shape}")
            if name == "X2":
                b = _sym_last2(b)
            elif name == "X3":
                b = _sym_last3(b)
            b.setflags(write=False)
            object.__setattr__(self, name, b)
        X0.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X0.shape[0]

    @property
    def order(self) -> int:
        for k, name in ((3, "X3"), (2, "X2"), (1, "X1")):
            if getattr(self, name) is not None:
                return k
        return 0

    def blocks(self):
        out = [self.X0]
        for name in ("X1", "X2", "X3"):
            b = getattr(self, name)
            if b is not None:
                out.append(b)
        return out

    def project(self, order: int) -> "JetVector":
        if order > self.order:
            raise ValueError("cannot project to a higher order")
        names = ("X1", "X2", "X3")
        kept = {name: getattr(self, name) for name in names[:order]}
        return JetVector(self.X0, **kept)

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(b))) for b in self.blocks())

    def __add__(self, other):
        return JetVector(*[a + b for a, b in zip(self.blocks(), other.blocks())])

    def __sub__(self, other):
        return JetVector(*[a - b for a, b in zip(self.blocks(), other.blocks())])

    def __mul__(self, scalar):
        return JetVector(*[float(scalar) * b for b in self.blocks()])

    __rmul__ = __mul__


def _expr_block(grid, shape):
    out = np.empty(shape, dtype=object)
    src = np.asarray(grid, dtype=object)
    if src.shape != shape:
        raise ValueError(f"expected block of shape {shape}, got {src.shape}")
    for idx in np.ndindex(shape):
        e = src[idx]
        out[idx] = e if isinstance(e, ex.Expr) else ex.Num(e)
    return out


@dataclass
class JetVectorField:
    """Jet field with expression entries; immutable by convention."""

    X0: np.ndarray
    X1: np.ndarray = None
    X2: np.ndarray = None
    X3: np.ndarray = None
    _fns: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        X0 = _expr_block(self.X0, (len(self.X0),))
        n = X0.shape[0]
        self.X0 = X0
        shapes = {"X1": (n, n), "X2": (n, n, n), "X3": (n, n, n, n)}
        for name, shape in shapes.items():
            b = getattr(self, name)
            if b is not None:
                setattr(self, name, _expr_block(b, shape))

    @property
    def n(self) -> int:
        return self.X0.shape[0]

    @property
    def order(self) -> int:
        for k, name in ((3, "X3"), (2, "X2"), (1, "X1")):
            if getattr(self, name) is not None:
                return k
        return 0

    def at(self, p) -> JetVector:
        values = {}
        for name in ("X0", "X1", "X2", "X3"):
            grid = getattr(self, name)
            if grid is None:
                continue
            fn = self._fns.get(name)
            if fn is None:
                fn = ex.compile_grid(grid)
                self._fns[name] = fn
            values[name] = fn(p)
        return JetVector(**values)


def prolong(components, order: int = 2) -> JetVectorField:
    """Prolongation of a vector field: blocks are its symbolic derivatives."""
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    X0 = _expr_block(components, (len(components),))
    n = X0.shape[0]
    blocks = {"X0": X0}
    prev = X0
    for name in ("X1", "X2", "X3")[:order]:
        nxt = np.empty(prev.shape + (n,), dtype=object)
        for idx in np.ndindex(prev.shape):
            for a in range(n):
                nxt[idx + (a,)] = ex.diff(prev[idx], a)
        blocks[name] = nxt
        prev = nxt
    return JetVectorField(**blocks)


@dataclass
class SpencerDefect:
    """First-order holonomy defect of an order-3 jet field: expression grids
    ``D1[i, j] = d_j X^i - X^i_j``, ``D2[i, j, k] = d_j X^i_k - X^i_jk`` and
    ``D3[i, m, j, k] = d_m X^i_jk - X^i_mjk``.  Vanishes on prolongations."""

    D1: np.ndarray
    D2: np.ndarray
    D3: np.ndarray

    def at(self, p):
        return tuple(ex.compile_grid(grid)(p) for grid in (self.D1, self.D2, self.D3))

    def max_abs_at(self, p) -> float:
        return max(float(np.max(np.abs(v))) for v in self.at(p))


def spencer_operator(X: JetVectorField) -> SpencerDefect:
    """Holonomy-defect operator on an order-3 jet field."""
    if X.order != 3:
        raise ValueError("the defect operator expects an order-3 field")
    n = X.n
    D1 = np.empty((n, n), dtype=object)
    D2 = np.empty((n, n, n), dtype=object)
    D3 = np.empty((n, n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            D1[i, j] = ex.diff(X.X0[i], j) - X.X1[i, j]
            for k in range(n):
                D2[i, j, k] = ex.diff(X.X1[i, k], j) - X.X2[i, j, k]
                for m in range(n):
                    D3[i, m, j, k] = ex.diff(X.X2[i, j, k], m) - X.X3[i, m, j, k]
    return SpencerDefect(D1, D2, D3)


def spencer_bracket(X: JetVectorField, Y: JetVectorField) -> JetVectorField:
    """Bracket of two order-2 jet fields.

    The component formula is independent of any order-3 lift (the top-order
    terms cancel), is antisymmetric, and commutes with the projections to
    lower order, which is what makes the jet bundle an algebroid.
    """
    if X.order < 2 or Y.order < 2:
        raise ValueError("the bracket expects order-2 fields")
    n = X.n
    Z0 = np.empty((n,), dtype=object)
    Z1 = np.empty((n, n), dtype=object)
    Z2 = np.empty((n, n, n), dtype=object)
    for i in range(n):
        acc = _ZERO
        for a in range(n):
            acc = acc + X.X0[a] * ex.diff(Y.X0[i], a) - Y.X0[a] * ex.diff(X.X0[i], a)
        Z0[i] = acc
        for j in range(n):
            acc = _ZERO
            for a in range(n):
                acc = (acc + X.X1[a, j] * Y.X1[i, a] - Y.X1[a, j] * X.X1[i, a]
                       + X.X0[a] * ex.diff(Y.X1[i, j], a)
                       - Y.X0[a] * ex.diff(X.X1[i, j], a))
            Z1[i, j] = acc
            for k in range(n):
                acc = _ZERO
                for a in range(n):
                    acc = (acc
                           + X.X2[a, j, k] * Y.X1[i, a] + X.X1[a, j] * Y.X2[i, k, a]
                           + X.X1[a, k] * Y.X2[i, a, j]
                           - Y.X2[a, j, k] * X.X1[i, a] - Y.X1[a, j] * X.X2[i, k, a]
                           - Y.X1[a, k] * X.X2[i, a, j]
                           + X.X0[a] * ex.diff(Y.X2[i, j, k], a)
                           - Y.X0[a] * ex.diff(X.X2[i, j, k], a))
                Z2[i, j, k] = acc
    return JetVectorField(X0=Z0, X1=Z1, X2=Z2)


def algebraic_bracket(xi: JetVector, eta: JetVector) -> JetVector:
    """Pointwise bracket of two order-3 jets, landing in order 2.

    Obtained by differentiating the classical vector-field bracket three
    times and replacing derivatives with jet coordinates; no derivatives of
    the inputs appear.
    """
    if xi.order != 3 or eta.order != 3:
        raise ValueError("the algebraic bracket expects order-3 jets")
    a, b = xi, eta
    Z0 = np.einsum("a,ia->i", a.X0, b.X1) - np.einsum("a,ia->i", b.X0, a.X1)
    Z1 = (np.einsum("aj,ia->ij", a.X1, b.X1) + np.einsum("a,iaj->ij", a.X0, b.X2)
          - np.einsum("aj,ia->ij", b.X1, a.X1) - np.einsum("a,iaj->ij", b.X0, a.X2))
    Z2 = (np.einsum("ajk,ia->ijk", a.X2, b.X1)
          + np.einsum("aj,iak->ijk", a.X1, b.X2)
          + np.einsum("ak,iaj->ijk", a.X1, b.X2)
          + np.einsum("a,iajk->ijk", a.X0, b.X3)
          - np.einsum("ajk,ia->ijk", b.X2, a.X1)
          - np.einsum("aj,iak->ijk", b.X1, a.X2)
          - np.einsum("ak,iaj->ijk", b.X1, a.X2)
          - np.einsum("a,iajk->ijk", b.X0, a.X3))
    return JetVector(X0=Z0, X1=Z1, X2=Z2)


# ---------------------------------------------------------------------------
# the pointwise linear system of the symmetry algebroid

def algebroid_membership(g: GeometricObject, X: JetVector, p) -> MembershipResidual:
    """Residuals of the two defining equations at p (connection only for affine)."""
    if X.order < 2:
        raise ValueError("membership expects an order-2 jet")
    res1 = 0.0
    if g.kind == RIEMANNIAN:
        g1 = g.metric_at(p)
        dg1 = g.d_metric_at(p)
        lie = (np.einsum("a,ija->ij", X.X0, dg1)
               + np.einsum("ai,aj->ij", g1, X.X1) + np.einsum("aj,ai->ij", g1, X.X1))
        res1 = float(np.max(np.abs(lie)))
    G = g.connection_at(p)
    dG = g.d_connection_at(p)
    defect = (X.X2
              + np.einsum("iak,aj->ijk", G, X.X1) + np.einsum("iaj,ak->ijk", G, X.X1)
              - np.einsum("ajk,ia->ijk", G, X.X1)
              + np.einsum("a,ijka->ijk", X.X0, dG))
    res2 = float(np.max(np.abs(defect)))
    return MembershipResidual(metric=res1, connection=res2)


def _second_block(g: GeometricObject, X0, X1, p):
    """Solve the top equation for X2 given the lower blocks (the splitting)."""
    G = g.connection_at(p)
    dG = g.d_connection_at(p)
    return -(np.einsum("iak,aj->ijk", G, X1) + np.einsum("iaj,ak->ijk", G, X1)
             - np.einsum("ajk,ia->ijk", G, X1) + np.einsum("a,ijka->ijk", X0, dG))


def _nullspace(A, cols):
    """Orthonormal nullspace basis with a deterministic sign convention."""
    if A.shape[0] == 0:
        basis = np.eye(cols)
    else:
        _, s, vt = np.linalg.svd(A)
        smax = s[0] if s.size else 0.0
        rank = int(np.sum(s > RANK_TOL * max(smax, 1.0)))
        basis = vt[rank:].T
    out = []
    for col in range(basis.shape[1]):
        v = basis[:, col].copy()
        big = np.abs(v) > 1e-9 * np.max(np.abs(v))
        first = int(np.argmax(big))
        if v[first] < 0:
            v = -v
        out.append(v)
    return out


def _first_equation_matrix(g: GeometricObject, p, with_x0=True):
    n = g.n
    g1 = g.metric_at(p)
    dg1 = g.d_metric_at(p)
    rows = []
    ncols = (n if with_x0 else 0) + n * n
    for i in range(n):
        for j in range(i, n):
            row = np.zeros(ncols)
            off = 0
            if with_x0:
                row[:n] = dg1[i, j, :]
                off = n
            for a in range(n):
                row[off + a * n + j] += g1[a, i]
                row[off + a * n + i] += g1[a, j]
            rows.append(row)
    return np.array(rows)


def fiber_basis(g: GeometricObject, p) -> list[JetVector]:
    """Orthonormal basis (in the coefficient norm on (X0, X1)) of the fiber.

    The metric equation is solved for the pair (X0, X1); the top block is
    then determined by the splitting.  The fiber has dimension n(n+1)/2 for
    any pointwise positive-definite metric; a different computed dimension
    signals a degenerate metric and raises RankDeficiencyError.  The affine
    kind leaves (X0, X1) free.
    """
    n = g.n
    p = np.asarray(p, dtype=float)
    if not g.domain.contains(p):
        raise PreconditionError(f"point {tuple(p)} is outside the domain")
    if g.kind == RIEMANNIAN:
        A = _first_equation_matrix(g, p)
        vecs = _nullspace(A, n + n * n)
        expected = n * (n + 1) // 2
        if len(vecs) != expected:
            raise RankDeficiencyError(
                f"fiber dimension {len(vecs)} != {expected} at {tuple(p)}")
    else:
        vecs = [np.eye(n + n * n)[:, c] for c in range(n + n * n)]
    out = []
    for v in vecs:
        X0 = v[:n]
        X1 = v[n:].reshape(n, n)
        out.append(JetVector(X0=X0, X1=X1, X2=_second_block(g, X0, X1, p)))
    return out


def stabilizer_fiber(g: GeometricObject, p) -> list[JetVector]:
    """Sub-basis of the fiber with vanishing vector part.

    Has dimension n(n-1)/2 for the riemannian kind; in regular coordinates
    at p the matrix blocks are skew and the top blocks vanish.
    """
    n = g.n
    p = np.asarray(p, dtype=float)
    if not g.domain.contains(p):
        raise PreconditionError(f"point {tuple(p)} is outside the domain")
    if g.kind == RIEMANNIAN:
        A = _first_equation_matrix(g, p, with_x0=False)
        vecs = _nullspace(A, n * n)
        expected = n * (n - 1) // 2
        if len(vecs) != expected:
            raise RankDeficiencyError(
                f"stabilizer dimension {len(vecs)} != {expected} at {tuple(p)}")
    else:
        vecs = [np.eye(n * n)[:, c] for c in range(n * n)]
    out = []
    zero = np.zeros(n)
    for v in vecs:
        X1 = v.reshape(n, n)
        out.append(JetVector(X0=zero, X1=X1, X2=_second_block(g, zero, X1, p)))
    return out


def structure_lift(g: GeometricObject, X: JetVector, p) -> JetVector:
    """Deterministic order-3 lift of a fiber element.

    The top block is obtained by formally differentiating the equation that
    determines X2, so the lift uses only pointwise data of g at p.
    """
    G = g.connection_at(p)
    dG = g.d_connection_at(p)
    d2G = g.d2_connection_at(p)
    X0, X1, X2 = X.X0, X.X1, X.X2
    X3 = -(np.einsum("iakm,aj->imjk", dG, X1) + np.einsum("iak,amj->imjk", G, X2)
           + np.einsum("iajm,ak->imjk", dG, X1) + np.einsum("iaj,amk->imjk", G, X2)
           - np.einsum("ajkm,ia->imjk", dG, X1) - np.einsum("ajk,ima->imjk", G, X2)
           + np.einsum("am,ijka->imjk", X1, dG) + np.einsum("a,ijkam->imjk", X0, d2G))
    return JetVector(X0=X0, X1=X1, X2=X2, X3=X3)


def algebraic_bracket_point(xi: JetVector, eta: JetVector, g: GeometricObject,
                            p, tol: float = 1e-10) -> JetVector:
    """Bracket of two fiber elements at p through their structure lifts.

    Purely pointwise: both inputs must satisfy the membership equations at p
    (checked against `tol`), their order-3 lifts come from `structure_lift`,
    and the result is the algebraic bracket of the lifts.
    """
    for name, jet in (("first", xi), ("second", eta)):
        res = algebroid_membership(g, jet, p)
        if res.max() > tol:
            raise MembershipError(
                f"{name} argument violates the fiber equations at {tuple(p)}: "
                f"residual {res.max():.3e}")
    return algebraic_bracket(structure_lift(g, xi, p), structure_lift(g, eta, p))
