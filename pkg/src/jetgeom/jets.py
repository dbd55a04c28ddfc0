"""Arithmetic in truncated jet groups of local diffeomorphisms fixing a point.

Elements of the second-order group carry a first-jet matrix block and a
second-jet array block symmetric in its lower index pair; composition is
the chain rule truncated at order two.  The orthogonal subgroup splits in
via ``a -> (a, 0)``, and the right cosets of that split image are the
fibers of the invariant ``F = (a1^T a1, a1^{-1} a2)``, which is what turns
frame sections into metric-plus-connection data downstream.

The scalar third-order group is included for the one-dimensional splitting
whose kernel coordinate is the Schwarzian derivative.
"""

from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

from .errors import SingularJetError, VerificationError

__all__ = [
    "RIEMANNIAN", "AFFINE",
    "Jet2Element", "CosetInvariant", "Jet3Element1d",
    "identity2", "compose2", "inverse2", "project", "split_epsilon",
    "coset_invariant", "coset_transport", "recover_conjugator",
    "compose3_1d", "split_schwarzian",
]

RIEMANNIAN = "riemannian"
AFFINE = "affine"


def _frozen_array(a, shape=None):
    out = np.array(a, dtype=float)
    if shape is not None and out.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Jet2Element:
    """Second-order jet: matrix block `a1` (n,n) and array block `a2` (n,n,n).

    `a2` is symmetrized over its last two indices at construction; the
    group operation preserves that symmetry only for symmetric inputs.
    """

    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1 = np.array(self.a1, dtype=float)
        if a1.ndim != 2 or a1.shape[0] != a1.shape[1]:
            raise ValueError(f"a1 must be square, got shape {a1.shape}")
        n = a1.shape[0]
        if np.linalg.det(a1) == 0.0:
            raise SingularJetError("first-jet block is singular")
        a2 = np.array(self.a2, dtype=float)
        if a2.shape != (n, n, n):
            raise ValueError(f"a2 must have shape {(n, n, n)}, got {a2.shape}")
        a2 = 0.5 * (a2 + a2.swapaxes(1, 2))
        a1.setflags(write=False)
        a2.setflags(write=False)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def n(self) -> int:
        return self.a1.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Jet2Element):
            return NotImplemented
        return np.array_equal(self.a1, other.a1) and np.array_equal(self.a2, other.a2)


@dataclass(frozen=True)
class CosetInvariant:
    """Value of the coset map: `F1 = a1^T a1` (omitted for the affine kind)
    and `F2 = a1^{-1} a2`, symmetric in its lower index pair."""

    F2: np.ndarray
    F1: np.ndarray | None = None
    kind: str = RIEMANNIAN

    def __post_init__(self):
        F2 = _frozen_array(self.F2)
        object.__setattr__(self, "F2", F2)
        if self.kind == AFFINE:
            object.__setattr__(self, "F1", None)
        else:
            if self.F1 is None:
                raise ValueError("riemannian invariant requires the F1 block")
            object.__setattr__(self, "F1", _frozen_array(self.F1, F2.shape[1:]))

    @property
    def n(self) -> int:
        return self.F2.shape[0]


def identity2(n: int) -> Jet2Element:
    return Jet2Element(np.eye(n), np.zeros((n, n, n)))


def compose2(a: Jet2Element, b: Jet2Element) -> Jet2Element:
    """Chain-rule product: (a1 b1, a1 b2 + a2 (b1)^2)."""
    c1 = a.a1 @ b.a1
    c2 = np.einsum("is,sjk->ijk", a.a1, b.a2) \
        + np.einsum("ist,sj,tk->ijk", a.a2, b.a1, b.a1)
    return Jet2Element(c1, c2)


def inverse2(a: Jet2Element) -> Jet2Element:
    """Group inverse: (a1^{-1}, -a1^{-1} a2 (a1^{-1})^2)."""
    inv1 = np.linalg.inv(a.a1)
    inv2 = -np.einsum("is,str,tj,rk->ijk", inv1, a.a2, inv1, inv1)
    return Jet2Element(inv1, inv2)


def project(a: Jet2Element) -> np.ndarray:
    """Projection to the first-order group; a homomorphism."""
    return np.array(a.a1)


def split_epsilon(a1) -> Jet2Element:
    """Homomorphic splitting of the jet projection: a1 -> (a1, 0)."""
    a1 = np.asarray(a1, dtype=float)
    n = a1.shape[0]
    return Jet2Element(a1, np.zeros((n, n, n)))


def coset_invariant(a: Jet2Element, kind: str = RIEMANNIAN) -> CosetInvariant:
    """Coset map F(a) = (a1^T a1, a1^{-1} a2); the affine kind keeps only F2."""
    inv1 = np.linalg.inv(a.a1)
    F2 = np.einsum("is,sjk->ijk", inv1, a.a2)
    if kind == AFFINE:
        return CosetInvariant(F2=F2, kind=AFFINE)
    return CosetInvariant(F2=F2, F1=a.a1.T @ a.a1)


def coset_transport(Fa: CosetInvariant, b: Jet2Element) -> CosetInvariant:
    """F(ab) computed from F(a) and b alone.

    The two blocks transform as
        F1(ab) = b1^T F1(a) b1
        F2(ab) = b1^{-1} b2 + b1^{-1} F2(a) (b1)^2
    and the assignment satisfies the group law in b.
    """
    binv = np.linalg.inv(b.a1)
    F2 = np.einsum("is,sjk->ijk", binv, b.a2) \
        + np.einsum("is,str,tj,rk->ijk", binv, Fa.F2, b.a1, b.a1)
    if Fa.kind == AFFINE:
        return CosetInvariant(F2=F2, kind=AFFINE)
    return CosetInvariant(F2=F2, F1=b.a1.T @ Fa.F1 @ b.a1)


def recover_conjugator(
    sigma: Callable[[np.ndarray], Jet2Element],
    samples: Iterable[np.ndarray],
    lam: float = 2.0,
    tol: float = 1e-10,
) -> np.ndarray:
    """Recover the kernel element conjugating the standard splitting into `sigma`.

    For any homomorphic splitting there is a kernel element k with
    ``sigma(b) = (I, k) (b, 0) (I, -k)``, and k is produced from a single
    probe at a scalar matrix: ``k = sigma(lam I).a2 / (lam^2 - lam)``,
    independently of the admissible lam.  The claimed conjugation identity
    is then verified on every sample; a failure means `sigma` is not a
    splitting and raises VerificationError.
    """
    lam = float(lam)
    if lam in (0.0, 1.0):
        raise ValueError("lam must differ from 0 and 1")
    samples = [np.asarray(b, dtype=float) for b in samples]
    if not samples:
        raise ValueError("at least one sample matrix is required")
    n = samples[0].shape[0]
    probe = sigma(lam * np.eye(n))
    k = probe.a2 / (lam * lam - lam)
    pos = Jet2Element(np.eye(n), k)
    neg = Jet2Element(np.eye(n), -k)
    for b in samples:
        expected = compose2(pos, compose2(split_epsilon(b), neg))
        got = sigma(b)
        err = max(
            np.max(np.abs(got.a1 - expected.a1)),
            np.max(np.abs(got.a2 - expected.a2)),
        )
        scale = 1.0 + np.max(np.abs(expected.a2))
        if err > tol * scale:
            raise VerificationError(
                f"sigma is not a splitting conjugate: residual {err:.3e} "
                f"exceeds {tol:.1e} on a sample"
            )
    return k


@dataclass(frozen=True)
class Jet3Element1d:
    """Third-order scalar jet (a1, a2, a3) with a1 != 0."""

    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        if self.a1 == 0.0:
            raise SingularJetError("first-jet coefficient must be nonzero")
        for name in ("a1", "a2", "a3"):
            object.__setattr__(self, name, float(getattr(self, name)))


def compose3_1d(a: Jet3Element1d, b: Jet3Element1d) -> Jet3Element1d:
    """Chain-rule product truncated at order three."""
    return Jet3Element1d(
        a.a1 * b.a1,
        a.a1 * b.a2 + a.a2 * b.a1 ** 2,
        a.a1 * b.a3 + 3.0 * a.a2 * b.a1 * b.a2 + a.a3 * b.a1 ** 3,
    )


def split_schwarzian(a: Jet3Element1d) -> tuple[Jet3Element1d, float]:
    """Split a scalar 3-jet into its second-order head and Schwarzian part.

    Returns ``(head, s)`` with ``head = (a1, a2, (3/2) a2^2 / a1)`` (the
    splitting image of the 2-jet) and ``s = a3 - (3/2) a2^2 / a1``, which
    vanishes exactly on jets of Moebius maps.  The factorization is
    ``a = head o (1, 0, s/a1)``; the kernel coordinate s/a1 is the
    classical Schwarzian derivative of the underlying map at the point.
    """
    h3 = 1.5 * a.a2 ** 2 / a.a1
    head = Jet3Element1d(a.a1, a.a2, h3)
    return head, a.a3 - h3
