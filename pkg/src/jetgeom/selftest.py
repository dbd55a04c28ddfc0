"""Built-in property suites behind the `selftest` CLI command.

Each suite runs a reduced version of the package's algebraic laws on seeded
random data and counts individual checks.  The space-form calibration suite
doubles as a negative control: corrupting the sign convention makes it (and
only it) fail, which is how the self-test demonstrates it can detect a
broken build.
"""

from dataclasses import dataclass

import numpy as np

from . import curvature as cv
from . import expr as ex
from . import jets as J
from .algebroid import (
    algebroid_membership,
    fiber_basis,
    prolong,
    spencer_bracket,
)
from .geometry import Box, frame_arrow, from_metric

__all__ = ["SuiteResult", "run_selftest", "SUITES"]

_SEED = 20404


@dataclass
class SuiteResult:
    name: str
    checks: int
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


class _Recorder:
    def __init__(self):
        self.checks = 0
        self.failures = []

    def expect(self, condition, message):
        self.checks += 1
        if not condition:
            self.failures.append(message)


def _random_jet2(n, rng):
    while True:
        a1 = rng.standard_normal((n, n))
        if abs(np.linalg.det(a1)) > 0.3:
            break
    return J.Jet2Element(a1, rng.standard_normal((n, n, n)))


def _random_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _jet_close(a, b, tol):
    return (np.max(np.abs(a.a1 - b.a1)) <= tol
            and np.max(np.abs(a.a2 - b.a2)) <= tol)


def suite_group_axioms():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED)
    for n in (1, 2, 3):
        eye = J.identity2(n)
        for _ in range(40):
            a, b, c = (_random_jet2(n, rng) for _ in range(3))
            lhs = J.compose2(J.compose2(a, b), c)
            rhs = J.compose2(a, J.compose2(b, c))
            scale = 1.0 + max(np.max(np.abs(lhs.a2)), np.max(np.abs(rhs.a2)))
            rec.expect(_jet_close(lhs, rhs, 1e-10 * scale), f"associativity n={n}")
            rec.expect(_jet_close(J.compose2(a, J.inverse2(a)), eye, 1e-9),
                       f"right inverse n={n}")
            rec.expect(_jet_close(J.compose2(J.inverse2(a), a), eye, 1e-9),
                       f"left inverse n={n}")
            rec.expect(
                np.max(np.abs(J.project(J.compose2(a, b)) - a.a1 @ b.a1)) <= 1e-10 * scale,
                f"projection homomorphism n={n}")
            rec.expect(
                np.max(np.abs(J.project(J.split_epsilon(a.a1)) - a.a1)) == 0.0,
                f"projection after splitting n={n}")
            h = _random_orthogonal(n, rng)
            moved = J.compose2(J.split_epsilon(h), a)
            Fa = J.coset_invariant(a)
            Fm = J.coset_invariant(moved)
            rec.expect(
                np.max(np.abs(Fa.F1 - Fm.F1)) <= 1e-9
                and np.max(np.abs(Fa.F2 - Fm.F2)) <= 1e-9,
                f"coset invariance n={n}")
            q = J.compose2(moved, J.inverse2(a))
            rec.expect(
                np.max(np.abs(q.a1.T @ q.a1 - np.eye(n))) <= 1e-9
                and np.max(np.abs(q.a2)) <= 1e-8,
                f"coset converse n={n}")
    return rec


def suite_conjugator():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED + 1)
    for n in (1, 2, 3):
        for _ in range(6):
            k0 = rng.standard_normal((n, n, n))
            k0 = 0.5 * (k0 + k0.swapaxes(1, 2))
            pos = J.Jet2Element(np.eye(n), k0)
            neg = J.Jet2Element(np.eye(n), -k0)

            def sigma(b1):
                return J.compose2(pos, J.compose2(J.split_epsilon(b1), neg))

            mats = [rng.standard_normal((n, n)) + 2.0 * np.eye(n) for _ in range(3)]
            k2 = J.recover_conjugator(sigma, mats, lam=2.0)
            k3 = J.recover_conjugator(sigma, mats, lam=3.0)
            rec.expect(np.max(np.abs(k2 - k0)) <= 1e-10 * (1 + np.max(np.abs(k0))),
                       f"conjugator recovery n={n}")
            rec.expect(np.max(np.abs(k2 - k3)) <= 1e-10 * (1 + np.max(np.abs(k0))),
                       f"lambda independence n={n}")
    return rec


def _taylor_compose3(a, b):
    """Oracle: compose cubic Taylor polynomials and read jet coefficients."""
    ca = np.array([a.a1, a.a2 / 2.0, a.a3 / 6.0])
    cb = np.array([b.a1, b.a2 / 2.0, b.a3 / 6.0])
    # coefficients of a(b(x)) up to x^3
    c1 = ca[0] * cb[0]
    c2 = ca[0] * cb[1] + ca[1] * cb[0] ** 2
    c3 = ca[0] * cb[2] + 2.0 * ca[1] * cb[0] * cb[1] + ca[2] * cb[0] ** 3
    return J.Jet3Element1d(c1, 2.0 * c2, 6.0 * c3)


def suite_schwarzian():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED + 2)
    for _ in range(20):
        a, b, c, d = rng.standard_normal(4)
        if abs(c) < 0.2 or abs(b * c - a * d) < 0.2:
            continue
        w = b * c - a * d
        jet = J.Jet3Element1d(w / c**2, -2 * d * w / c**3, 6 * d * d * w / c**4)
        _, s = J.split_schwarzian(jet)
        rec.expect(abs(s) <= 1e-10 * (1 + abs(jet.a3)), "moebius schwarzian zero")
        u = J.Jet3Element1d(*rng.standard_normal(3) + np.array([2.0, 0, 0]))
        v = J.Jet3Element1d(*rng.standard_normal(3) + np.array([2.0, 0, 0]))
        got = J.compose3_1d(u, v)
        want = _taylor_compose3(u, v)
        rec.expect(
            max(abs(got.a1 - want.a1), abs(got.a2 - want.a2), abs(got.a3 - want.a3))
            <= 1e-12 * (1 + abs(want.a3)),
            "composition vs taylor oracle")
        head, s = J.split_schwarzian(u)
        rebuilt = J.compose3_1d(head, J.Jet3Element1d(1.0, 0.0, s / u.a1))
        rec.expect(abs(rebuilt.a3 - u.a3) <= 1e-12 * (1 + abs(u.a3)),
                   "schwarzian factorization")
    return rec


def _poly_field(n, rng):
    comps = []
    for _ in range(n):
        e = ex.Num(rng.uniform(-1, 1))
        for i in range(n):
            e = e + ex.Num(rng.uniform(-1, 1)) * ex.Var(i)
            for j in range(i, n):
                e = e + ex.Num(rng.uniform(-1, 1)) * ex.Var(i) * ex.Var(j)
        comps.append(e)
    return comps


def suite_spencer():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED + 3)
    n = 2
    pts = [rng.uniform(-1, 1, size=n) for _ in range(4)]
    for _ in range(8):
        X = _poly_field(n, rng)
        Y = _poly_field(n, rng)
        jX, jY = prolong(X, 2), prolong(Y, 2)
        br = spencer_bracket(jX, jY)
        rb = spencer_bracket(jY, jX)
        classical = [
            sum((X[a] * ex.diff(Y[i], a) - Y[a] * ex.diff(X[i], a)
                 for a in range(n)), ex.Num(0.0))
            for i in range(n)
        ]
        jbr = prolong(classical, 2)
        for p in pts:
            u, v, w = br.at(p), rb.at(p), jbr.at(p)
            rec.expect((u + v).max_abs() <= 1e-9, "bracket antisymmetry")
            rec.expect((u - w).max_abs() <= 1e-9, "bracket respects prolongation")
    return rec


_METRICS_2D = {
    "euclidean": ("1", "0", "1", (-1.0, -1.0), (1.0, 1.0)),
    "polar-flat": ("1", "0", "x1^2", (0.6, -1.0), (1.5, 1.0)),
    "sphere": ("4/(1+x1^2+x2^2)^2", "0", "4/(1+x1^2+x2^2)^2",
               (-0.8, -0.8), (0.8, 0.8)),
    "poincare": ("4/(1-x1^2-x2^2)^2", "0", "4/(1-x1^2-x2^2)^2",
                 (-0.55, -0.55), (0.55, 0.55)),
    "ellipsoid": ("1", "0", "1+x1^2/2", (-1.0, -1.0), (1.0, 1.0)),
}


def _build_metric(name):
    g11, g12, g22, lo, hi = _METRICS_2D[name]
    grid = [[ex.parse_expr(g11, 2), ex.parse_expr(g12, 2)],
            [ex.parse_expr(g12, 2), ex.parse_expr(g22, 2)]]
    box = Box(lo, hi)
    return from_metric(grid, box, box.center())


def suite_fiber_rank():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED + 4)
    for name in _METRICS_2D:
        g = _build_metric(name)
        for p in g.domain.uniform(5, rng):
            basis = fiber_basis(g, p)
            rec.expect(len(basis) == 3, f"fiber rank on {name}")
            worst = max(algebroid_membership(g, b, p).max() for b in basis)
            rec.expect(worst <= 1e-10, f"fiber membership on {name}")
    return rec


def suite_equivalence():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED + 5)
    for name in _METRICS_2D:
        g = _build_metric(name)
        pts = list(g.domain.uniform(6, rng))
        verdict = cv.constant_curvature_fit(g, pts + list(g.domain.grid(2)))
        n_max = 0.0
        r_max = 0.0
        for p in pts[:4]:
            nc = cv.algebroid_curvature(g, p)
            for b in fiber_basis(g, p):
                n_max = max(n_max, nc.max_on(b.X0, b.X1))
        for p, q in zip(pts[:3], pts[3:]):
            arrow = frame_arrow(g, p, q)
            r_max = max(r_max, cv.groupoid_curvature(g, p, q, arrow.phi1).max_abs())
        if name == "ellipsoid":
            rec.expect(verdict.residual >= 1e-2, "ellipsoid misfit witness")
            rec.expect(max(n_max, r_max) >= 1e-3, "ellipsoid curvature witness")
        else:
            rec.expect(verdict.residual <= 1e-6, f"{name} constant-curvature fit")
            rec.expect(n_max <= 1e-6, f"{name} algebroid curvature vanishes")
            rec.expect(r_max <= 1e-6, f"{name} groupoid curvature vanishes")
    return rec


def suite_calibration():
    rec = _Recorder()
    rng = np.random.default_rng(_SEED + 6)
    expectations = {
        "euclidean": (cv.FLAT, 0.0),
        "polar-flat": (cv.FLAT, 0.0),
        "sphere": (cv.SPHERICAL, 1.0),
        "poincare": (cv.HYPERBOLIC, -1.0),
    }
    for name, (label, c) in expectations.items():
        g = _build_metric(name)
        pts = list(g.domain.uniform(6, rng)) + list(g.domain.grid(2))
        verdict = cv.constant_curvature_fit(g, pts)
        rec.expect(verdict.label == label, f"{name} classified {verdict.label}")
        rec.expect(abs(verdict.c - c) <= 1e-6, f"{name} constant {verdict.c:.3e}")
    return rec


SUITES = (
    ("jet-group-axioms", suite_group_axioms),
    ("conjugator-recovery", suite_conjugator),
    ("schwarzian", suite_schwarzian),
    ("spencer-bracket", suite_spencer),
    ("fiber-rank", suite_fiber_rank),
    ("equivalence", suite_equivalence),
    ("space-form-calibration", suite_calibration),
)


def run_selftest(corrupt_convention: bool = False) -> list:
    """Run every suite; `corrupt_convention` flips the calibrated sign as a
    negative control (the calibration suite must then fail)."""
    results = []
    saved = cv.MODEL_SIGN
    if corrupt_convention:
        cv.MODEL_SIGN = -saved
    try:
        for name, fn in SUITES:
            try:
                rec = fn()
                results.append(SuiteResult(name, rec.checks, rec.failures))
            except Exception as exc:  # a crash counts as a suite failure
                results.append(SuiteResult(name, 0, [f"exception: {exc}"]))
    finally:
        cv.MODEL_SIGN = saved
    return results
