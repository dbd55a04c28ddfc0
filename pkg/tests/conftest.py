import numpy as np
import pytest

from jetgeom import Box, from_metric, parse_expr, prolong

DATA = __file__.rsplit("/", 1)[0] + "/data"


def metric_object(entries, lo, hi, base=None, n=2):
    grid = [[parse_expr(e, n) for e in row] for row in entries]
    box = Box(lo, hi)
    return from_metric(grid, box, box.center() if base is None else base)


_SPHERE = "4/(1+x1^2+x2^2)^2"
_SPHERE3 = "4/(1+x1^2+x2^2+x3^2)^2"
_POINCARE = "4/(1-x1^2-x2^2)^2"
_POINCARE3 = "4/(1-x1^2-x2^2-x3^2)^2"


@pytest.fixture(scope="session")
def euclidean2():
    return metric_object([["1", "0"], ["0", "1"]], (-1.2, -1.2), (1.2, 1.2))


@pytest.fixture(scope="session")
def polar2():
    return metric_object([["1", "0"], ["0", "x1^2"]], (0.6, -1.0), (1.5, 1.0))


@pytest.fixture(scope="session")
def sphere2():
    return metric_object([[_SPHERE, "0"], ["0", _SPHERE]], (-1.1, -1.1), (1.1, 1.1))


@pytest.fixture(scope="session")
def poincare2():
    return metric_object([[_POINCARE, "0"], ["0", _POINCARE]],
                         (-0.55, -0.55), (0.55, 0.55))


@pytest.fixture(scope="session")
def ellipsoid2():
    return metric_object([["1", "0"], ["0", "1+x1^2/2"]], (-1.0, -1.0), (1.0, 1.0))


@pytest.fixture(scope="session")
def metrics2(euclidean2, polar2, sphere2, poincare2, ellipsoid2):
    return {
        "euclidean": euclidean2,
        "polar-flat": polar2,
        "sphere": sphere2,
        "poincare": poincare2,
        "ellipsoid": ellipsoid2,
    }


def _diag3(entries, lo, hi):
    grid = [[entries[i] if i == j else "0" for j in range(3)] for i in range(3)]
    return metric_object(grid, lo, hi, n=3)


@pytest.fixture(scope="session")
def metrics3():
    return {
        "euclidean": _diag3(["1", "1", "1"], (-1, -1, -1), (1, 1, 1)),
        "polar-flat": _diag3(["1", "x1^2", "1"], (0.6, -1, -1), (1.5, 1, 1)),
        "sphere": metric_object(
            [[_SPHERE3 if i == j else "0" for j in range(3)] for i in range(3)],
            (-0.7, -0.7, -0.7), (0.7, 0.7, 0.7), n=3),
        "poincare": metric_object(
            [[_POINCARE3 if i == j else "0" for j in range(3)] for i in range(3)],
            (-0.5, -0.5, -0.5), (0.5, 0.5, 0.5), n=3),
        "ellipsoid": _diag3(["1", "1+x1^2/2", "1+x2^2/2"], (-1, -1, -1), (1, 1, 1)),
    }


@pytest.fixture(scope="session")
def sphere_killing_fields(sphere2):
    """The three independent isometry generators in the stereographic chart."""
    comps = {
        "J": ["-x2", "x1"],
        "V": ["(1+x1^2-x2^2)/2", "x1*x2"],
        "W": ["x1*x2", "(1-x1^2+x2^2)/2"],
    }
    return {k: prolong([parse_expr(c, 2) for c in v], 2) for k, v in comps.items()}


def interior_points(g, count, seed=0):
    """Seeded points strictly inside the domain (margin keeps flows inside)."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(g.domain.lo)
    hi = np.asarray(g.domain.hi)
    pad = 0.15 * (hi - lo)
    return lo + pad + (hi - lo - 2 * pad) * rng.random((count, g.n))
