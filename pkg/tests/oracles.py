"""Independent numerical oracles used to freeze expected test values.

Everything here deliberately avoids the library's own computation paths:
derivatives are central finite differences of plain evaluations, curvature
comes from the textbook Christoffel/Riemann formulas evaluated numerically,
and jet composition goes through truncated polynomial arithmetic.
"""

import numpy as np


def fd_derivative(f, p, axis, h=1e-6):
    """Central finite difference of a scalar callable at p."""
    p = np.asarray(p, dtype=float)
    e = np.zeros_like(p)
    e[axis] = h
    return (f(p + e) - f(p - e)) / (2.0 * h)


def fd_grad(f, p, h=1e-6):
    return np.array([fd_derivative(f, p, a, h) for a in range(len(p))])


def metric_fn(g):
    """Plain evaluator of a geometric object's metric (no derivative grids)."""
    return lambda p: g.metric_at(p)


def christoffel_fd(metric, p, h=1e-6):
    """Levi-Civita symbols from finite differences of the metric alone.

    metric: callable p -> (n, n) array.  Returns (n, n, n) with layout
    [i, j, k] -> Gamma^i_jk.
    """
    p = np.asarray(p, dtype=float)
    n = len(p)
    g = metric(p)
    ginv = np.linalg.inv(g)
    dg = np.empty((n, n, n))  # dg[a][b][c] = d_c g_ab
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dg[:, :, c] = (metric(p + e) - metric(p - e)) / (2.0 * h)
    gamma = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = 0.0
                for l in range(n):
                    acc += ginv[i, l] * (dg[l, k, j] + dg[l, j, k] - dg[j, k, l])
                gamma[i, j, k] = 0.5 * acc
    return gamma


def riemann_classical(gamma_fn, p, h=1e-5):
    """Classical curvature tensor from a Christoffel evaluator.

    Layout R[i, j, k, l] = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj
    - G^i_lm G^m_kj (so constant curvature K gives
    R[i, j, k, l] = K (d^i_k g_jl - d^i_l g_jk) after lowering nothing).
    """
    p = np.asarray(p, dtype=float)
    n = len(p)
    G = gamma_fn(p)
    dG = np.empty((n, n, n, n))  # dG[i, j, k, c] = d_c G^i_jk
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        dG[:, :, :, c] = (gamma_fn(p + e) - gamma_fn(p - e)) / (2.0 * h)
    R = np.empty((n, n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    R[i, j, k, l] = (dG[i, l, j, k] - dG[i, k, j, l]
                                     + sum(G[i, k, m] * G[m, l, j]
                                           - G[i, l, m] * G[m, k, j]
                                           for m in range(n)))
    return R


def sectional_curvature_2d(metric, p):
    """Gauss curvature of a 2D metric via the classical oracle."""
    gam = lambda q: christoffel_fd(metric, q)
    R = riemann_classical(gam, p)
    g = metric(np.asarray(p, dtype=float))
    # lower the first index: R_1212 = g_1i R^i_212
    r1212 = g[0, 0] * R[0, 1, 0, 1] + g[0, 1] * R[1, 1, 0, 1]
    return r1212 / np.linalg.det(g)


def taylor_coeffs(jet):
    """Polynomial coefficients [c1, c2, c3] of x -> sum c_k x^k from a jet."""
    vals = [jet.a1, jet.a2, getattr(jet, "a3", None)]
    out = [jet.a1, jet.a2 / 2.0]
    if vals[2] is not None:
        out.append(jet.a3 / 6.0)
    return np.array(out)


def compose_taylor(ca, cb):
    """Compose polynomials sum ca_k x^k after sum cb_k x^k, truncated.

    ca, cb are coefficient arrays starting at degree 1; the result is
    truncated to the shorter length.  Implemented by convolution powers so
    that it shares no code with the chain-rule group law.
    """
    order = min(len(ca), len(cb))
    inner = np.zeros(order + 1)
    inner[1:1 + order] = cb[:order]
    power = np.zeros(order + 1)
    power[0] = 1.0
    out = np.zeros(order + 1)
    for k in range(1, order + 1):
        power = np.convolve(power, inner)[: order + 1]
        out += ca[k - 1] * power
    return out[1: order + 1]


def jet_from_coeffs(coeffs, cls):
    """Back from polynomial coefficients to jet coefficients (k! scaling)."""
    facts = [1.0, 2.0, 6.0]
    scaled = [c * facts[i] for i, c in enumerate(coeffs)]
    return cls(*scaled)
