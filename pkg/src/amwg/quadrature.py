"""Quadrature rules on triangles and edges.

Rules are expressed in barycentric coordinates with weights normalised to
sum to one, so an integral over a triangle is ``area * sum(w * f(x_q))``.
"""
import numpy as np


def _strang_fix_6():
    s10 = np.sqrt(10.0)
    r = np.sqrt(38.0 - 44.0 * np.sqrt(0.4))
    a1 = (8.0 - s10 + r) / 18.0
    a2 = (8.0 - s10 - r) / 18.0
    q = np.sqrt(213125.0 - 53320.0 * s10)
    w1 = (620.0 + q) / 3720.0
    w2 = (620.0 - q) / 3720.0
    pts = []
    for a in (a1, a2):
        b = 1.0 - 2.0 * a
        pts += [(b, a, a), (a, b, a), (a, a, b)]
    return np.array(pts), np.array([w1] * 3 + [w2] * 3)


#: symmetric 6-point rule, exact for polynomials of degree <= 4
TRI6_BARY, TRI6_WEIGHTS = _strang_fix_6()


def collapsed_gauss(n):
    """Conical product rule on the reference triangle with ``n*n`` points.

    Gauss-Legendre in both directions of the Duffy map ``(s, t) ->
    (s, t(1-s))``; exact for total degree ``2n - 2``. Returned in the same
    barycentric/normalised-weight form as :data:`TRI6_BARY`.
    """
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    s, t = np.meshgrid(g, g, indexing="ij")
    ws, wt = np.meshgrid(w, w, indexing="ij")
    x = s.ravel()
    y = (t * (1.0 - s)).ravel()
    weights = (ws * wt * (1.0 - s)).ravel() * 2.0
    bary = np.column_stack([1.0 - x - y, x, y])
    return bary, weights


def edge_gauss(n=2):
    """Gauss-Legendre on [0, 1]: returns (parameters, weights summing to 1)."""
    g, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (g + 1.0), 0.5 * w


def triangle_points(vertices, triangles, bary):
    """Physical quadrature points, shape (nt, nq, 2)."""
    corners = vertices[triangles]  # (nt, 3, 2)
    return np.einsum("qi,tid->tqd", bary, corners)
