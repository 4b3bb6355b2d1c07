"""Quadrature rules: degree-6 Dunavant triangle rule, 4-point Gauss edges.

The triangle rule is exact for all polynomial integrands appearing in the
quadratic-velocity / linear-pressure forms (products up to degree 6); the
edge rule is exact to degree 7.
"""

import numpy as np

# 12-point symmetric rule, degree of exactness 6.  Barycentric orbit data;
# weights are normalized to sum to 1 and scaled by the reference area 1/2.
_ORBIT_3 = [
    (0.063089014491502228340331602870819, 0.050844906370206816920936809106869),
    (0.249286745170910421291638553107019, 0.116786275726379366046164695772469),
]
_ORBIT_6 = [
    (0.310352451033784405416607733956552,
     0.053145049844816947353249671631398,
     0.082851075618373575193553456420442),
]


def _triangle_rule():
    bary, weights = [], []
    for a, w in _ORBIT_3:
        c = 1.0 - 2.0 * a
        for perm in ((a, a, c), (a, c, a), (c, a, a)):
            bary.append(perm)
            weights.append(w)
    for a, b, w in _ORBIT_6:
        c = 1.0 - a - b
        for perm in ((a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)):
            bary.append(perm)
            weights.append(w)
    bary = np.asarray(bary)
    weights = 0.5 * np.asarray(weights)  # reference triangle area
    points = bary[:, 1:]  # (xi, eta) with lambda = (1 - xi - eta, xi, eta)
    return points, weights, bary


TRI_POINTS, TRI_WEIGHTS, TRI_BARY = _triangle_rule()

# 4-point Gauss-Legendre on [0, 1] (degree 7).
_gx, _gw = np.polynomial.legendre.leggauss(4)
EDGE_POINTS = 0.5 * (_gx + 1.0)
EDGE_WEIGHTS = 0.5 * _gw


def p2_values(points) -> np.ndarray:
    """Quadratic Lagrange basis at reference points; nodes are the three
    vertices followed by the midpoints of edges (0,1), (1,2), (2,0)."""
    points = np.atleast_2d(points)
    l0 = 1.0 - points[:, 0] - points[:, 1]
    l1, l2 = points[:, 0], points[:, 1]
    return np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ])


def p2_gradients(points) -> np.ndarray:
    """Reference gradients of the quadratic basis, shape (nq, 6, 2)."""
    points = np.atleast_2d(points)
    l0 = 1.0 - points[:, 0] - points[:, 1]
    l1, l2 = points[:, 0], points[:, 1]
    g = np.empty((len(points), 6, 2))
    g[:, 0, 0] = 1 - 4 * l0
    g[:, 0, 1] = 1 - 4 * l0
    g[:, 1, 0] = 4 * l1 - 1
    g[:, 1, 1] = 0.0
    g[:, 2, 0] = 0.0
    g[:, 2, 1] = 4 * l2 - 1
    g[:, 3, 0] = 4 * (l0 - l1)
    g[:, 3, 1] = -4 * l1
    g[:, 4, 0] = 4 * l2
    g[:, 4, 1] = 4 * l1
    g[:, 5, 0] = -4 * l2
    g[:, 5, 1] = 4 * (l0 - l2)
    return g


def p1_values(points) -> np.ndarray:
    points = np.atleast_2d(points)
    return np.column_stack([1.0 - points[:, 0] - points[:, 1], points[:, 0], points[:, 1]])


def edge_p2_values(s) -> np.ndarray:
    """P2 trace basis on an edge: endpoints then midpoint, parameter in [0,1]."""
    s = np.atleast_1d(s)
    return np.column_stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)])


def edge_p2_derivs(s) -> np.ndarray:
    s = np.atleast_1d(s)
    return np.column_stack([4 * s - 3, 4 * s - 1, 4 - 8 * s])
