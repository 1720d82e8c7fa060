"""Reference-element shape functions and quadrature rules.

Shape functions are expressed in barycentric coordinates on the triangle.
Local degree-of-freedom ordering is vertices first, then edge midpoints in
face order: ``[v0, v1, v2]`` for degree 1 and ``[v0, v1, v2, m01, m12, m20]``
for degree 2.  Quadrature weights are stored normalized (summing to one),
with the measure |K| or |f| applied by the caller.
"""

import numpy as np

from .errors import InvalidArgumentError

#: local DoFs lying on local face j = (vertex j, vertex j+1)
FACE_DOFS = {1: [(0, 1), (1, 2), (2, 0)],
             2: [(0, 1, 3), (1, 2, 4), (2, 0, 5)]}

#: Bernstein multi-indices in the ordering geometrically matching the
#: Lagrange points above ((2,0,0) first for degree 2).
BEZIER_MULTI_INDEX = {
    1: [(1, 0, 0), (0, 1, 0), (0, 0, 1)],
    2: [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (0, 1, 1), (1, 0, 1)],
}


def n_local_dofs(degree):
    return (degree + 1) * (degree + 2) // 2


def _check_degree(degree):
    if degree not in (1, 2):
        raise InvalidArgumentError(f"unsupported polynomial degree {degree!r}; expected 1 or 2")


def lagrange_points(degree):
    """Barycentric coordinates of the Lagrange points, local ordering."""
    _check_degree(degree)
    if degree == 1:
        return np.eye(3)
    return np.array([
        [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5],
    ])


def lagrange_basis(degree, bary):
    """Shape values and barycentric gradients at one or more points.

    Parameters
    ----------
    degree : 1 or 2
    bary : (..., 3) barycentric coordinates (summing to one)

    Returns
    -------
    values : (..., nloc)
    dlam : (..., nloc, 3) derivatives with respect to the barycentric
        coordinates; physical gradients follow by the chain rule with the
        element's ``grad_lambda``.
    """
    _check_degree(degree)
    lam = np.asarray(bary, dtype=float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    if degree == 1:
        values = lam.copy()
        dlam = np.broadcast_to(np.eye(3), lam.shape[:-1] + (3, 3)).copy()
        return values, dlam
    values = np.stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ], axis=-1)
    zero = np.zeros_like(l0)
    dlam = np.stack([
        np.stack([4 * l0 - 1, zero, zero], axis=-1),
        np.stack([zero, 4 * l1 - 1, zero], axis=-1),
        np.stack([zero, zero, 4 * l2 - 1], axis=-1),
        np.stack([4 * l1, 4 * l0, zero], axis=-1),
        np.stack([zero, 4 * l2, 4 * l1], axis=-1),
        np.stack([4 * l2, zero, 4 * l0], axis=-1),
    ], axis=-2)
    return values, dlam


def bezier_basis(degree, bary):
    """Bernstein values B_alpha at one or more barycentric points."""
    _check_degree(degree)
    lam = np.asarray(bary, dtype=float)
    vals = []
    from math import factorial
    k = degree
    for alpha in BEZIER_MULTI_INDEX[degree]:
        coef = factorial(k) / (factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2]))
        term = coef * np.ones_like(lam[..., 0])
        for i, p in enumerate(alpha):
            if p:
                term = term * lam[..., i] ** p
        vals.append(term)
    return np.stack(vals, axis=-1)


def bezier_basis_gradients(degree, bary):
    """Barycentric derivatives of the Bernstein basis."""
    _check_degree(degree)
    lam = np.asarray(bary, dtype=float)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    zero = np.zeros_like(l0)
    if degree == 1:
        return np.broadcast_to(np.eye(3), lam.shape[:-1] + (3, 3)).copy()
    return np.stack([
        np.stack([2 * l0, zero, zero], axis=-1),
        np.stack([zero, 2 * l1, zero], axis=-1),
        np.stack([zero, zero, 2 * l2], axis=-1),
        np.stack([2 * l1, 2 * l0, zero], axis=-1),
        np.stack([zero, 2 * l2, 2 * l1], axis=-1),
        np.stack([2 * l2, zero, 2 * l0], axis=-1),
    ], axis=-2)


def shape_values(degree, kind, bary):
    if kind == "lagrange":
        return lagrange_basis(degree, bary)[0]
    if kind == "bezier":
        return bezier_basis(degree, bary)
    raise InvalidArgumentError(f"unknown basis kind {kind!r}")


def shape_dlam(degree, kind, bary):
    if kind == "lagrange":
        return lagrange_basis(degree, bary)[1]
    if kind == "bezier":
        return bezier_basis_gradients(degree, bary)
    raise InvalidArgumentError(f"unknown basis kind {kind!r}")


class QuadratureRule:
    """Pointwise rule with normalized weights.

    Volume rules store barycentric triples in ``points``; the edge rule
    stores abscissae in [0, 1] along the face.  Weights sum to one; the
    caller multiplies by |K| or |f|.
    """

    def __init__(self, points, weights):
        self.points = np.asarray(points, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if abs(self.weights.sum() - 1.0) > 1e-14:
            raise InvalidArgumentError("quadrature weights must sum to one")

    @property
    def n_points(self):
        return len(self.weights)


def volume_rule(degree):
    """Triangle rule used for the volume integrals of a given degree.

    Degree 1 uses the centroid (weight one).  Degree 2 uses the 7-point
    rule exact for quintics: centroid weight 0.225, plus two symmetric
    orbits (a, b, b).
    """
    _check_degree(degree)
    if degree == 1:
        return QuadratureRule([[1 / 3, 1 / 3, 1 / 3]], [1.0])
    pts = [[1 / 3, 1 / 3, 1 / 3]]
    wts = [0.225]
    for a, w in ((0.797426985353087, 0.125939180544827),
                 (0.059715871789770, 0.132394152788506)):
        b = (1.0 - a) / 2.0
        for p in ((a, b, b), (b, a, b), (b, b, a)):
            pts.append(list(p))
            wts.append(w)
    wts = np.asarray(wts)
    wts = wts / wts.sum()  # published digits leave a 1e-15 closure gap
    return QuadratureRule(pts, wts)


def midpoint_volume_rule():
    """Reduced 3-point edge-midpoint rule (exact for quadratics).

    Offered as the cheaper alternative quadrature for the dissipation
    filter terms, which tolerate non-consistent integration.
    """
    return QuadratureRule([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
                          [1 / 3, 1 / 3, 1 / 3])


def edge_rule():
    """Two-point Gauss rule on a face, abscissae mapped from ±1/sqrt(3)."""
    d = 0.5 / np.sqrt(3.0)
    return QuadratureRule([0.5 - d, 0.5 + d], [0.5, 0.5])


def face_point_bary(local_face, s):
    """Barycentric coordinates of abscissa ``s`` on local face j -> j+1."""
    s = np.asarray(s, dtype=float)
    lam = np.zeros(s.shape + (3,))
    lam[..., local_face] = 1.0 - s
    lam[..., (local_face + 1) % 3] = s
    return lam


class BasisTable:
    """Shape values and physical gradients at a fixed point set.

    ``grad_lambda`` is the element's (3, 2) array of barycentric-coordinate
    gradients; the table is then specific to that element's geometry.
    """

    def __init__(self, degree, kind, bary_points, grad_lambda):
        _check_degree(degree)
        self.degree = degree
        self.kind = kind
        self.points = np.asarray(bary_points, dtype=float)
        self.values = shape_values(degree, kind, self.points)
        dlam = shape_dlam(degree, kind, self.points)
        self.gradients = np.einsum("qli,id->qld", dlam, np.asarray(grad_lambda, float))
