import numpy as np
import pytest

from rdentropy import basis
from rdentropy.errors import InvalidArgumentError


def bary_monomial_integral(a, b, c):
    # exact integral of lam1^a lam2^b lam3^c over the unit right triangle
    from math import factorial
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 2)


def test_p1_values_at_centroid():
    vals, _ = basis.lagrange_basis(1, [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(vals, [1 / 3, 1 / 3, 1 / 3], atol=1e-15)


def test_p2_vertex_shape_at_centroid():
    vals, _ = basis.lagrange_basis(2, [1 / 3, 1 / 3, 1 / 3])
    assert abs(vals[0] - (-1 / 9)) < 1e-15


def test_lagrange_kronecker_property():
    for deg in (1, 2):
        pts = basis.lagrange_points(deg)
        vals, _ = basis.lagrange_basis(deg, pts)
        assert np.allclose(vals, np.eye(len(pts)), atol=1e-14)


def test_unsupported_degree():
    with pytest.raises(InvalidArgumentError):
        basis.lagrange_basis(3, [1 / 3, 1 / 3, 1 / 3])
    with pytest.raises(InvalidArgumentError):
        basis.volume_rule(0)


def test_bezier_vertex_and_centroid():
    vals = basis.bezier_basis(2, [1.0, 0.0, 0.0])
    assert np.allclose(vals, [1, 0, 0, 0, 0, 0], atol=1e-15)
    vals = basis.bezier_basis(2, [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(vals[:3], 1 / 9, atol=1e-15)
    assert np.allclose(vals[3:], 2 / 9, atol=1e-15)


def test_bezier_positive_inside():
    rng = np.random.default_rng(3)
    w = rng.dirichlet(np.ones(3), size=100)
    vals = basis.bezier_basis(2, w)
    assert (vals >= 0).all()
    assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("kind", ["lagrange", "bezier"])
@pytest.mark.parametrize("degree", [1, 2])
def test_partition_of_unity_at_quadrature(kind, degree):
    rule = basis.volume_rule(degree)
    vals = basis.shape_values(degree, kind, rule.points)
    dlam = basis.shape_dlam(degree, kind, rule.points)
    assert np.abs(vals.sum(axis=-1) - 1.0).max() < 1e-13
    # gradient sum is zero for any grad_lambda since sum of dlam rows is
    # constant in lam; check via a random affine map
    rng = np.random.default_rng(0)
    grad_lambda = rng.normal(size=(3, 2))
    grad_lambda[2] = -grad_lambda[0] - grad_lambda[1]  # rows sum to zero
    g = np.einsum("qli,id->qld", dlam, grad_lambda)
    assert np.abs(g.sum(axis=1)).max() < 1e-13


def test_volume_rule_weights():
    r = basis.volume_rule(2)
    assert r.n_points == 7
    assert abs(0.225 + 3 * 0.125939180544827 + 3 * 0.132394152788506 - 1.0) < 1e-15
    assert abs(r.weights.sum() - 1.0) < 1e-15
    assert (r.points >= 0).all() and (r.points <= 1).all()


def test_volume_rule_degree5_exact():
    r = basis.volume_rule(2)
    for a in range(6):
        for b in range(6 - a):
            for c in range(6 - a - b):
                if a + b + c > 5:
                    continue
                quad = 0.5 * np.sum(r.weights * np.prod(r.points ** [a, b, c], axis=1))
                assert abs(quad - bary_monomial_integral(a, b, c)) < 1e-14


def test_volume_rule_specific_monomial():
    # lam1^2 lam2^2 lam3 over the unit right triangle
    r = basis.volume_rule(2)
    quad = 0.5 * np.sum(r.weights * r.points[:, 0] ** 2 * r.points[:, 1] ** 2 * r.points[:, 2])
    assert abs(quad - 1 / 1260) < 1e-14


def test_centroid_rule_constant():
    r = basis.volume_rule(1)
    area = 0.37
    assert abs(area * np.sum(r.weights * 1.0) - area) < 1e-15


def test_edge_rule_cubic_exact_quartic_not():
    r = basis.edge_rule()
    cubic = np.sum(r.weights * r.points ** 3)
    assert abs(cubic - 0.25) < 1e-15
    quartic = np.sum(r.weights * r.points ** 4)
    assert abs(quartic - 7 / 36) < 1e-15
    assert abs(quartic - 0.2) > 1e-3
    length = 2.5
    assert abs(length * np.sum(r.weights) - length) < 1e-15


def test_midpoint_rule_quadratic_exact():
    r = basis.midpoint_volume_rule()
    for a in range(3):
        for b in range(3 - a):
            c = 2 - a - b
            quad = 0.5 * np.sum(r.weights * np.prod(r.points ** [a, b, c], axis=1))
            assert abs(quad - bary_monomial_integral(a, b, c)) < 1e-15


def test_lagrange_bezier_span_same_space():
    # interpolating a quadratic with either basis gives the same function
    rng = np.random.default_rng(7)
    coef = rng.normal(size=6)

    def quad(lam):
        x, y = lam[..., 0], lam[..., 1]
        return (coef[0] + coef[1] * x + coef[2] * y + coef[3] * x * y
                + coef[4] * x ** 2 + coef[5] * y ** 2)

    pts = basis.lagrange_points(2)
    nodal = quad(pts)
    bez_at_nodes = basis.bezier_basis(2, pts)
    ctrl = np.linalg.solve(bez_at_nodes, nodal)
    sample = rng.dirichlet(np.ones(3), size=20)
    lag_vals = basis.shape_values(2, "lagrange", sample) @ nodal
    bez_vals = basis.shape_values(2, "bezier", sample) @ ctrl
    assert np.abs(lag_vals - bez_vals).max() < 1e-12


def test_basis_table_physical_gradients():
    # unit right triangle: grad lambda known in closed form
    grad_lambda = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    table = basis.BasisTable(1, "lagrange", basis.volume_rule(1).points, grad_lambda)
    assert np.allclose(table.gradients[0], grad_lambda)
    assert np.abs(table.gradients.sum(axis=1)).max() < 1e-14
