import numpy as np
import pytest

from rdentropy import problems
from rdentropy.errors import DomainError, InvalidArgumentError

# frozen values of the characteristics root, cross-checked with an
# independent bracketing solve (scipy brentq, xtol 1e-15)
ORACLE_POINTS = [
    ((0.25, 0.50), -0.24280736240747441),
    ((0.50, 0.25), -0.6582922850747256),
    ((0.70, 0.90), -0.2744413731016389),
    ((1.00, 1.00), -0.4184225974050667),
    ((0.37, 0.62), -0.23962557510838106),
]


def sample_states(problem, n=20, seed=11):
    rng = np.random.default_rng(seed)
    lo, hi = problem.flux.admissible_range
    lo = max(lo, -2.0) + 0.05
    hi = min(hi, 2.5)
    return rng.uniform(lo, hi, n)


def fd(fn, u, eps=1e-6):
    return (fn(u + eps) - fn(u - eps)) / (2 * eps)


@pytest.mark.parametrize("name", ["sqrt_advect", "sinh_steady", "sinh_burgers"])
def test_entropy_pair_battery(name):
    p = problems.make_problem(name)
    states = sample_states(p)
    ent, flux = p.entropy, p.flux
    # g_j' = V f_j'
    gp = fd(ent.g, states)
    want = ent.V(states)[:, None] * fd(flux.f, states)
    assert np.abs(gp - want).max() < 1e-6 * (1 + np.abs(want).max())
    # d theta_j / dV = f_j  (V = u for the scalar pairs)
    tp = fd(ent.theta, states)
    assert np.abs(tp - flux.f(states)).max() < 1e-6 * (1 + np.abs(flux.f(states)).max())
    # theta = V f - g
    direct = ent.V(states)[:, None] * flux.f(states) - ent.g(states)
    assert np.abs(direct - ent.theta(states)).max() < 1e-12
    # U convex
    upp = (ent.U(states + 1e-4) - 2 * ent.U(states) + ent.U(states - 1e-4)) / 1e-8
    assert (upp > 0).all()
    # flux derivative check
    ap = fd(flux.f, states)
    assert np.abs(ap - flux.a(states)).max() < 1e-6 * (1 + np.abs(flux.a(states)).max())


def test_llf_consistency_and_upwind_limit():
    p = problems.make_problem("sinh_steady")
    n = np.array([0.6, 0.8])
    u = 0.37
    val = problems.numerical_flux_llf(p.flux, u, u, n)
    assert abs(val - p.flux.f(u) @ n) < 1e-15

    # pure advection f = (u, 0): LLF with n=(1,0) upwinds exactly
    adv = problems.FluxFunction(
        f=lambda u: np.stack([np.asarray(u, float), np.zeros_like(np.asarray(u, float))], -1),
        a=lambda u: np.stack([np.ones_like(np.asarray(u, float)),
                              np.zeros_like(np.asarray(u, float))], -1))
    val = problems.numerical_flux_llf(adv, 0.0, 2.0, np.array([1.0, 0.0]))
    assert abs(val - 0.0) < 1e-15


def test_llf_antisymmetry():
    p = problems.make_problem("sinh_steady")
    rng = np.random.default_rng(2)
    for _ in range(50):
        uL, uR = rng.normal(0, 1, 2)
        n = rng.normal(0, 1, 2)
        n /= np.hypot(*n)
        a = problems.numerical_flux_llf(p.flux, uL, uR, n)
        b = problems.numerical_flux_llf(p.flux, uR, uL, -n)
        assert abs(a + b) < 1e-14 * (1 + abs(a))


def test_llf_lipschitz():
    p = problems.make_problem("sinh_steady")
    rng = np.random.default_rng(3)
    n = np.array([1.0, 0.0])
    L = np.cosh(1.5) * 2 + 1  # wave-speed bound on [-1.5, 1.5] plus slack
    for _ in range(100):
        uL, uR, vL, vR = rng.uniform(-1.5, 1.5, 4)
        d = abs(problems.numerical_flux_llf(p.flux, uL, uR, n)
                - problems.numerical_flux_llf(p.flux, vL, vR, n))
        assert d <= L * (abs(uL - vL) + abs(uR - vR)) + 1e-12


def test_upwind_flux():
    p = problems.make_problem("sinh_steady")
    f = p.flux.f
    # outflow: a . n > 0 takes the interior state
    n = np.array([1.0, 0.0])
    assert abs(problems.numerical_flux_upwind(p.flux, 0.3, -9.0, n) - f(0.3) @ n) < 1e-14
    # inflow takes the boundary state
    n = np.array([-1.0, 0.0])
    assert abs(problems.numerical_flux_upwind(p.flux, 0.3, 0.8, n) - f(0.8) @ n) < 1e-14
    # consistency
    assert abs(problems.numerical_flux_upwind(p.flux, 0.5, 0.5, n) - f(0.5) @ n) < 1e-14


def test_entropy_flux_consistency():
    p = problems.make_problem("sinh_steady")
    rng = np.random.default_rng(4)
    for _ in range(20):
        V = rng.uniform(-1, 1)
        n = rng.normal(0, 1, 2)
        n /= np.hypot(*n)
        ghat = problems.entropy_numerical_flux(p, V, V, n)
        gn = p.entropy.g(V) @ n
        assert abs(ghat - gn) < 1e-13 * (1 + abs(gn))
        ghat2 = problems.entropy_numerical_flux_llf(p, V, V, n)
        assert abs(ghat2 - gn) < 1e-13 * (1 + abs(gn))


def test_entropy_flux_sinh_zero_state():
    p = problems.make_problem("sinh_steady")
    val = problems.entropy_numerical_flux(p, 0.0, 0.0, np.array([1.0, 0.0]))
    # g_x(0) = 0 sinh 0 - cosh 0 + 1 = 0 with the chosen normalization
    assert abs(val) < 1e-15


def test_entropy_flux_antisymmetry():
    p = problems.make_problem("sinh_steady")
    rng = np.random.default_rng(5)
    for _ in range(50):
        VL, VR = rng.uniform(-1, 1, 2)
        n = rng.normal(0, 1, 2)
        n /= np.hypot(*n)
        fhat = problems.numerical_flux_llf(p.flux, VL, VR, n)
        a = problems.entropy_numerical_flux(p, VL, VR, n, fhat=fhat)
        fhat_b = problems.numerical_flux_llf(p.flux, VR, VL, -n)
        b = problems.entropy_numerical_flux(p, VR, VL, -n, fhat=fhat_b)
        assert abs(a + b) < 1e-13 * (1 + abs(a))


def test_make_problem_unknown():
    with pytest.raises(InvalidArgumentError):
        problems.make_problem("kpz")


def test_sqrt_advect_initial_data():
    p = problems.make_problem("sqrt_advect")
    peak = p.initial_data(np.array([[-5.0, -5.0]]))
    assert abs(peak[0] - (1 + np.sqrt(2))) < 1e-14
    rng = np.random.default_rng(6)
    pts = rng.uniform(-20, 20, size=(500, 2))
    u0 = p.initial_data(pts)
    assert (u0 >= 1.0 - 1e-12).all()
    assert (u0 <= 1 + np.sqrt(2) + 1e-12).all()
    # far field is exactly one
    assert abs(p.initial_data(np.array([[10.0, 10.0]]))[0] - 1.0) == 0.0


def test_sqrt_advect_admissibility():
    p = problems.make_problem("sqrt_advect")
    with pytest.raises(DomainError):
        p.flux.check_admissible(np.array([1.0, -0.5]))
    p.flux.check_admissible(np.array([0.5, 2.0]))


def test_exact_sinh_steady_inflow_line():
    ys = np.linspace(0, 1, 11)
    vals = problems.exact_sinh_steady(np.zeros_like(ys), ys)
    assert np.abs(vals - (ys - 0.5)).max() < 1e-13


@pytest.mark.parametrize("point,expected", ORACLE_POINTS)
def test_exact_sinh_steady_frozen_values(point, expected):
    x, y = point
    assert abs(problems.exact_sinh_steady(x, y) - expected) < 1e-12


def test_exact_sinh_steady_residual_everywhere():
    rng = np.random.default_rng(7)
    x = rng.uniform(0, 1, 1000)
    y = rng.uniform(0, 1, 1000)
    u = problems.exact_sinh_steady(x, y)
    res = u + x / np.cosh(u) - y + 0.5
    assert np.abs(res).max() < 1e-12


def test_exact_sinh_steady_solves_pde():
    # finite-difference divergence of (sinh u, u) vanishes on the interior
    h = 1e-5
    x = np.linspace(0.1, 0.9, 9)
    y = np.linspace(0.1, 0.9, 9)
    X, Y = np.meshgrid(x, y)
    dfx = (np.sinh(problems.exact_sinh_steady(X + h, Y))
           - np.sinh(problems.exact_sinh_steady(X - h, Y))) / (2 * h)
    dfy = (problems.exact_sinh_steady(X, Y + h)
           - problems.exact_sinh_steady(X, Y - h)) / (2 * h)
    assert np.abs(dfx + dfy).max() < 1e-8


def test_sinh_burgers_inflow_data():
    p = problems.make_problem("sinh_burgers")
    pts = np.array([[0.25, 0.0], [0.75, 0.0]])
    assert np.allclose(p.boundary_data(pts, "bottom"), [0.25, -0.25], atol=1e-15)
    assert np.allclose(p.boundary_data(pts, "left"), [0.5, 0.5], atol=1e-15)
    assert p.exact is None


def test_problem_modes():
    assert problems.make_problem("sqrt_advect").mode == "unsteady"
    assert problems.make_problem("sinh_steady").mode == "steady"
    assert problems.make_problem("sinh_burgers").mode == "steady"
