"""Physical fluxes, entropy pairs, numerical fluxes, and the test problems.

All state-valued callables are vectorized over numpy arrays.  Flux
functions return arrays of shape ``state.shape + (2,)`` (one column per
space direction).  The entropy machinery is routed through the entropy
variable V = U'(u) so the same interfaces extend to systems, even though
the shipped problems are scalar with U = u^2/2 and V = u.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidArgumentError, NumericalError


def _stack2(fx, fy):
    return np.stack([np.asarray(fx, float), np.asarray(fy, float)], axis=-1)


@dataclass(frozen=True)
class FluxFunction:
    """Flux f(u) and wave speeds a(u) = df/du, with the admissible interval."""

    f: Callable
    a: Callable
    admissible_range: tuple = (-np.inf, np.inf)

    def check_admissible(self, u, where=None):
        u = np.asarray(u)
        lo, hi = self.admissible_range
        bad = (u <= lo) | (u >= hi) | ~np.isfinite(u)
        if np.any(bad):
            idx = np.unravel_index(np.argmax(bad), bad.shape)
            raise DomainError(
                f"state {u[idx]!r} outside admissible range ({lo}, {hi})"
                + (f" at {where}" if where is not None else ""),
                value=float(u[idx]), where=where)


@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy U with flux g, variable V = U', inverse map and potential.

    The potential satisfies theta_j = V f_j - g_j and d theta_j / dV = f_j,
    which is what makes the accuracy-preserving entropy numerical flux work.
    """

    U: Callable
    g: Callable
    V: Callable
    u_of_V: Callable
    theta: Callable


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    flux: FluxFunction
    entropy: EntropyPair
    domain: tuple  # (xmin, xmax, ymin, ymax)
    boundary_data: Callable  # (points (n,2), tag) -> (n,)
    mode: str  # "steady" | "unsteady"
    initial_data: Optional[Callable] = None  # points -> values
    exact: Optional[Callable] = None  # points -> values


def numerical_flux_llf(flux, u_left, u_right, normal):
    """Local Lax-Friedrichs flux through a unit normal.

    ``normal`` has shape (..., 2); broadcasting against the states is the
    caller's business.  Consistent: flux(u, u, n) = f(u) . n exactly.
    """
    u_left = np.asarray(u_left, float)
    u_right = np.asarray(u_right, float)
    fL = np.einsum("...d,...d->...", flux.f(u_left), normal)
    fR = np.einsum("...d,...d->...", flux.f(u_right), normal)
    aL = np.einsum("...d,...d->...", flux.a(u_left), normal)
    aR = np.einsum("...d,...d->...", flux.a(u_right), normal)
    s = np.maximum(np.abs(aL), np.abs(aR))
    return 0.5 * (fL + fR) - 0.5 * s * (u_right - u_left)


def numerical_flux_upwind(flux, u, u_b, normal):
    """Scalar upwind flux: sign of the wave speed at the state average.

    Outflow (a . n >= 0) takes the interior state, inflow the exterior one;
    ties resolve to the interior state.
    """
    u = np.asarray(u, float)
    u_b = np.asarray(u_b, float)
    ubar = 0.5 * (u + u_b)
    an = np.einsum("...d,...d->...", flux.a(ubar), normal)
    fin = np.einsum("...d,...d->...", flux.f(u), normal)
    fout = np.einsum("...d,...d->...", flux.f(u_b), normal)
    return np.where(an >= 0, fin, fout)


def entropy_numerical_flux(problem, V_left, V_right, normal, fhat=None):
    """Accuracy-preserving entropy flux ghat = <{V}, fhat> - theta({V}) . n.

    ``fhat`` must be the interior numerical flux of the scheme evaluated at
    the same trace pair; it defaults to the LLF flux.  Consistency follows
    from g = V f - theta.
    """
    ent = problem.entropy
    Vm = 0.5 * (np.asarray(V_left, float) + np.asarray(V_right, float))
    if fhat is None:
        uL = ent.u_of_V(np.asarray(V_left, float))
        uR = ent.u_of_V(np.asarray(V_right, float))
        fhat = numerical_flux_llf(problem.flux, uL, uR, normal)
    theta_n = np.einsum("...d,...d->...", ent.theta(ent.u_of_V(Vm)), normal)
    return Vm * fhat - theta_n


def entropy_numerical_flux_llf(problem, V_left, V_right, normal):
    """Generic consistent entropy flux: LLF on g, dissipating the V jump.

    The contrast flux for the one-order accuracy-loss demonstration.  Its
    dissipation acts on the symmetrizing variable, so it lacks the
    potential matching that makes the eq32 flux accuracy-preserving (for a
    quadratic entropy, a U-jump dissipation would coincide with the eq32
    structure to second order in the jump and show no loss at all).
    """
    ent = problem.entropy
    VL = np.asarray(V_left, float)
    VR = np.asarray(V_right, float)
    uL = ent.u_of_V(VL)
    uR = ent.u_of_V(VR)
    gL = np.einsum("...d,...d->...", ent.g(uL), normal)
    gR = np.einsum("...d,...d->...", ent.g(uR), normal)
    aL = np.einsum("...d,...d->...", problem.flux.a(uL), normal)
    aR = np.einsum("...d,...d->...", problem.flux.a(uR), normal)
    s = np.maximum(np.abs(aL), np.abs(aR))
    return 0.5 * (gL + gR) - 0.5 * s * (VR - VL)


def exact_sinh_steady(x, y):
    """Exact smooth solution of the steady sinh-flux problem.

    The inflow profile v - 1/2 (v the coordinate along the data edge)
    transported along characteristics gives u as the unique root of

        u + x * sech(u) - y + 1/2 = 0.

    The derivative of the left side is 1 - x * sech(u) tanh(u) >= 1/2 on
    the unit square, so the root is unique and the solution globally
    smooth.  Solved by Newton with a bisection safeguard.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    u = (y - 0.5) * np.ones_like(x)
    lo = np.full_like(u, -3.0)
    hi = np.full_like(u, 3.0)
    active = np.ones(u.shape, dtype=bool)
    for _ in range(50):
        g = u + x / np.cosh(u) - y + 0.5
        active = np.abs(g) > 1e-14
        if not active.any():
            break
        sech = 1.0 / np.cosh(u)
        dg = 1.0 - x * sech * np.tanh(u)
        lo = np.where(g < 0, np.maximum(lo, u), lo)
        hi = np.where(g > 0, np.minimum(hi, u), hi)
        step = np.where(dg > 1e-12, g / np.where(dg > 1e-12, dg, 1.0), 0.0)
        u_new = u - step
        outside = (u_new <= lo) | (u_new >= hi)
        u = np.where(active, np.where(outside, 0.5 * (lo + hi), u_new), u)
    else:
        g = u + x / np.cosh(u) - y + 0.5
        if np.any(np.abs(g) > 1e-12):
            raise NumericalError("characteristics root find did not converge")
    return u if u.shape else float(u)


def _sqrt_problem():
    def f(u):
        return _stack2(np.sqrt(u), u)

    def a(u):
        u = np.asarray(u, float)
        return _stack2(0.5 / np.sqrt(u), np.ones_like(u))

    flux = FluxFunction(f, a, admissible_range=(0.0, np.inf))
    ent = EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, float) ** 2,
        # component order fixed by g_j' = V f_j'
        g=lambda u: _stack2(np.asarray(u, float) ** 1.5 / 3.0, 0.5 * np.asarray(u, float) ** 2),
        V=lambda u: np.asarray(u, float),
        u_of_V=lambda v: np.asarray(v, float),
        theta=lambda u: _stack2(2.0 / 3.0 * np.asarray(u, float) ** 1.5,
                                0.5 * np.asarray(u, float) ** 2),
    )

    def initial(points):
        p = np.asarray(points, float)
        r = np.hypot(p[..., 0] + 5.0, p[..., 1] + 5.0)
        bump = 1.0 + 2.0 * np.sin(np.pi / 4.0 * (1.0 - 2.0 * r))
        return np.where(r > 0.5, 1.0, bump)

    def bdata(points, tag):
        return initial(points)

    return ProblemSpec("sqrt_advect", flux, ent, (-20.0, 20.0, -20.0, 20.0),
                       bdata, "unsteady", initial_data=initial)


def _sinh_entropy():
    return EntropyPair(
        U=lambda u: 0.5 * np.asarray(u, float) ** 2,
        g=lambda u: _stack2(np.asarray(u, float) * np.sinh(u) - np.cosh(u) + 1.0,
                            0.5 * np.asarray(u, float) ** 2),
        V=lambda u: np.asarray(u, float),
        u_of_V=lambda v: np.asarray(v, float),
        theta=lambda u: _stack2(np.cosh(u) - 1.0, 0.5 * np.asarray(u, float) ** 2),
    )


def _sinh_flux():
    def f(u):
        return _stack2(np.sinh(u), np.asarray(u, float))

    def a(u):
        u = np.asarray(u, float)
        return _stack2(np.cosh(u), np.ones_like(u))

    return FluxFunction(f, a)


def _sinh_steady_problem():
    flux = _sinh_flux()

    def exact(points):
        p = np.asarray(points, float)
        return exact_sinh_steady(p[..., 0], p[..., 1])

    def bdata(points, tag):
        return exact(points)

    def initial(points):
        p = np.asarray(points, float)
        return p[..., 1] - 0.5

    return ProblemSpec("sinh_steady", flux, _sinh_entropy(), (0.0, 1.0, 0.0, 1.0),
                       bdata, "steady", initial_data=initial, exact=exact)


def _sinh_burgers_problem():
    flux = _sinh_flux()

    def bdata(points, tag):
        p = np.asarray(points, float)
        if tag == "left":
            return np.full(p.shape[:-1], 0.5)
        if tag == "right":
            return np.full(p.shape[:-1], -0.5)
        return 0.5 - p[..., 0]

    def initial(points):
        p = np.asarray(points, float)
        return 0.5 - p[..., 0]

    return ProblemSpec("sinh_burgers", flux, _sinh_entropy(), (0.0, 1.0, 0.0, 1.0),
                       bdata, "steady", initial_data=initial)


_PROBLEMS = {
    "sqrt_advect": _sqrt_problem,
    "sinh_steady": _sinh_steady_problem,
    "sinh_burgers": _sinh_burgers_problem,
}


def make_problem(name):
    """Build one of the shipped test problems by name."""
    try:
        factory = _PROBLEMS[name]
    except KeyError:
        raise InvalidArgumentError(
            f"unknown problem {name!r}; expected one of {sorted(_PROBLEMS)}") from None
    return factory()
