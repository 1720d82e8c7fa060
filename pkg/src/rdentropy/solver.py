"""Global assembly and explicit pseudo-time marching.

Unsteady problems march with fixed-step Euler forward at a CFL-limited
step; steady problems iterate the same update with local per-DoF steps
until the residual drops below a relative tolerance.  Accumulation runs
in a fixed element order, so two marches with the same configuration are
bit-identical.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .residuals import ResidualEvaluator, SchemeConfig

HISTORY_COLUMNS = ("step", "t", "dt", "mass", "entropy_residual_sum", "res_inf")


@dataclass
class StateField:
    """DoF-indexed solution values, tagged by which variable they hold."""

    values: np.ndarray
    variable: str = "conserved"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.variable not in ("conserved", "entropy"):
            raise InvalidArgumentError(f"unknown variable tag {self.variable!r}")


@dataclass
class MarchConfig:
    cfl: float = 0.3
    t_end: Optional[float] = None
    steady_tol: float = 1e-8
    steady_target: Optional[float] = None  # absolute residual target override
    max_iters: int = 20000
    local_dt: bool = True  # steady mode only
    dt_refresh: int = 10   # steps between wave-speed/step-size refreshes

    def __post_init__(self):
        if self.cfl <= 0:
            raise InvalidArgumentError("cfl must be positive")


@dataclass
class MarchResult:
    state: StateField
    history: list = field(default_factory=list)
    converged: bool = True
    n_steps: int = 0

    def history_array(self):
        return np.array([[row[c] for c in HISTORY_COLUMNS] for row in self.history])


def dual_volumes(mesh, dofmap):
    """Positive dual measures |C_sigma| = sum over elements of |K| / #K."""
    C = np.zeros(dofmap.n_dofs)
    share = mesh.areas / dofmap.n_local
    np.add.at(C, dofmap.element_dofs, share[:, None])
    return C


def euler_step(u, residual, dt, volumes, problem=None):
    """One forward-Euler update u <- u - dt/|C| * R, checking admissibility."""
    u_new = u - (dt / volumes) * residual
    if problem is not None:
        lo, hi = problem.flux.admissible_range
        bad = (u_new <= lo) | (u_new >= hi) | ~np.isfinite(u_new)
        if np.any(bad):
            sigma = int(np.argmax(bad))
            raise DomainError(
                f"update left the admissible range at DoF {sigma}"
                f" (value {u_new[sigma]!r})", value=float(u_new[sigma]), where=sigma)
    return u_new


def _element_dt(evaluator, u, cfl):
    """Per-element CFL step cfl * h_K / ((2k+1) * max wave speed)."""
    speeds = evaluator.wave_speed_bound(u)
    k = evaluator.dofmap.degree
    return cfl * evaluator.hK / ((2 * k + 1) * np.maximum(speeds, 1e-300))


def _local_dt(evaluator, u, cfl):
    dt_elem = _element_dt(evaluator, u, cfl)
    dt = np.full(evaluator.dofmap.n_dofs, np.inf)
    np.minimum.at(dt, evaluator.elem_dofs,
                  np.broadcast_to(dt_elem[:, None], evaluator.elem_dofs.shape))
    return dt


def march(state, mesh, dofmap, problem, scheme=None, config=None, evaluator=None):
    """March to a final time (unsteady) or to steady state.

    ``state`` may be a StateField or a plain DoF array; if None, the
    problem's initial data is interpolated at the DoF points.  The history
    records per step: mass, the global entropy-residual sum of the
    corrected residuals, and the residual max norm.
    """
    scheme = scheme if scheme is not None else SchemeConfig()
    config = config if config is not None else MarchConfig()
    ev = evaluator or ResidualEvaluator(mesh, dofmap, problem, scheme)
    if state is None:
        if problem.initial_data is None:
            raise InvalidArgumentError("problem has no initial data; pass a state")
        u = np.asarray(problem.initial_data(dofmap.dof_points), dtype=float)
    else:
        u = np.asarray(state.values if isinstance(state, StateField) else state,
                       dtype=float).copy()
    C = dual_volumes(mesh, dofmap)
    history = []

    def record(step, t, dt, u, R):
        V = problem.entropy.V(u)
        history.append({
            "step": step, "t": t, "dt": dt,
            "mass": float(np.dot(C, u)),
            "entropy_residual_sum": float(np.dot(V, R)),
            "res_inf": float(np.abs(R).max()) if len(R) else 0.0,
        })

    if problem.mode == "unsteady":
        if config.t_end is None:
            raise InvalidArgumentError("unsteady march needs t_end")
        dt0 = float(_element_dt(ev, u, config.cfl).min())
        t, step = 0.0, 0
        while t < config.t_end - 1e-14:
            dt = min(dt0, config.t_end - t)
            R = ev.assemble(u)
            record(step, t, dt, u, R)
            u = euler_step(u, R, dt, C, problem)
            t += dt
            step += 1
            if step > config.max_iters:
                return MarchResult(StateField(u), history, converged=False, n_steps=step)
        R = ev.assemble(u)
        record(step, t, 0.0, u, R)
        return MarchResult(StateField(u), history, converged=True, n_steps=step)

    # steady: pseudo-time with optional local steps
    res0 = None
    converged = False
    step = 0
    dt = None
    for step in range(config.max_iters):
        R = ev.assemble(u)
        rinf = float(np.abs(R).max())
        if res0 is None:
            res0 = rinf if rinf > 0 else 1.0
            target = (config.steady_target if config.steady_target is not None
                      else config.steady_tol * res0)
        if dt is None or step % config.dt_refresh == 0:
            if config.local_dt:
                dt = _local_dt(ev, u, config.cfl)
                dt_rec = float(dt.min())
            else:
                dt = float(_element_dt(ev, u, config.cfl).min())
                dt_rec = dt
        record(step, float(step), dt_rec, u, R)
        if rinf <= target:
            converged = True
            break
        u = euler_step(u, R, dt, C, problem)
    return MarchResult(StateField(u), history, converged=converged, n_steps=step)
