"""Quantitative verification: conservation sums, error norms, probes.

All functions are read-only in the state.  Slopes between consecutive
meshes are log2 ratios, matching mesh sequences that halve h exactly.
"""

from dataclasses import dataclass

import numpy as np

from . import basis
from .errors import InvalidArgumentError
from .residuals import ResidualEvaluator, SchemeConfig


@dataclass
class EntropySums:
    total: float
    interior: float
    boundary: float
    scale: float


def entropy_residual_sum(u, mesh, dofmap, problem, scheme=None, evaluator=None):
    """Global sum of V_sigma-weighted residuals, split interior/boundary.

    With the correction active the interior part telescopes to the
    boundary total of the entropy numerical flux, so for closed or
    constant-state boundaries the sum vanishes to round-off.
    """
    ev = evaluator or ResidualEvaluator(mesh, dofmap, problem,
                                        scheme if scheme is not None else SchemeConfig())
    u = np.asarray(u, float)
    res = ev.residuals(u)
    phi_b, _ = ev.boundary_residuals(u, uf=res.uf)
    V_loc = res.V_loc
    interior = float(np.einsum("el,el->", V_loc, res.phi))
    if len(ev.bnd_e):
        boundary = float(np.einsum("bl,bl->", V_loc[ev.bnd_e], phi_b))
        scale = float(np.abs(V_loc * res.phi).sum() + np.abs(V_loc[ev.bnd_e] * phi_b).sum())
    else:
        boundary = 0.0
        scale = float(np.abs(V_loc * res.phi).sum())
    return EntropySums(interior + boundary, interior, boundary, 1.0 + scale)


def error_norms(u, exact, mesh, dofmap):
    """(L1, L2, Linf) of u^h - exact.

    L1/L2 integrate |error| with the degree-5 volume rule; Linf compares
    DoF values at the DoF points.
    """
    if exact is None:
        raise InvalidArgumentError("error_norms needs an exact-solution oracle")
    u = np.asarray(u, float)
    rule = basis.volume_rule(2)
    vals = basis.shape_values(dofmap.degree, "lagrange", rule.points)
    coords = mesh.element_coords()
    pts = np.einsum("qi,eid->eqd", rule.points, coords)
    uh = u[dofmap.element_dofs] @ vals.T
    ue = exact(pts)
    err = uh - ue
    w = mesh.areas[:, None] * rule.weights[None, :]
    l1 = float((w * np.abs(err)).sum())
    l2 = float(np.sqrt((w * err ** 2).sum()))
    linf = float(np.abs(u - exact(dofmap.dof_points)).max())
    return l1, l2, linf


def slopes(values, hs):
    """log2 error ratios between consecutive meshes (h halving assumed)."""
    values = np.asarray(values, float)
    hs = np.asarray(hs, float)
    out = []
    for i in range(1, len(values)):
        ratio = np.log(values[i - 1] / values[i]) / np.log(hs[i - 1] / hs[i])
        out.append(float(ratio))
    return out


def truncation_probe(problem, scheme, meshes_dofmaps, phi=None):
    """Weak truncation error on exact-solution interpolants, with slopes.

    ``meshes_dofmaps`` is a list of (mesh, dofmap) at successively halved
    h.  The probe evaluates E(pi_h u, phi) = sum_sigma phi_sigma R_sigma
    with phi defaulting to sin(pi x) sin(pi y).
    """
    if problem.exact is None:
        raise InvalidArgumentError("truncation probe needs an exact solution")
    if phi is None:
        def phi(points):
            return np.sin(np.pi * points[..., 0]) * np.sin(np.pi * points[..., 1])
    values = []
    hs = []
    for m, dm in meshes_dofmaps:
        ev = ResidualEvaluator(m, dm, problem, scheme)
        u = problem.exact(dm.dof_points)
        R = ev.assemble(u)
        values.append(float(np.dot(phi(dm.dof_points), R)))
        hs.append(float(m.diameters().max()))
    return np.array(values), slopes(np.abs(values), hs)


def convergence_table(problem, scheme, degree, nx_list, march_config=None,
                      continuation=True, diagonal="alternating"):
    """Steady-solve error study over a ladder of rect meshes.

    Each level after the first starts from the interpolated previous
    solution; the stopping threshold stays the configured fraction of the
    fresh-initial-state residual of that level, so continuation only saves
    iterations, never weakens the convergence criterion.  Returns a list
    of row dicts (h, n_dofs, L1, L2, Linf, converged).
    """
    from . import mesh as mesh_mod
    from .solver import MarchConfig, march

    if problem.exact is None:
        raise InvalidArgumentError("convergence study needs an exact solution")
    base_cfg = march_config or MarchConfig()
    rows = []
    prev = None
    for nx in nx_list:
        m = mesh_mod.build_rect_mesh(problem.domain, nx, nx, diagonal)
        dm = mesh_mod.build_dof_map(m, degree)
        ev = ResidualEvaluator(m, dm, problem, scheme)
        fresh = np.asarray(problem.initial_data(dm.dof_points), dtype=float)
        if continuation and prev is not None:
            u0 = mesh_mod.evaluate_fe(prev[0], prev[1], prev[2], dm.dof_points)
            target = base_cfg.steady_tol * float(np.abs(ev.assemble(fresh)).max())
        else:
            u0 = fresh
            target = None
        cfg = MarchConfig(cfl=base_cfg.cfl, steady_tol=base_cfg.steady_tol,
                          steady_target=target, max_iters=base_cfg.max_iters,
                          local_dt=base_cfg.local_dt, dt_refresh=base_cfg.dt_refresh)
        result = march(u0, m, dm, problem, scheme, cfg, evaluator=ev)
        l1, l2, linf = error_norms(result.state.values, problem.exact, m, dm)
        rows.append({"h": float(m.diameters().max()), "n_dofs": dm.n_dofs,
                     "L1": l1, "L2": l2, "Linf": linf,
                     "converged": result.converged, "steps": result.n_steps})
        prev = (m, dm, result.state.values)
    for norm in ("L1", "L2", "Linf"):
        slp = slopes([r[norm] for r in rows], [r["h"] for r in rows])
        for i, r in enumerate(rows):
            r[f"slope_{norm}"] = None if i == 0 else slp[i - 1]
    return rows


def identity_check(mesh, dofmap, problem, scheme, u, v):
    """Double assembly of the global Galerkin identity; returns the defect.

    The left route contracts the test DoF values against the assembled
    residuals.  The right route rebuilds the same quantity independently
    from the variational pieces: the volume term, the boundary term, the
    face-jump flux term, and the deviation-from-Galerkin sums.
    """
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    ev = ResidualEvaluator(mesh, dofmap, problem, scheme)
    R = ev.assemble(u)
    lhs = float(np.dot(v, R))

    res = ev.residuals(u)
    v_loc = v[dofmap.element_dofs]

    # volume: -oint grad v . f(u)
    gradv = ev.volume_gradients(v_loc)
    uq = ev.volume_values(u[dofmap.element_dofs])
    fq = problem.flux.f(uq)
    t_vol = -float(np.einsum("e,q,eqd,eqd->", mesh.areas, ev.wv, gradv, fq))

    # boundary: oint v (fhat(u, u_b) - f(u) . n)
    phi_b, tot_b = ev.boundary_residuals(u, uf=res.uf)
    vf = ev.trace_values(v_loc)
    if len(ev.bnd_e):
        vtr = vf[ev.bnd_e, ev.bnd_j]
        if ev.scheme.boundary_flux == "llf":
            from .problems import numerical_flux_llf as nf
        else:
            from .problems import numerical_flux_upwind as nf
        utr = res.uf[ev.bnd_e, ev.bnd_j]
        fhat_b = nf(problem.flux, utr, ev.bnd_ub, ev.bnd_n[:, None, :])
        fown = np.einsum("bqd,bd->bq", problem.flux.f(utr), ev.bnd_n)
        t_bnd = float(np.einsum("b,q,bq,bq->", ev.bnd_len, ev.wf, vtr, fhat_b - fown))
    else:
        t_bnd = 0.0

    # interior faces: oint [v] fhat, jump and flux seen from side A
    if len(ev.iA):
        vA = vf[ev.iA, ev.jA]
        vB = vf[ev.iB, ev.jB][:, ::-1]
        fhat_A = res.fhat[ev.iA, ev.jA]
        t_face = float(np.einsum("f,q,fq,fq->", ev.int_len, ev.wf, vA - vB, fhat_A))
    else:
        t_face = 0.0

    # deviation from Galerkin via the pairwise sum
    # (1/#K) sum_{s,s'} (v_s - v_s')(Phi_s - Phi_s^Gal); boundary residuals
    # equal their Galerkin form already and drop out
    gal_phi = (ev._volume_term(u[dofmap.element_dofs])[0]
               + ev._face_term(res.fhat)[0])
    diff = res.phi - gal_phi
    nloc = dofmap.n_local
    t_dev = float((np.einsum("el,el->e", v_loc, diff)
                   - v_loc.sum(axis=1) * diff.sum(axis=1) / nloc).sum())
    rhs = t_vol + t_bnd + t_face + t_dev

    scale = 1.0 + abs(t_vol) + abs(t_bnd) + abs(t_face) + abs(t_dev) + abs(lhs)
    return abs(lhs - rhs) / scale
