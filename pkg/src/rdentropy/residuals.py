"""Element and boundary residuals for every scheme family.

Every base scheme produces per-element, per-DoF residuals whose element
sum equals the boundary integral of the (numerical) flux evaluated with
the same quadrature — conservation holds by construction, for any
quadrature, because the added stabilization terms telescope through the
partition of unity.  The heavy lifting happens in ``ResidualEvaluator``,
which precomputes all geometry/basis tables once and evaluates the whole
mesh in vectorized numpy; thin per-element wrappers expose the same
operations for tests and diagnostics.
"""

from dataclasses import dataclass

import numpy as np

from . import basis, entropy as entropy_mod, problems as problems_mod
from .errors import DomainError, InvalidArgumentError

BASES = ("galerkin", "supg", "galerkin_jump", "dg", "rusanov", "limited_rd")
FILTERS = ("none", "jump", "streamline")
ENTROPY_FLUXES = ("eq32", "llf_entropy")
BOUNDARY_FLUXES = ("llf", "upwind")


@dataclass
class SchemeConfig:
    """Base residual kind plus stabilization/limiter/correction switches."""

    base: str = "galerkin"
    theta_jump: float = 0.0
    theta_stream: float = 0.0
    supg_theta: float = 1.0
    entropy_correction: bool = False
    entropy_filter: str = "none"
    filter_theta: float = 0.0
    epsilon: float = entropy_mod.DEFAULT_EPSILON
    entropy_flux: str = "eq32"
    boundary_flux: str = "llf"
    reduced_filter_quadrature: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise InvalidArgumentError(f"unknown base scheme {self.base!r}")
        if self.entropy_filter not in FILTERS:
            raise InvalidArgumentError(f"unknown entropy filter {self.entropy_filter!r}")
        if self.entropy_flux not in ENTROPY_FLUXES:
            raise InvalidArgumentError(f"unknown entropy flux {self.entropy_flux!r}")
        if self.boundary_flux not in BOUNDARY_FLUXES:
            raise InvalidArgumentError(f"unknown boundary flux {self.boundary_flux!r}")
        for name in ("theta_jump", "theta_stream", "supg_theta", "filter_theta"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be nonnegative")
        if self.epsilon <= 0:
            raise InvalidArgumentError("epsilon must be positive")


@dataclass
class ElementResidual:
    """Per-DoF residuals of one element and its boundary-flux integral."""

    phi: np.ndarray
    flux_integral: float

    @property
    def total(self):
        return float(self.phi.sum())


class ResidualParts:
    """Whole-mesh arrays produced by one evaluation pass."""

    def __init__(self, **kw):
        self.phi = kw.pop("phi")
        self.fluxint = kw.pop("fluxint")
        for k, v in kw.items():
            setattr(self, k, v)
        for k in ("E", "alpha", "r", "psi", "ghat", "beta", "raw_total"):
            if not hasattr(self, k):
                setattr(self, k, None)


def limiter_beta(phi_low, total, floor=None):
    """Distribution coefficients from monotone low-order residuals.

    beta_sigma = max(0, phi^L_sigma / total) normalized to sum to one; a
    vanishing total falls back to the uniform distribution 1/#K.
    """
    phi_low = np.asarray(phi_low, float)
    single = phi_low.ndim == 1
    phi_low = np.atleast_2d(phi_low)
    total = np.atleast_1d(np.asarray(total, float))
    nloc = phi_low.shape[1]
    if floor is None:
        floor = 1e-14 * (1.0 + np.abs(phi_low).sum(axis=1))
    else:
        floor = np.broadcast_to(np.asarray(floor, float), total.shape)
    degenerate = np.abs(total) <= floor
    safe = np.where(degenerate, 1.0, total)
    pos = np.maximum(phi_low / safe[:, None], 0.0)
    denom = pos.sum(axis=1)
    denom = np.where(denom > 0, denom, 1.0)
    beta = pos / denom[:, None]
    beta[degenerate] = 1.0 / nloc
    return beta[0] if single else beta


class ResidualEvaluator:
    """Vectorized residual assembly for one (mesh, dofmap, problem, scheme).

    Geometry and basis tables are precomputed at construction; evaluation
    is then pure array work, safe to call from a marching loop.
    """

    def __init__(self, mesh, dofmap, problem, scheme=None, kind="lagrange"):
        self.mesh = mesh
        self.dofmap = dofmap
        self.problem = problem
        self.scheme = scheme if scheme is not None else SchemeConfig()
        self.kind = kind
        self._check_compatibility()

        deg = dofmap.degree
        self.nloc = dofmap.n_local
        self.elem_dofs = dofmap.element_dofs
        self.areas = mesh.areas
        self.gradlam = mesh.grad_lambda()
        normals, self.facelen = mesh.face_geometry()
        self.unitn = normals / self.facelen[:, :, None]
        self.hK = self.facelen.max(axis=1)

        vr = basis.volume_rule(deg)
        self.wv = vr.weights
        self.Vv = basis.shape_values(deg, kind, vr.points)
        self.Dv = basis.shape_dlam(deg, kind, vr.points)

        er = basis.edge_rule()
        self.wf = er.weights
        fb = np.stack([basis.face_point_bary(j, er.points) for j in range(3)])
        self.Vf = basis.shape_values(deg, kind, fb)   # (3, nqf, nloc)
        self.Df = basis.shape_dlam(deg, kind, fb)     # (3, nqf, nloc, 3)

        if self.scheme.reduced_filter_quadrature:
            mr = basis.midpoint_volume_rule()
            self.wv_filter = mr.weights
            self.Vv_filter = basis.shape_values(deg, kind, mr.points)
            self.Dv_filter = basis.shape_dlam(deg, kind, mr.points)
        else:
            self.wv_filter, self.Vv_filter, self.Dv_filter = self.wv, self.Vv, self.Dv

        # flattened tables for the matmul-shaped hot path
        nqv, nqf = len(self.wv), len(self.wf)
        self._gradlamT = np.ascontiguousarray(self.gradlam.transpose(0, 2, 1))
        self._WDv = np.ascontiguousarray(
            (self.wv[:, None, None] * self.Dv).transpose(0, 2, 1).reshape(nqv * 3, self.nloc))
        self._Vf_flat = np.ascontiguousarray(self.Vf.reshape(3 * nqf, self.nloc))
        self._Df_flat = np.ascontiguousarray(
            self.Df.transpose(0, 1, 3, 2).reshape(3 * nqf * 3, self.nloc))
        self._flw = self.facelen[:, :, None] * self.wf[None, None, :]

        fc = mesh.interior_faces
        if len(fc):
            self.iA, self.jA, self.iB, self.jB = fc[:, 0], fc[:, 1], fc[:, 2], fc[:, 3]
        else:
            self.iA = self.jA = self.iB = self.jB = np.zeros(0, dtype=int)
        self.int_len = self.facelen[self.iA, self.jA] if len(fc) else np.zeros(0)

        self._setup_boundary()

    def _check_compatibility(self):
        cont = self.dofmap.continuity == "continuous"
        if self.scheme.base == "dg" and cont:
            raise InvalidArgumentError("dg base requires a discontinuous DoF map")
        if self.scheme.base != "dg" and not cont:
            raise InvalidArgumentError(
                f"base {self.scheme.base!r} requires a continuous DoF map")
        if not cont and (self.scheme.entropy_filter == "jump"
                         or self.scheme.base == "galerkin_jump"
                         or self.scheme.theta_jump > 0):
            raise InvalidArgumentError("gradient-jump terms need a conformal continuous space")

    def _setup_boundary(self):
        faces = self.mesh.boundary_faces
        nb = len(faces)
        self.bnd_e = np.array([f[0] for f in faces], dtype=int)
        self.bnd_j = np.array([f[1] for f in faces], dtype=int)
        self.bnd_tags = [f[2] for f in faces]
        self.bnd_len = self.facelen[self.bnd_e, self.bnd_j] if nb else np.zeros(0)
        self.bnd_n = self.unitn[self.bnd_e, self.bnd_j] if nb else np.zeros((0, 2))
        s = basis.edge_rule().points
        pts = np.zeros((nb, len(s), 2))
        for k in range(nb):
            a, b = self.mesh.face_endpoints(self.bnd_e[k], self.bnd_j[k])
            pts[k] = a[None, :] + s[:, None] * (b - a)[None, :]
        self.bnd_pts = pts
        ub = np.zeros((nb, len(s)))
        for tag in set(self.bnd_tags):
            sel = np.array([t == tag for t in self.bnd_tags], dtype=bool)
            if sel.any():
                ub[sel] = self.problem.boundary_data(pts[sel], tag)
        self.bnd_ub = ub

    # -- kinematics -------------------------------------------------------

    def local_values(self, w):
        return np.asarray(w, float)[self.elem_dofs]

    def volume_values(self, w_loc):
        return w_loc @ self.Vv.T

    def trace_values(self, w_loc):
        ne = len(w_loc)
        return (w_loc @ self._Vf_flat.T).reshape(ne, 3, len(self.wf))

    def volume_gradients(self, w_loc):
        W = np.einsum("el,qli->eqi", w_loc, self.Dv)
        return np.einsum("eqi,eid->eqd", W, self.gradlam)

    def face_gradients(self, w_loc):
        ne = len(w_loc)
        if self.dofmap.degree == 1 and self.kind == "lagrange":
            # P1 gradients are constant on the element
            g = np.matmul(w_loc[:, None, :], self.gradlam)[:, 0, :]
            return np.broadcast_to(g[:, None, None, :], (ne, 3, len(self.wf), 2))
        W = (w_loc @ self._Df_flat.T).reshape(ne, 3 * len(self.wf), 3)
        grad = np.matmul(W, self.gradlam)
        return grad.reshape(ne, 3, len(self.wf), 2)

    def neighbor_traces(self, tr):
        """Traces seen from the other side of each face (reversed order).

        Boundary faces keep the element's own trace, matching the scheme
        convention that the boundary residual carries the exterior data.
        """
        nb = tr.copy()
        if len(self.iA):
            nb[self.iA, self.jA] = tr[self.iB, self.jB][:, ::-1]
            nb[self.iB, self.jB] = tr[self.iA, self.jA][:, ::-1]
        return nb

    # -- building blocks ---------------------------------------------------

    def _volume_term(self, u_loc):
        uq = self.volume_values(u_loc)
        self._check_states(uq, "volume quadrature")
        fq = self.problem.flux.f(uq)
        an = np.matmul(fq, self._gradlamT)                      # f . grad lambda_i
        phi = -self.areas[:, None] * (an.reshape(len(u_loc), -1) @ self._WDv)
        return phi, uq, fq

    def _face_flux(self, uf):
        """Numerical flux at face quadrature points, per element side."""
        if self.dofmap.continuity == "continuous":
            f_tr = self.problem.flux.f(uf)
            fhat = (f_tr[..., 0] * self.unitn[:, :, None, 0]
                    + f_tr[..., 1] * self.unitn[:, :, None, 1])
            return fhat, uf
        un = self.neighbor_traces(uf)
        fhat = problems_mod.numerical_flux_llf(
            self.problem.flux, uf, un, self.unitn[:, :, None, :])
        return fhat, un

    def _face_term(self, fhat):
        weighted = self._flw * fhat
        phi = weighted.reshape(len(fhat), -1) @ self._Vf_flat
        tot = weighted.sum(axis=(1, 2))
        return phi, tot

    def raw_flux_total(self, uf):
        """Boundary integral of f(u^h) . n from the element's own trace."""
        f_tr = self.problem.flux.f(uf)
        fraw = (f_tr[..., 0] * self.unitn[:, :, None, 0]
                + f_tr[..., 1] * self.unitn[:, :, None, 1])
        return (self._flw * fraw).sum(axis=(1, 2)), fraw

    def streamline_term(self, w, theta, to_state=None, filter_tables=False):
        """h_K * theta * integral of (a . grad phi) tau (a . grad w)."""
        if theta == 0:
            return np.zeros((self.mesh.n_elements, self.nloc))
        wv, Vv, Dv = ((self.wv_filter, self.Vv_filter, self.Dv_filter)
                      if filter_tables else (self.wv, self.Vv, self.Dv))
        w_loc = self.local_values(w)
        wq = w_loc @ Vv.T
        states = wq if to_state is None else to_state(wq)
        aq = self.problem.flux.a(states)            # (nE, nq, 2)
        # tau from the element-mean speed; skipped on stagnant elements
        abar = np.einsum("q,eqd->ed", wv, aq)
        an_bar = np.einsum("eid,ed->ei", self.gradlam, abar)     # abar . grad lambda_i
        K_sig = np.einsum("q,qli,ei->el", wv, Dv, an_bar)
        neg = np.minimum(K_sig, 0.0).sum(axis=1)
        tau = np.zeros(len(neg))
        live = np.abs(neg) > 1e-300
        tau[live] = 1.0 / np.abs(neg[live])

        an = np.einsum("eqd,eid->eqi", aq, self.gradlam)         # a . grad lambda_i
        W = np.einsum("el,qli->eqi", w_loc, Dv)
        adw = np.einsum("eqi,eqi->eq", an, W)                    # a . grad w
        test = np.einsum("qli,eqi->eql", Dv, an)                 # a . grad phi_l
        out = np.einsum("e,q,eql,eq->el", self.hK * tau * self.areas * theta,
                        wv, test, adw)
        return out

    def jump_term(self, w, theta):
        """Face-gradient jump term, assembled per interior face.

        The test-function gradient is taken one-sided (from within the
        element), so the element sum vanishes by the partition of unity;
        pairing both sides of a face makes the w-weighted production a
        perfect square.  The face factor is the squared face length.
        """
        out = np.zeros((self.mesh.n_elements, self.nloc))
        if theta == 0 or not len(self.iA):
            return out
        w_loc = self.local_values(w)
        coef = theta * self.int_len ** 3             # h_f^2 times the face measure
        if self.dofmap.degree == 1 and self.kind == "lagrange":
            # constant gradients: the face integrand needs no quadrature
            g = np.matmul(w_loc[:, None, :], self.gradlam)[:, 0, :]
            jumpA = g[self.iA] - g[self.iB]          # (nf, 2)
            cA = coef[:, None] * np.matmul(jumpA[:, None, :],
                                           self._gradlamT[self.iA])[:, 0, :]
            cB = -coef[:, None] * np.matmul(jumpA[:, None, :],
                                            self._gradlamT[self.iB])[:, 0, :]
            np.add.at(out, self.iA, cA)
            np.add.at(out, self.iB, cB)
            return out
        gradf = self.face_gradients(w_loc)
        gA = gradf[self.iA, self.jA]
        gB = gradf[self.iB, self.jB][:, ::-1]
        jumpA = gA - gB                              # (nf, nqf, 2), seen from A
        DfA = self.Df[self.jA]
        DfB = self.Df[self.jB]
        tA = np.matmul(jumpA, self._gradlamT[self.iA])       # jump . grad lambda_i
        cA = np.einsum("f,q,fqli,fqi->fl", coef, self.wf, DfA, tA)
        jumpB = -jumpA[:, ::-1]
        tB = np.matmul(jumpB, self._gradlamT[self.iB])
        cB = np.einsum("f,q,fqli,fqi->fl", coef, self.wf, DfB, tB)
        np.add.at(out, self.iA, cA)
        np.add.at(out, self.iB, cB)
        return out

    def jump_production(self, w, theta):
        """Entropy production of the jump term: theta sum_f h_f^2 * oint [grad w]^2."""
        if not len(self.iA):
            return 0.0
        w_loc = self.local_values(w)
        gradf = self.face_gradients(w_loc)
        gA = gradf[self.iA, self.jA]
        gB = gradf[self.iB, self.jB][:, ::-1]
        jump2 = ((gA - gB) ** 2).sum(axis=2)
        return float(theta * np.einsum("f,q,fq->", self.int_len ** 3, self.wf, jump2))

    def _rusanov_diffusion(self, u_loc, uq):
        aq = self.problem.flux.a(uq)
        an = np.einsum("eqd,eid->eqi", aq, self.gradlam)
        kk = self.areas[:, None, None] * np.einsum("q,ql,qmi,eqi->elm",
                                                   self.wv, self.Vv, self.Dv, an)
        alpha = self.nloc * np.abs(kk).max(axis=(1, 2))
        ubar = u_loc.mean(axis=1)
        return alpha[:, None] * (u_loc - ubar[:, None]), alpha

    def ghat_integrals(self, uf, un, fhat):
        """Boundary integral of the configured entropy numerical flux."""
        ent = self.problem.entropy
        n = self.unitn[:, :, None, :]
        if self.scheme.entropy_flux == "eq32":
            if uf is un:
                # continuous traces: {V} = V(u), reuse the trace states
                Vm = ent.V(uf)
                th = ent.theta(uf)
                gh = Vm * fhat - (th[..., 0] * self.unitn[:, :, None, 0]
                                  + th[..., 1] * self.unitn[:, :, None, 1])
            else:
                gh = problems_mod.entropy_numerical_flux(
                    self.problem, ent.V(uf), ent.V(un), n, fhat=fhat)
        else:
            gh = problems_mod.entropy_numerical_flux_llf(
                self.problem, ent.V(uf), ent.V(un), n)
        return (self._flw * gh).sum(axis=(1, 2))

    def _check_states(self, values, where):
        lo, hi = self.problem.flux.admissible_range
        if lo == -np.inf and hi == np.inf:
            return
        if values.size and (values.min() <= lo or values.max() >= hi):
            bad = np.argwhere((values <= lo) | (values >= hi))[0]
            raise DomainError(
                f"inadmissible state {values[tuple(bad)]!r} at {where}, element {bad[0]}",
                value=float(values[tuple(bad)]), where=(where, int(bad[0])))

    # -- full evaluation ---------------------------------------------------

    def residuals(self, u):
        """Per-element residuals with base + correction + filter applied."""
        sch = self.scheme
        u = np.asarray(u, float)
        u_loc = u[self.elem_dofs]
        phi_vol, uq, fq = self._volume_term(u_loc)
        uf = self.trace_values(u_loc)
        self._check_states(uf, "face quadrature")
        fhat, un = self._face_flux(uf)
        phi_face, fluxint = self._face_term(fhat)
        beta = None
        raw_total = None

        if sch.base in ("galerkin", "dg"):
            phi = phi_vol + phi_face
        elif sch.base == "supg":
            phi = phi_vol + phi_face + self.streamline_term(u, sch.supg_theta)
        elif sch.base == "galerkin_jump":
            phi = phi_vol + phi_face + self.jump_term(u, sch.theta_jump)
        elif sch.base == "rusanov":
            diff, _ = self._rusanov_diffusion(u_loc, uq)
            phi = phi_vol + phi_face + diff
        elif sch.base == "limited_rd":
            diff, _ = self._rusanov_diffusion(u_loc, uq)
            phi_low = phi_vol + phi_face + diff
            raw_total, fraw = self.raw_flux_total(uf)
            floor = 1e-14 * (1.0 + np.abs(fraw).max(axis=(1, 2)) * self.hK)
            beta = limiter_beta(phi_low, raw_total, floor=floor)
            phi = beta * raw_total[:, None]
            if sch.theta_stream > 0:
                phi = phi + self.streamline_term(u, sch.theta_stream)
            if sch.theta_jump > 0:
                phi = phi + self.jump_term(u, sch.theta_jump)
        else:  # pragma: no cover
            raise InvalidArgumentError(sch.base)

        ent = self.problem.entropy
        V = ent.V(u)
        V_loc = V[self.elem_dofs]
        E = alpha = r = psi = ghat = None
        if sch.entropy_correction:
            ghat = self.ghat_integrals(uf, un, fhat)
            E = ghat - np.einsum("el,el->e", V_loc, phi)
            # A defect below the round-off scale of its own evaluation is
            # noise; dividing it by a tiny deviation norm would amplify it
            # into O(1e-7) spurious residuals on nearly constant elements.
            floor = 50 * np.finfo(float).eps * (
                1.0 + np.abs(ghat) + np.abs(V_loc * phi).sum(axis=1))
            E = np.where(np.abs(E) <= floor, 0.0, E)
            r, alpha = entropy_mod.correction(V_loc, E, sch.epsilon, return_alpha=True)
            phi = phi + r
        if sch.entropy_filter == "jump":
            psi = self.jump_term(V, sch.filter_theta)
            phi = phi + psi
        elif sch.entropy_filter == "streamline":
            psi = self.streamline_term(V, sch.filter_theta, to_state=ent.u_of_V,
                                       filter_tables=True)
            phi = phi + psi

        return ResidualParts(phi=phi, fluxint=fluxint, fhat=fhat, uf=uf, un=un,
                             V_loc=V_loc, E=E, alpha=alpha, r=r, psi=psi,
                             ghat=ghat, beta=beta, raw_total=raw_total)

    def boundary_residuals(self, u, uf=None):
        """Residuals of the boundary faces, (nb, nloc) plus totals."""
        if not len(self.bnd_e):
            z = np.zeros((0, self.nloc))
            return z, np.zeros(0)
        u = np.asarray(u, float)
        if uf is None:
            uf = self.trace_values(u[self.elem_dofs])
        utr = uf[self.bnd_e, self.bnd_j]           # (nb, nqf)
        n = self.bnd_n[:, None, :]
        if self.scheme.boundary_flux == "llf":
            fhat = problems_mod.numerical_flux_llf(self.problem.flux, utr, self.bnd_ub, n)
        else:
            fhat = problems_mod.numerical_flux_upwind(self.problem.flux, utr, self.bnd_ub, n)
        fown = np.einsum("bqd,bd->bq", self.problem.flux.f(utr), self.bnd_n)
        integrand = fhat - fown
        Vb = self.Vf[self.bnd_j]                   # (nb, nqf, nloc)
        phi = np.einsum("b,q,bql,bq->bl", self.bnd_len, self.wf, Vb, integrand)
        totals = np.einsum("b,q,bq->b", self.bnd_len, self.wf, integrand)
        return phi, totals

    def assemble(self, u, parts=False):
        """Gather per-DoF totals R_sigma over elements and boundary faces."""
        res = self.residuals(u)
        R = np.zeros(self.dofmap.n_dofs)
        np.add.at(R, self.elem_dofs, res.phi)
        phi_b, tot_b = self.boundary_residuals(u, uf=res.uf)
        if len(self.bnd_e):
            np.add.at(R, self.elem_dofs[self.bnd_e], phi_b)
        if parts:
            return R, res, phi_b, tot_b
        return R

    def wave_speed_bound(self, u):
        """Max |a| per element over the volume quadrature points."""
        u_loc = self.local_values(u)
        uq = self.volume_values(u_loc)
        aq = self.problem.flux.a(uq)
        return np.linalg.norm(aq, axis=2).max(axis=1)


def _element_result(ev, u, element):
    res = ev.residuals(np.asarray(u, float))
    return ElementResidual(res.phi[element].copy(), float(res.fluxint[element]))


def _default_base(dofmap):
    return "dg" if dofmap.continuity == "discontinuous" else "galerkin"


def galerkin_residual(mesh, dofmap, problem, u, element, scheme=None):
    """Galerkin (or DG, per the DoF map) residual of one element."""
    scheme = scheme or SchemeConfig(base=_default_base(dofmap))
    return _element_result(ResidualEvaluator(mesh, dofmap, problem, scheme), u, element)


def supg_residual(mesh, dofmap, problem, u, element, theta=1.0):
    scheme = SchemeConfig(base="supg", supg_theta=theta)
    return _element_result(ResidualEvaluator(mesh, dofmap, problem, scheme), u, element)


def jump_stabilized_residual(mesh, dofmap, problem, u, element, theta):
    scheme = SchemeConfig(base="galerkin_jump", theta_jump=theta)
    return _element_result(ResidualEvaluator(mesh, dofmap, problem, scheme), u, element)


def rusanov_residual(mesh, dofmap, problem, u, element):
    scheme = SchemeConfig(base="rusanov")
    return _element_result(ResidualEvaluator(mesh, dofmap, problem, scheme), u, element)


def limited_rd_residual(mesh, dofmap, problem, u, element, config=None):
    config = config or SchemeConfig(base="limited_rd")
    if config.base != "limited_rd":
        raise InvalidArgumentError("config.base must be 'limited_rd'")
    return _element_result(ResidualEvaluator(mesh, dofmap, problem, config), u, element)


def boundary_residual(mesh, dofmap, problem, u, face, flux="llf"):
    """Per-DoF residuals of one boundary face: (values, global dof ids)."""
    scheme = SchemeConfig(base=_default_base(dofmap), boundary_flux=flux)
    ev = ResidualEvaluator(mesh, dofmap, problem, scheme)
    phi_b, _ = ev.boundary_residuals(np.asarray(u, float))
    e, j, _tag = mesh.boundary_faces[face]
    local = list(basis.FACE_DOFS[dofmap.degree][j])
    return phi_b[face, local], dofmap.element_dofs[e, local]
