"""Finite-volume writing of residual schemes and conservative flux recovery.

One direction expresses a vertex-centered finite-volume scheme as element
residuals over the median-dual sub-edges.  The other recovers antisymmetric
two-point fluxes on a sub-triangulation graph whose nodal sums reproduce
given zero-sum residuals; the recovery is the minimum-norm solution of the
graph-Laplacian system, which on the triangle graph reduces to the closed
form (psi_i - psi_j)/3.
"""

import numpy as np

from .errors import InvalidArgumentError
from .residuals import ElementResidual

#: sub-triangulation edges, 0-based local DoF indices
P1_EDGES = ((0, 1), (0, 2), (1, 2))
P2_EDGES = ((0, 3), (1, 3), (1, 4), (2, 4), (2, 5), (0, 5), (3, 4), (4, 5), (3, 5))


class FluxGraph:
    """Antisymmetric edge fluxes on a small graph of element-local DoFs.

    The flux value of edge (i, j) is the flow from i to j; antisymmetry is
    structural because each undirected edge is stored once.
    """

    def __init__(self, n_nodes, edges, flux):
        self.n_nodes = int(n_nodes)
        self.edges = [tuple(e) for e in edges]
        self.flux = np.asarray(flux, dtype=float)
        if len(self.flux) != len(self.edges):
            raise InvalidArgumentError("one flux value per edge required")

    def node_sums(self):
        """Outgoing flux totals per node."""
        out = np.zeros(self.n_nodes)
        for (i, j), f in zip(self.edges, self.flux):
            out[i] += f
            out[j] -= f
        return out

    def get(self, i, j):
        """Signed flux from i to j."""
        if (i, j) in self.edges:
            return float(self.flux[self.edges.index((i, j))])
        if (j, i) in self.edges:
            return -float(self.flux[self.edges.index((j, i))])
        raise InvalidArgumentError(f"no edge between {i} and {j}")


def _inward_scaled_normals(coords):
    """n_i = 2|K| grad lambda_i: inward normal scaled by the opposite edge."""
    coords = np.asarray(coords, float)
    area = 0.5 * np.cross(coords[1] - coords[0], coords[2] - coords[0])
    n = np.empty((3, 2))
    for i in range(3):
        t = coords[(i + 1) % 3] - coords[(i + 2) % 3]
        n[i] = (t[1], -t[0])
    return n, area


def fv_as_rd(coords, u, numerical_flux):
    """First-order finite-volume scheme written as element residuals.

    ``numerical_flux(uL, uR, n)`` is a consistent antisymmetric two-point
    flux through the scaled normal ``n``.  Sub-edge normals follow the
    median-dual construction n_ij = (n_i - n_j) / 6.  The closure term
    f(u_i) . n_ij is evaluated through the flux's own consistency,
    nf(u_i, u_i, n_ij).  The residual total equals the boundary integral
    of the Lagrange interpolant of the flux.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (3,):
        raise InvalidArgumentError("fv_as_rd is a P1 construction: three vertex states")
    n, area = _inward_scaled_normals(coords)
    if area <= 0:
        raise InvalidArgumentError("vertices must be counterclockwise")
    phi = np.zeros(3)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            nij = (n[i] - n[j]) / 6.0
            phi[i] += numerical_flux(u[i], u[j], nij) - numerical_flux(u[i], u[i], nij)
    flux_integral = 0.5 * sum(numerical_flux(u[i], u[i], n[i]) for i in range(3))
    return ElementResidual(phi, float(flux_integral))


def recover_p1(psi, tol_scale=None):
    """Closed-form recovery on the triangle: fhat_ij = (psi_i - psi_j)/3."""
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (3,):
        raise InvalidArgumentError("recover_p1 expects three residuals")
    _check_zero_sum(psi, tol_scale)
    flux = np.array([(psi[i] - psi[j]) / 3.0 for i, j in P1_EDGES])
    return FluxGraph(3, P1_EDGES, flux)


def _check_zero_sum(psi, tol_scale=None):
    scale = tol_scale if tol_scale is not None else 1.0 + np.abs(psi).sum()
    if abs(psi.sum()) > 1e-12 * scale:
        raise InvalidArgumentError(
            f"residuals must sum to zero (got {psi.sum()!r}); "
            "no antisymmetric flux set can absorb a nonzero total")


def _check_connected(n_nodes, edges):
    reach = {0}
    frontier = [0]
    adj = {i: [] for i in range(n_nodes)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    while frontier:
        k = frontier.pop()
        for m in adj[k]:
            if m not in reach:
                reach.add(m)
                frontier.append(m)
    if len(reach) != n_nodes:
        raise InvalidArgumentError("flux graph must be connected")


def recover_laplacian(psi, edges):
    """Minimum-norm conservative flux recovery on a connected graph.

    Solves L p = psi (L the graph Laplacian, p a potential defined up to a
    constant) and sets fhat_ij = p_i - p_j.  Node sums then reproduce psi
    exactly, and antisymmetry is structural.
    """
    psi = np.asarray(psi, dtype=float)
    n = len(psi)
    edges = [tuple(e) for e in edges]
    _check_zero_sum(psi)
    _check_connected(n, edges)
    L = np.zeros((n, n))
    for i, j in edges:
        L[i, i] += 1.0
        L[j, j] += 1.0
        L[i, j] -= 1.0
        L[j, i] -= 1.0
    p = np.linalg.lstsq(L, psi, rcond=None)[0]
    flux = np.array([p[i] - p[j] for i, j in edges])
    return FluxGraph(n, edges, flux)


# the P2 flux table exactly as printed, indices 1-based; evaluated as a
# diagnostic (suspected transcription typos are reported, not repaired)
_P2_TABLE = {
    (1, 4): ((1 / 12, 1, 4), (1 / 36, 6, 5), (7 / 36, 1, 2), (5 / 36, 3, 1)),
    (1, 6): ((1 / 12, 4, 1), (5 / 36, 5, 1), (7 / 36, 6, 1), (1 / 36, 3, 2)),
    (4, 6): ((2 / 9, 2, 6), (1 / 9, 3, 5)),
    (5, 4): ((2 / 9, 5, 2), (1 / 9, 5, 1)),
    (4, 2): ((7 / 36, 2, 3), (5 / 36, 1, 3), (1 / 12, 6, 3), (1 / 36, 5, 4)),
    (2, 5): ((1 / 36, 2, 1), (5 / 36, 3, 5), (7 / 36, 3, 5), (1 / 12, 3, 6)),
    (5, 3): ((1 / 36, 1, 6), (5 / 36, 3, 5), (7 / 36, 4, 5), (1 / 12, 2, 5)),
    (6, 3): ((1 / 36, 4, 3), (5 / 36, 5, 1), (7 / 36, 5, 6), (1 / 12, 5, 2)),
    (6, 5): ((1 / 9, 1, 3), (2 / 9, 6, 4)),
}


def _eval_p2_table(psi):
    """Printed fluxes as {directed edge (0-based): value}."""
    out = {}
    for (a, b), terms in _P2_TABLE.items():
        val = sum(c * (psi[i - 1] - psi[j - 1]) for c, i, j in terms)
        out[(a - 1, b - 1)] = val
    return out


def verify_p2_table(psi):
    """Evaluate the printed P2 flux table and report node-identity defects.

    Returns a dict with the per-node defect of the printed orientation and
    the best defect over all 2^9 sign assignments (the printed sub-edge
    orientations are implicit in the source figure).  This is a diagnostic:
    nothing is asserted.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (6,):
        raise InvalidArgumentError("verify_p2_table expects six residuals")
    directed = _eval_p2_table(psi)
    values = []
    incidence = []
    for i, j in P2_EDGES:
        if (i, j) in directed:
            values.append(directed[(i, j)])
        else:
            values.append(-directed[(j, i)])
        incidence.append((i, j))
    values = np.array(values)

    def defects(fluxvals):
        s = np.zeros(6)
        for (i, j), f in zip(incidence, fluxvals):
            s[i] += f
            s[j] -= f
        return s - psi

    printed = defects(values)
    best = printed
    best_signs = np.ones(len(values))
    best_norm = np.abs(printed).max()
    for mask in range(1, 2 ** len(values)):
        signs = np.array([1.0 if mask & (1 << k) == 0 else -1.0
                          for k in range(len(values))])
        d = defects(signs * values)
        nrm = np.abs(d).max()
        if nrm < best_norm:
            best_norm = nrm
            best = d
            best_signs = signs
    return {
        "printed_defect": printed,
        "best_defect": best,
        "best_signs": best_signs,
        "edges": list(incidence),
        "flux_printed": values,
    }
