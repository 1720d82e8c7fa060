"""Conformal triangulations with oriented faces and Lagrange DoF maps.

A mesh stores counterclockwise triangles, interior faces as element pairs
and boundary faces with a side tag.  ``DofMap`` numbers the Lagrange points
of degree 1 or 2, either globally continuous or element-local
(discontinuous).  Both objects are immutable after construction and safe
for concurrent reads.
"""

import numpy as np

from . import basis
from .errors import InvalidArgumentError

BOUNDARY_TAGS = ("left", "right", "bottom", "top")


def _signed_areas(vertices, elements):
    p = vertices[elements]
    return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


class Mesh:
    """Triangulation of vertices (nv, 2) and elements (ne, 3).

    Elements are re-oriented counterclockwise at construction.  Faces are
    built by matching sorted vertex pairs: interior faces carry
    ``(elem_a, local_face_a, elem_b, local_face_b)``, boundary faces
    ``(elem, local_face, tag)``.
    """

    def __init__(self, vertices, elements, boundary_tagger=None):
        self.vertices = np.asarray(vertices, dtype=float).copy()
        elements = np.asarray(elements, dtype=int).copy()
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise InvalidArgumentError("vertices must have shape (nv, 2)")
        if elements.ndim != 2 or elements.shape[1] != 3:
            raise InvalidArgumentError("elements must have shape (ne, 3)")
        # enforce positive (counterclockwise) orientation
        areas = _signed_areas(self.vertices, elements)
        flip = areas < 0
        elements[flip] = elements[flip][:, [0, 2, 1]]
        areas = np.abs(areas)
        if np.any(areas <= 0):
            raise InvalidArgumentError("degenerate element with zero area")
        self.elements = elements
        self.areas = areas
        self._build_faces(boundary_tagger)

    def _build_faces(self, boundary_tagger):
        seen = {}
        interior = []
        boundary = []
        for e in range(len(self.elements)):
            for j in range(3):
                a = self.elements[e, j]
                b = self.elements[e, (j + 1) % 3]
                key = (a, b) if a < b else (b, a)
                if key in seen:
                    ea, ja = seen.pop(key)
                    interior.append((ea, ja, e, j))
                else:
                    seen[key] = (e, j)
        for (ea, ja) in seen.values():
            boundary.append((ea, ja))
        if interior:
            self.interior_faces = np.array(sorted(interior), dtype=int)
        else:
            self.interior_faces = np.zeros((0, 4), dtype=int)
        boundary.sort()
        tags = []
        for (e, j) in boundary:
            if boundary_tagger is None:
                tags.append("boundary")
            else:
                a = self.vertices[self.elements[e, j]]
                b = self.vertices[self.elements[e, (j + 1) % 3]]
                tags.append(boundary_tagger(a, b))
        self.boundary_faces = [(e, j, t) for (e, j), t in zip(boundary, tags)]

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    def element_coords(self, e=None):
        """Vertex coordinates per element, (ne, 3, 2)."""
        if e is None:
            return self.vertices[self.elements]
        return self.vertices[self.elements[e]]

    def grad_lambda(self):
        """Gradients of the barycentric coordinates, (ne, 3, 2)."""
        p = self.element_coords()
        g = np.empty_like(p)
        for i in range(3):
            t = p[:, (i + 1) % 3] - p[:, (i + 2) % 3]
            # rotate by -90 degrees: points inward from the opposite edge
            g[:, i, 0] = t[:, 1]
            g[:, i, 1] = -t[:, 0]
        return g / (2.0 * self.areas[:, None, None])

    def face_geometry(self):
        """Scaled outward normals (ne, 3, 2) and face lengths (ne, 3)."""
        p = self.element_coords()
        n = np.empty_like(p)
        for j in range(3):
            t = p[:, (j + 1) % 3] - p[:, j]
            n[:, j, 0] = t[:, 1]
            n[:, j, 1] = -t[:, 0]
        lengths = np.linalg.norm(n, axis=2)
        return n, lengths

    def diameters(self):
        """Element diameters h_K (longest edge)."""
        _, lengths = self.face_geometry()
        return lengths.max(axis=1)

    def face_endpoints(self, e, j):
        a = self.vertices[self.elements[e, j]]
        b = self.vertices[self.elements[e, (j + 1) % 3]]
        return a, b


def _rect_tagger(bounds, tol):
    xmin, xmax, ymin, ymax = bounds

    def tag(a, b):
        m = 0.5 * (a + b)
        if abs(m[0] - xmin) < tol:
            return "left"
        if abs(m[0] - xmax) < tol:
            return "right"
        if abs(m[1] - ymin) < tol:
            return "bottom"
        if abs(m[1] - ymax) < tol:
            return "top"
        return "boundary"

    return tag


def build_rect_mesh(bounds, nx, ny, diagonal="alternating"):
    """Split-square triangulation of an axis-aligned rectangle.

    ``bounds`` is (xmin, xmax, ymin, ymax).  Each of the nx*ny cells is cut
    along one diagonal; ``fixed`` keeps the same diagonal everywhere while
    ``alternating`` flips it on a checkerboard.  Boundary faces are tagged
    left/right/bottom/top.
    """
    xmin, xmax, ymin, ymax = bounds
    if not (nx >= 1 and ny >= 1 and int(nx) == nx and int(ny) == ny):
        raise InvalidArgumentError("nx and ny must be integers >= 1")
    if not (xmax > xmin and ymax > ymin):
        raise InvalidArgumentError("degenerate rectangle bounds")
    if diagonal not in ("fixed", "alternating"):
        raise InvalidArgumentError(f"unknown diagonal mode {diagonal!r}")
    nx, ny = int(nx), int(ny)
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    def vid(i, j):
        return i * (ny + 1) + j

    elements = []
    for i in range(nx):
        for j in range(ny):
            bl, br = vid(i, j), vid(i + 1, j)
            tr, tl = vid(i + 1, j + 1), vid(i, j + 1)
            slash = diagonal == "fixed" or (i + j) % 2 == 0
            if slash:  # diagonal bl-tr
                elements.append((bl, br, tr))
                elements.append((bl, tr, tl))
            else:  # diagonal br-tl
                elements.append((bl, br, tl))
                elements.append((br, tr, tl))
    scale = max(xmax - xmin, ymax - ymin)
    mesh = Mesh(vertices, np.array(elements), _rect_tagger(bounds, 1e-12 * scale))
    mesh.rect_info = (tuple(float(b) for b in bounds), nx, ny, diagonal)
    return mesh


def read_mesh_ascii(path):
    """Read the plain text format: ``nv ne`` header, vertex and element lines."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise InvalidArgumentError(f"{path}: truncated mesh file")
    nv, ne = int(tokens[0]), int(tokens[1])
    need = 2 + 2 * nv + 3 * ne
    if len(tokens) < need:
        raise InvalidArgumentError(f"{path}: expected {need} numbers, found {len(tokens)}")
    vals = np.array(tokens[2:need], dtype=float)
    vertices = vals[: 2 * nv].reshape(nv, 2)
    elements = vals[2 * nv:].reshape(ne, 3).astype(int)
    return Mesh(vertices, elements)


def write_mesh_ascii(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_elements}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        for v0, v1, v2 in mesh.elements:
            fh.write(f"{v0} {v1} {v2}\n")


def write_vtk_polydata(path, points, triangles, point_data=None, name="u"):
    """Legacy-VTK POLYDATA writer with optional scalar point data."""
    points = np.asarray(points, dtype=float)
    triangles = np.asarray(triangles, dtype=int)
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\nrdentropy field\nASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {len(points)} double\n")
        for x, y in points:
            fh.write(f"{x:.16e} {y:.16e} 0.0\n")
        fh.write(f"POLYGONS {len(triangles)} {4 * len(triangles)}\n")
        for tri in triangles:
            fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")
        if point_data is not None:
            data = np.asarray(point_data, dtype=float)
            fh.write(f"POINT_DATA {len(points)}\n")
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in data:
                fh.write(f"{v:.16e}\n")


class DofMap:
    """Global numbering of the Lagrange points of one mesh.

    ``element_dofs`` is (ne, nloc) with nloc = (k+1)(k+2)/2.  Continuous
    maps share the ids of Lagrange points on common faces; discontinuous
    maps number every element independently.
    """

    def __init__(self, degree, continuity, element_dofs, dof_points):
        self.degree = degree
        self.continuity = continuity
        self.element_dofs = element_dofs
        self.dof_points = dof_points
        self.n_dofs = len(dof_points)

    @property
    def n_local(self):
        return basis.n_local_dofs(self.degree)

    def face_dofs(self, e, j):
        """Global ids of the DoFs on local face j of element e."""
        local = basis.FACE_DOFS[self.degree][j]
        return self.element_dofs[e, list(local)]


def build_dof_map(mesh, degree, continuity="continuous"):
    if degree not in (1, 2):
        raise InvalidArgumentError(f"unsupported degree {degree!r}")
    if continuity not in ("continuous", "discontinuous"):
        raise InvalidArgumentError(f"unknown continuity {continuity!r}")
    ne = mesh.n_elements
    nloc = basis.n_local_dofs(degree)
    if continuity == "discontinuous":
        element_dofs = np.arange(ne * nloc).reshape(ne, nloc)
        ref = basis.lagrange_points(degree)
        coords = mesh.element_coords()
        pts = np.einsum("li,eid->eld", ref, coords).reshape(ne * nloc, 2)
        return DofMap(degree, continuity, element_dofs, pts)

    element_dofs = np.empty((ne, nloc), dtype=int)
    element_dofs[:, :3] = mesh.elements
    points = [mesh.vertices]
    if degree == 2:
        edge_ids = {}
        mids = []
        next_id = mesh.n_vertices
        for e in range(ne):
            for j in range(3):
                a = mesh.elements[e, j]
                b = mesh.elements[e, (j + 1) % 3]
                key = (a, b) if a < b else (b, a)
                if key not in edge_ids:
                    edge_ids[key] = next_id
                    mids.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
                    next_id += 1
                element_dofs[e, 3 + j] = edge_ids[key]
        if mids:
            points.append(np.array(mids))
    dof_points = np.vstack(points)
    return DofMap(degree, continuity, element_dofs, dof_points)


def face_pairing(mesh, dofmap, face):
    """Quadrature points of an interior face as seen from each side.

    Returns an array (nq, 2, 2): entry [q, 0] is the q-th point in the
    traversal of side A, entry [q, 1] the geometrically identical point in
    the reversed traversal of side B.  The edge rule being symmetric, side
    B's own ordering visits the same physical points backwards, so interior
    face integrals telescope with opposite normals.
    """
    ea, ja, eb, jb = mesh.interior_faces[face]
    rule = basis.edge_rule()
    a0, a1 = mesh.face_endpoints(ea, ja)
    b0, b1 = mesh.face_endpoints(eb, jb)
    s = rule.points
    pts_a = a0[None, :] + s[:, None] * (a1 - a0)[None, :]
    pts_b = b0[None, :] + s[:, None] * (b1 - b0)[None, :]
    out = np.empty((len(s), 2, 2))
    out[:, 0] = pts_a
    out[:, 1] = pts_b[::-1]
    return out


def locate_points(mesh, points):
    """Containing element and barycentric coordinates on a rect mesh.

    Needs the structured metadata left by ``build_rect_mesh``; points are
    clipped into the rectangle.  Returns (element ids, (n, 3) barycentric).
    """
    if not hasattr(mesh, "rect_info"):
        raise InvalidArgumentError("point location needs a build_rect_mesh mesh")
    (xmin, xmax, ymin, ymax), nx, ny, diagonal = mesh.rect_info
    pts = np.asarray(points, dtype=float)
    dx = (xmax - xmin) / nx
    dy = (ymax - ymin) / ny
    fx = np.clip((pts[:, 0] - xmin) / dx, 0.0, nx * (1 - 1e-16))
    fy = np.clip((pts[:, 1] - ymin) / dy, 0.0, ny * (1 - 1e-16))
    i = np.minimum(fx.astype(int), nx - 1)
    j = np.minimum(fy.astype(int), ny - 1)
    xi = fx - i
    eta = fy - j
    cell = i * ny + j
    slash = (diagonal == "fixed") | ((i + j) % 2 == 0)
    lower = np.where(slash, eta <= xi, xi + eta <= 1.0)
    elems = 2 * cell + np.where(lower, 0, 1)
    lam = np.empty((len(pts), 3))
    # barycentric coordinates per split-square sub-triangle
    s_low = slash & lower      # (bl, br, tr)
    s_up = slash & ~lower      # (bl, tr, tl)
    a_low = ~slash & lower     # (bl, br, tl)
    a_up = ~slash & ~lower     # (br, tr, tl)
    lam[s_low] = np.stack([1 - xi[s_low], xi[s_low] - eta[s_low], eta[s_low]], axis=1)
    lam[s_up] = np.stack([1 - eta[s_up], xi[s_up], eta[s_up] - xi[s_up]], axis=1)
    lam[a_low] = np.stack([1 - xi[a_low] - eta[a_low], xi[a_low], eta[a_low]], axis=1)
    lam[a_up] = np.stack([1 - eta[a_up], xi[a_up] + eta[a_up] - 1, 1 - xi[a_up]], axis=1)
    return elems, lam


def evaluate_fe(mesh, dofmap, u, points):
    """Evaluate a finite-element field at arbitrary points of a rect mesh."""
    elems, lam = locate_points(mesh, points)
    vals = basis.shape_values(dofmap.degree, "lagrange", lam)
    return np.einsum("nl,nl->n", np.asarray(u, float)[dofmap.element_dofs[elems]], vals)


def subtriangles(dofmap, mesh):
    """P1 plotting connectivity over the DoF points.

    Degree 1 returns the elements themselves; degree 2 splits every element
    into its four sub-triangles through the edge midpoints.
    """
    ed = dofmap.element_dofs
    if dofmap.degree == 1:
        return ed.copy()
    parts = [ed[:, [0, 3, 5]], ed[:, [3, 1, 4]], ed[:, [5, 4, 2]], ed[:, [3, 4, 5]]]
    return np.vstack(parts)
