import numpy as np
import pytest

from rdentropy import basis, mesh
from rdentropy.errors import InvalidArgumentError


def test_smallest_rect_mesh():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 1, 1, diagonal="fixed")
    assert m.n_elements == 2
    assert m.n_vertices == 4
    assert len(m.interior_faces) == 1
    assert len(m.boundary_faces) == 4


def test_two_by_two_counts():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 2, 2)
    assert m.n_elements == 8
    assert m.n_vertices == 9


def test_diameter_bound():
    m = mesh.build_rect_mesh((-20, 20, -20, 20), 80, 80)
    assert m.diameters().max() <= np.sqrt(2) * (40 / 80) + 1e-12


def test_positive_areas_and_orientation_fix():
    # clockwise input gets flipped
    verts = [[0, 0], [1, 0], [0, 1]]
    m = mesh.Mesh(verts, [[0, 2, 1]])
    assert m.areas[0] > 0


def test_invalid_args():
    with pytest.raises(InvalidArgumentError):
        mesh.build_rect_mesh((0, 1, 0, 1), 0, 2)
    with pytest.raises(InvalidArgumentError):
        mesh.build_rect_mesh((0, 1, 0, 1), 2, -1)
    with pytest.raises(InvalidArgumentError):
        mesh.build_rect_mesh((1, 1, 0, 1), 2, 2)
    with pytest.raises(InvalidArgumentError):
        mesh.build_dof_map(mesh.build_rect_mesh((0, 1, 0, 1), 1, 1), 3)


def test_normal_closure():
    m = mesh.build_rect_mesh((0, 2, -1, 1), 5, 4)
    normals, lengths = m.face_geometry()
    perimeter = lengths.sum(axis=1)
    closure = np.abs(normals.sum(axis=1))
    assert (closure.max(axis=1) <= 1e-13 * perimeter).all()


def test_interior_faces_referenced_twice():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 3, 3)
    counts = {}
    for e in range(m.n_elements):
        for j in range(3):
            a, b = m.elements[e, j], m.elements[e, (j + 1) % 3]
            key = (min(a, b), max(a, b))
            counts[key] = counts.get(key, 0) + 1
    n_int = sum(1 for v in counts.values() if v == 2)
    n_bnd = sum(1 for v in counts.values() if v == 1)
    assert n_int == len(m.interior_faces)
    assert n_bnd == len(m.boundary_faces)


def test_boundary_tags_match_geometry():
    m = mesh.build_rect_mesh((0, 2, 0, 3), 4, 5)
    for e, j, tag in m.boundary_faces:
        a, b = m.face_endpoints(e, j)
        mid = 0.5 * (a + b)
        expected = {"left": mid[0] < 1e-12, "right": abs(mid[0] - 2) < 1e-12,
                    "bottom": mid[1] < 1e-12, "top": abs(mid[1] - 3) < 1e-12}
        assert expected[tag]


def test_dof_counts():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 1, 1, diagonal="fixed")
    assert mesh.build_dof_map(m, 1).n_dofs == 4
    assert mesh.build_dof_map(m, 2).n_dofs == 9
    assert mesh.build_dof_map(m, 2, "discontinuous").n_dofs == 12
    dm = mesh.build_dof_map(m, 2)
    assert dm.element_dofs.shape == (2, 6)


def test_continuous_face_dofs_shared():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 3, 2)
    for deg in (1, 2):
        dm = mesh.build_dof_map(m, deg)
        for ea, ja, eb, jb in m.interior_faces:
            da = set(dm.face_dofs(ea, ja).tolist())
            db = set(dm.face_dofs(eb, jb).tolist())
            assert da == db
            assert len(da) == deg + 1


def test_discontinuous_no_sharing():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 2, 2)
    dm = mesh.build_dof_map(m, 1, "discontinuous")
    assert dm.n_dofs == 3 * m.n_elements
    flat = dm.element_dofs.ravel()
    assert len(set(flat.tolist())) == len(flat)


def test_dof_points_match_lagrange_points():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 2, 2)
    dm = mesh.build_dof_map(m, 2)
    ref = basis.lagrange_points(2)
    coords = m.element_coords()
    expected = np.einsum("li,eid->eld", ref, coords)
    actual = dm.dof_points[dm.element_dofs]
    assert np.abs(expected - actual).max() < 1e-13


def test_face_pairing_coincides():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 2, 2)
    dm = mesh.build_dof_map(m, 1)
    for f in range(len(m.interior_faces)):
        pairs = mesh.face_pairing(m, dm, f)
        gap = np.abs(pairs[:, 0] - pairs[:, 1]).max()
        assert gap < 1e-14


def test_face_pairing_gauss_positions():
    # bottom boundary face of the unit square from (0,0) to (1,0)
    m = mesh.build_rect_mesh((0, 1, 0, 1), 1, 1, diagonal="fixed")
    rule = basis.edge_rule()
    d = 1 / (2 * np.sqrt(3))
    assert np.allclose(sorted(rule.points), [0.5 - d, 0.5 + d], atol=1e-15)


def test_opposite_normals_cancel_on_pairing():
    m = mesh.build_rect_mesh((0, 1, 0, 1), 2, 2)
    normals, _ = m.face_geometry()
    for ea, ja, eb, jb in m.interior_faces:
        assert np.abs(normals[ea, ja] + normals[eb, jb]).max() < 1e-13


def test_ascii_roundtrip(tmp_path):
    m = mesh.build_rect_mesh((0, 1, 0, 2), 2, 3)
    path = tmp_path / "mesh.txt"
    mesh.write_mesh_ascii(m, path)
    m2 = mesh.read_mesh_ascii(path)
    assert np.array_equal(m.elements, m2.elements)
    assert np.abs(m.vertices - m2.vertices).max() == 0.0


def test_vtk_export(tmp_path):
    m = mesh.build_rect_mesh((0, 1, 0, 1), 2, 2)
    dm = mesh.build_dof_map(m, 2)
    tris = mesh.subtriangles(dm, m)
    assert tris.shape == (4 * m.n_elements, 3)
    path = tmp_path / "field.vtk"
    mesh.write_vtk_polydata(path, dm.dof_points, tris, point_data=np.zeros(dm.n_dofs))
    text = path.read_text()
    assert "DATASET POLYDATA" in text
    assert "POINT_DATA" in text


def test_locate_and_evaluate():
    rng = np.random.default_rng(5)
    for diag in ("fixed", "alternating"):
        m = mesh.build_rect_mesh((0, 2, -1, 1), 5, 4, diagonal=diag)
        dm = mesh.build_dof_map(m, 2)
        coef = rng.normal(size=6)

        def f(p):
            x, y = p[..., 0], p[..., 1]
            return (coef[0] + coef[1] * x + coef[2] * y + coef[3] * x * y
                    + coef[4] * x ** 2 + coef[5] * y ** 2)

        u = f(dm.dof_points)
        pts = np.column_stack([rng.uniform(0, 2, 200), rng.uniform(-1, 1, 200)])
        vals = mesh.evaluate_fe(m, dm, u, pts)
        assert np.abs(vals - f(pts)).max() < 1e-12
