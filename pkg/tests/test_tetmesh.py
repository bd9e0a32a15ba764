import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softcable import tetmesh as tm

# A regular-ish reference tet used throughout.
TET_VERTS = np.array([
    [0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
])
TET = np.array([[0, 1, 2, 3]])


def two_tet_mesh():
    verts = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, 1.0, 1.0],
    ])
    tets = np.array([[0, 1, 2, 3], [1, 2, 3, 4]])
    mesh, _ = tm.make_mesh(verts, tets)
    return mesh


def test_single_tet_has_four_surface_triangles():
    mesh, n_flipped = tm.make_mesh(TET_VERTS, TET)
    assert n_flipped == 0
    assert len(mesh.surface_tris) == 4
    assert np.all(tm.tet_volumes(mesh.vertices, mesh.tets) > 0)


def test_make_mesh_reorients_negative_tets():
    mesh, n_flipped = tm.make_mesh(TET_VERTS, np.array([[1, 0, 2, 3]]))
    assert n_flipped == 1
    assert tm.tet_volumes(mesh.vertices, mesh.tets)[0] > 0


def test_out_of_range_index_names_the_tet():
    with pytest.raises(tm.MeshError, match="tet 0"):
        tm.make_mesh(TET_VERTS, np.array([[0, 1, 2, 99]]))


def test_degenerate_tet_rejected_with_id():
    verts = np.vstack([TET_VERTS, TET_VERTS[0]])
    with pytest.raises(tm.MeshError, match="tet 1"):
        tm.make_mesh(verts, np.array([[0, 1, 2, 3], [0, 1, 2, 4]]))


def test_surface_is_boundary_each_face_once():
    mesh = two_tet_mesh()
    # every boundary face of the 2-tet complex appears exactly once
    assert len(mesh.surface_tris) == 6
    keys = {tuple(sorted(t)) for t in mesh.surface_tris}
    assert len(keys) == 6
    assert (1, 2, 3) not in keys  # the shared interior face


def test_json_round_trip(tmp_path):
    mesh, paths = tm.generate_robot("finger", segments=3, n_cables=1)
    p = tmp_path / "finger.json"
    tm.save_mesh(mesh, p, via_paths=paths)
    back = tm.load_mesh(p)
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.tets, mesh.tets)
    np.testing.assert_array_equal(back.fixed_nodes, mesh.fixed_nodes)
    back_paths = tm.load_via_paths(p)
    assert len(back_paths) == len(paths)
    np.testing.assert_allclose(back_paths[0], paths[0])


def test_tetgen_import(tmp_path):
    (tmp_path / "m.node").write_text(
        "# comment\n4 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n")
    (tmp_path / "m.ele").write_text("1 4 0\n1 1 2 3 4\n")
    mesh = tm.load_mesh(tmp_path / "m.node", fmt="tetgen")
    assert mesh.num_vertices == 4 and mesh.num_tets == 1


def test_load_mesh_missing_key(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vertices": [[0, 0, 0]]}))
    with pytest.raises(tm.MeshError, match="tets"):
        tm.load_mesh(p)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def test_finger_via_points_embed_with_nonnegative_weights():
    mesh, paths = tm.generate_robot("finger", segments=3, n_cables=1)
    emb = tm.embed_points(mesh, paths[0])
    assert (emb.weights >= 0).all()
    np.testing.assert_allclose(emb.weights.sum(axis=1), 1.0, atol=1e-12)


def test_starfish_five_cables_and_closed_form_count():
    mesh, paths = tm.generate_robot("starfish", segments=4, cross_segments=2,
                                    n_fingers=5)
    assert len(paths) == 5
    per_finger = tm.grid_vertex_count(4, 2, 2)
    assert mesh.num_vertices == 5 * per_finger
    assert mesh.num_tets == 5 * tm.grid_tet_count(4, 2, 2)


def test_trunk_counts_within_20pct_of_reference_scale():
    # documented resolution for the full-scale trunk: 34 axial x 7 cross
    mesh, _ = tm.generate_robot("trunk", segments=34, cross_segments=7,
                                n_cables=5)
    assert abs(mesh.num_vertices - 2559) <= 0.20 * 2559
    assert abs(mesh.num_tets - 9407) <= 0.20 * 9407
    assert np.all(tm.tet_volumes(mesh.vertices, mesh.tets) > 0)


def test_generator_rejects_too_few_segments():
    with pytest.raises(tm.MeshError):
        tm.generate_robot("finger", segments=1)
    with pytest.raises(tm.MeshError, match="unknown robot kind"):
        tm.generate_robot("octopus")


# ---------------------------------------------------------------------------
# embedding
# ---------------------------------------------------------------------------

def test_centroid_weights_quarter():
    mesh, _ = tm.make_mesh(TET_VERTS, TET)
    emb = tm.embed_points(mesh, [TET_VERTS.mean(axis=0)])
    np.testing.assert_allclose(emb.weights[0], 0.25, atol=1e-12)


def test_shared_vertex_tie_breaks_to_lowest_tet():
    mesh = two_tet_mesh()
    # vertex 1 belongs to both tets 0 and 1
    emb = tm.embed_points(mesh, [mesh.vertices[1]])
    assert emb.tet_indices[0] == 0
    assert np.isclose(emb.weights[0].max(), 1.0)


def test_point_outside_mesh_reports_index():
    mesh, _ = tm.make_mesh(TET_VERTS, TET)
    with pytest.raises(tm.EmbeddingError, match="point 0"):
        tm.embed_points(mesh, [[5.0, 5.0, 5.0]])


def test_reconstruction_of_random_interior_points():
    mesh = two_tet_mesh()
    rng = np.random.default_rng(7)
    w = rng.dirichlet(np.ones(4), size=20)
    pts = np.vstack([w[:10] @ mesh.vertices[mesh.tets[0]],
                     w[10:] @ mesh.vertices[mesh.tets[1]]])
    emb = tm.embed_points(mesh, pts)
    np.testing.assert_allclose(tm.interpolate(emb, mesh.vertices), pts,
                               atol=1e-9)


def test_interpolate_constant_and_linear_fields():
    mesh = two_tet_mesh()
    pts = np.array([[0.25, 0.25, 0.25], [0.5, 0.5, 0.5]])
    emb = tm.embed_points(mesh, pts)
    c = np.tile([1.0, -2.0, 3.0], (mesh.num_vertices, 1))
    np.testing.assert_allclose(tm.interpolate(emb, c), c[:2], atol=1e-12)
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal(3)
    field = mesh.vertices @ a.T + b
    np.testing.assert_allclose(tm.interpolate(emb, field), pts @ a.T + b,
                               atol=1e-10)


def test_interpolate_length_mismatch():
    mesh = two_tet_mesh()
    emb = tm.embed_points(mesh, [[0.25, 0.25, 0.25]])
    with pytest.raises(tm.EmbeddingError):
        tm.interpolate(emb, np.zeros((3, 3)))


# ---------------------------------------------------------------------------
# scatter
# ---------------------------------------------------------------------------

def test_transpose_scatter_centroid_splits_equally():
    mesh, _ = tm.make_mesh(TET_VERTS, TET)
    emb = tm.embed_points(mesh, [TET_VERTS.mean(axis=0)])
    nodal = tm.scatter_forces(emb, np.array([[4.0, 0.0, 0.0]]))
    np.testing.assert_allclose(nodal, np.tile([1.0, 0.0, 0.0], (4, 1)),
                               atol=1e-12)


def test_zero_forces_scatter_to_zero_both_modes():
    mesh = two_tet_mesh()
    emb = tm.embed_points(mesh, [[0.25, 0.25, 0.25], [0.5, 0.5, 0.5]])
    for mode in ("transpose", "pseudoinverse"):
        nodal = tm.scatter_forces(emb, np.zeros((2, 3)), mode=mode)
        assert np.all(nodal == 0.0)


def test_transpose_scatter_conserves_total_force():
    mesh = two_tet_mesh()
    rng = np.random.default_rng(1)
    pts = np.array([[0.2, 0.2, 0.2], [0.3, 0.3, 0.35], [0.5, 0.5, 0.55]])
    emb = tm.embed_points(mesh, pts)
    f = rng.standard_normal((3, 3))
    nodal = tm.scatter_forces(emb, f)
    np.testing.assert_allclose(nodal.sum(axis=0), f.sum(axis=0), rtol=1e-13)


def test_interpolation_scatter_adjointness():
    mesh = two_tet_mesh()
    rng = np.random.default_rng(2)
    pts = np.array([[0.2, 0.2, 0.2], [0.3, 0.3, 0.35], [0.5, 0.5, 0.55]])
    emb = tm.embed_points(mesh, pts)
    u = rng.standard_normal((mesh.num_vertices, 3))
    f = rng.standard_normal((3, 3))
    lhs = np.sum(tm.interpolate(emb, u) * f)
    rhs = np.sum(u * tm.scatter_forces(emb, f))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs))


def test_pseudoinverse_scatter_round_trips_consistent_forces():
    mesh = two_tet_mesh()
    rng = np.random.default_rng(3)
    pts = np.array([[0.2, 0.2, 0.2], [0.3, 0.3, 0.35], [0.5, 0.5, 0.55]])
    emb = tm.embed_points(mesh, pts)
    f = rng.standard_normal((3, 3))
    nodal = tm.scatter_forces(emb, f, mode="pseudoinverse")
    np.testing.assert_allclose(tm.interpolate(emb, nodal), f, atol=1e-8)


def test_pseudoinverse_rank_deficiency_is_an_error():
    mesh, _ = tm.make_mesh(TET_VERTS, TET)
    # 5 via points in one tet: W has 5 rows but rank <= 4
    pts = np.array([[0.2, 0.2, 0.2], [0.25, 0.25, 0.2], [0.2, 0.25, 0.25],
                    [0.3, 0.2, 0.2], [0.22, 0.22, 0.22]])
    emb = tm.embed_points(mesh, pts)
    with pytest.raises(tm.EmbeddingError, match="rank"):
        tm.scatter_forces(emb, np.ones((5, 3)), mode="pseudoinverse")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.05, 0.95), min_size=3, max_size=3),
       st.integers(0, 1))
def test_partition_of_unity_property(coords, which_tet):
    mesh = two_tet_mesh()
    # map the unit cube sample into the chosen tet via barycentric folding
    w = np.sort(np.array([0.0, *coords, 1.0]))
    bary = np.diff(w)
    pt = bary @ mesh.vertices[mesh.tets[which_tet]]
    emb = tm.embed_points(mesh, [pt])
    assert abs(emb.weights[0].sum() - 1.0) <= 1e-12
    assert (emb.weights[0] >= -1e-12).all()
