import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softcable import cable as cb
from softcable import tetmesh as tm


def straight_cable(H, stiffness=100.0, damping=0.01):
    """A cable of H collinear via points inside a thin 2-tet sliver mesh."""
    mesh, _ = tm.make_mesh(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                  [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]),
        np.array([[0, 1, 2, 3], [1, 2, 3, 4]]))
    t = np.linspace(0.25, 0.55, H)
    pts = np.stack([t, t * 0.9, t * 0.9], axis=1)
    emb = tm.embed_points(mesh, pts)
    return cb.Cable(embedding=emb, stiffness=stiffness, damping=damping), mesh


def test_pull_ratio_direct_arithmetic():
    p = cb.pull_ratio_from_geometry([0, 0, -0.02], [0, 0, 0], [0, 0, 0.1])
    assert p == pytest.approx(0.2, abs=1e-15)


def test_pull_ratio_zero_when_unpulled():
    assert cb.pull_ratio_from_geometry([1, 2, 3], [1, 2, 3], [4, 5, 6]) == 0.0


def test_pull_ratio_degenerate_span():
    with pytest.raises(ZeroDivisionError):
        cb.pull_ratio_from_geometry([0, 0, 0], [1, 1, 1], [1, 1, 1])


def test_zero_pull_zero_velocity_forces_are_exactly_zero():
    cable, _ = straight_cable(4)
    pos = np.random.default_rng(0).standard_normal((4, 3))
    for mode in cb.MODES:
        f = cb.via_point_forces(cable, pos, np.zeros((4, 3)), mode=mode,
                                pull_ratio=0.0)
        assert np.all(f == 0.0)


def test_two_point_spring_example():
    cable, _ = straight_cable(2, stiffness=100.0)
    pos = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]])
    f = cb.via_point_forces(cable, pos, np.zeros((2, 3)), pull_ratio=0.5)
    np.testing.assert_allclose(f[0], [5.0, 0.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(f[1], [-5.0, 0.0, 0.0], atol=1e-14)


def test_conserving_telescopes_to_zero_without_damping():
    rng = np.random.default_rng(42)
    for H in range(2, 9):
        cable, _ = straight_cable(H, damping=0.0)
        pos = rng.standard_normal((H, 3))
        vel = rng.standard_normal((H, 3))
        f = cb.via_point_forces(cable, pos, vel, mode="conserving",
                                pull_ratio=0.8)
        assert np.abs(f.sum(axis=0)).max() <= 1e-12 * np.abs(f).max()


def test_literal_injects_momentum_for_three_points():
    cable, _ = straight_cable(3, damping=0.0)
    pos = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0], [0.3, 0.0, 0.0]])
    f = cb.via_point_forces(cable, pos, np.zeros((3, 3)), mode="literal",
                            pull_ratio=1.0)
    assert np.abs(f.sum(axis=0)).max() > 1.0  # the recursion does not telescope


def test_modes_agree_bitwise_at_two_points():
    rng = np.random.default_rng(5)
    cable, _ = straight_cable(2, damping=0.0)
    pos = rng.standard_normal((2, 3))
    vel = rng.standard_normal((2, 3))
    a = cb.via_point_forces(cable, pos, vel, mode="conserving", pull_ratio=0.3)
    b = cb.via_point_forces(cable, pos, vel, mode="literal", pull_ratio=0.3)
    assert a.tobytes() == b.tobytes()


def test_spring_part_linear_in_pull_ratio():
    cable, _ = straight_cable(5, damping=0.0)
    rng = np.random.default_rng(6)
    pos = rng.standard_normal((5, 3))
    f1 = cb.via_point_forces(cable, pos, np.zeros((5, 3)), pull_ratio=0.2)
    f3 = cb.via_point_forces(cable, pos, np.zeros((5, 3)), pull_ratio=0.6)
    np.testing.assert_allclose(f3, 3.0 * f1, rtol=1e-12)


def test_action_reaction_pairing():
    # spring j contributes +s_j at via j and -s_j at via j+1
    cable, _ = straight_cable(4, damping=0.0)
    m_s, _ = cable.matrices("conserving")
    for j in range(3):
        assert m_s[j, j] == 1.0 and m_s[j + 1, j] == -1.0
    assert np.all(m_s.sum(axis=0) == 0.0)


def test_via_force_shape_validation():
    cable, _ = straight_cable(3)
    with pytest.raises(ValueError):
        cb.via_point_forces(cable, np.zeros((2, 3)), np.zeros((2, 3)))


def test_cable_requires_two_points():
    mesh, _ = tm.make_mesh(
        np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                  [0.0, 0.0, 1.0]]),
        np.array([[0, 1, 2, 3]]))
    emb = tm.embed_points(mesh, [[0.25, 0.25, 0.25]])
    with pytest.raises(ValueError):
        cb.Cable(embedding=emb)


# ---------------------------------------------------------------------------
# nodal composition
# ---------------------------------------------------------------------------

def test_nodal_zero_pull_zero_velocity():
    cable, mesh = straight_cable(3)
    f = cb.nodal_cable_forces(cable, mesh.vertices, np.zeros_like(mesh.vertices),
                              pull_ratio=0.0)
    assert np.all(f == 0.0)


def test_nodal_conservation_through_transpose_scatter():
    cable, mesh = straight_cable(4, damping=0.0)
    f = cb.nodal_cable_forces(cable, mesh.vertices, np.zeros_like(mesh.vertices),
                              pull_ratio=0.7)
    assert np.abs(f.sum(axis=0)).max() <= 1e-10


def test_nodal_forces_match_dense_weight_matrix():
    cable, mesh = straight_cable(2, damping=0.0)
    pos = mesh.vertices
    via_pos = tm.interpolate(cable.embedding, pos)
    f_via = cb.via_point_forces(cable, via_pos, np.zeros((2, 3)),
                                pull_ratio=0.4)
    # dense W: H x N with 4 nonzeros per row
    w = np.zeros((2, mesh.num_vertices))
    for i in range(2):
        w[i, cable.embedding.node_indices[i]] = cable.embedding.weights[i]
    expected = w.T @ f_via
    got = cb.nodal_cable_forces(cable, pos, np.zeros_like(pos), pull_ratio=0.4)
    np.testing.assert_allclose(got, expected, atol=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 8), st.floats(0.0, 2.0))
def test_momentum_conservation_property(H, p):
    cable, _ = straight_cable(H, damping=0.0)
    rng = np.random.default_rng(H)
    pos = rng.standard_normal((H, 3))
    f = cb.via_point_forces(cable, pos, np.zeros((H, 3)), mode="conserving",
                            pull_ratio=p)
    assert np.abs(f.sum(axis=0)).max() <= 1e-12 * max(np.abs(f).max(), 1.0)
