"""Tetrahedral volume meshes, procedural robot geometry, and barycentric embeddings.

A :class:`TetMesh` stores vertices in meters, positively oriented tets, the
oriented boundary surface, and the set of spatially clamped nodes.  Via points
(cable anchors) are coupled to the mesh through a :class:`BarycentricEmbedding`,
which supports interpolation of nodal fields to the embedded points and the
reverse scatter of point forces onto the nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class MeshError(ValueError):
    """Invalid mesh data (bad indices, degenerate tets, parse failures)."""


class EmbeddingError(ValueError):
    """A point could not be embedded, or a scatter system is rank deficient."""


# Local faces of a positively oriented tet (v0,v1,v2,v3), outward-winding.
_TET_FACES = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]], dtype=np.int64)


def tet_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Signed volume of each tet: det[v1-v0, v2-v0, v3-v0] / 6."""
    v = vertices[tets]
    e = v[:, 1:] - v[:, :1]
    return np.linalg.det(e) / 6.0


def extract_surface(tets: np.ndarray) -> np.ndarray:
    """Boundary triangles of a tet complex, outward-oriented.

    A face is on the boundary iff it appears in exactly one tet.
    """
    faces = tets[:, _TET_FACES].reshape(-1, 3)
    key = np.sort(faces, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return faces[counts[inverse] == 1]


@dataclass(frozen=True)
class TetMesh:
    """Tetrahedral mesh with boundary surface and clamped-node set.

    Immutable after construction; safe to share across threads.
    """

    vertices: np.ndarray          # (N, 3) float64, meters
    tets: np.ndarray              # (M, 4) int64, positive orientation
    surface_tris: np.ndarray      # (S, 3) int64, outward winding
    fixed_nodes: np.ndarray       # sorted int64 indices

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_tets(self) -> int:
        return len(self.tets)

    def free_mask(self) -> np.ndarray:
        """(N,) bool, True for nodes that are not clamped."""
        mask = np.ones(self.num_vertices, dtype=bool)
        mask[self.fixed_nodes] = False
        return mask


def make_mesh(vertices, tets, fixed_nodes=(), *, degenerate_tol: float = 1e-14):
    """Validate and assemble a :class:`TetMesh`.

    Negative-volume tets are reoriented (last two indices swapped) and counted;
    tets with |volume| below ``degenerate_tol`` m^3 are rejected.

    Returns (mesh, num_reoriented).
    """
    vertices = np.ascontiguousarray(vertices, dtype=np.float64)
    tets = np.ascontiguousarray(tets, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshError(f"vertices must be (N, 3), got {vertices.shape}")
    if tets.ndim != 2 or tets.shape[1] != 4:
        raise MeshError(f"tets must be (M, 4), got {tets.shape}")
    n = len(vertices)
    bad = np.flatnonzero((tets < 0).any(axis=1) | (tets >= n).any(axis=1))
    if bad.size:
        raise MeshError(
            f"tet {bad[0]} references vertex index out of range [0, {n}): "
            f"{tets[bad[0]].tolist()}"
        )
    vols = tet_volumes(vertices, tets)
    degenerate = np.flatnonzero(np.abs(vols) <= degenerate_tol)
    if degenerate.size:
        raise MeshError(f"tet {degenerate[0]} is degenerate (volume {vols[degenerate[0]]:.3e} m^3)")
    flipped = np.flatnonzero(vols < 0)
    if flipped.size:
        tets = tets.copy()
        tets[flipped, 2], tets[flipped, 3] = (
            tets[flipped, 3].copy(),
            tets[flipped, 2].copy(),
        )
    fixed = np.unique(np.asarray(fixed_nodes, dtype=np.int64).reshape(-1))
    if fixed.size and (fixed[0] < 0 or fixed[-1] >= n):
        raise MeshError("fixed node index out of range")
    mesh = TetMesh(
        vertices=vertices,
        tets=tets,
        surface_tris=extract_surface(tets),
        fixed_nodes=fixed,
    )
    return mesh, int(flipped.size)


# ---------------------------------------------------------------------------
# File I/O
#
# Canonical JSON schema:
#   {"vertices": [[x,y,z]...], "tets": [[i,j,k,l]...], "fixed": [i...],
#    "cables": [{"via_points": [[x,y,z]...]}...]}
# TetGen .node/.ele pairs are accepted read-only.
# ---------------------------------------------------------------------------

def save_mesh(mesh: TetMesh, path, via_paths=None) -> None:
    """Write a mesh (and optional cable via-point paths) to canonical JSON."""
    doc = {
        "vertices": mesh.vertices.tolist(),
        "tets": mesh.tets.tolist(),
        "fixed": mesh.fixed_nodes.tolist(),
        "cables": [
            {"via_points": np.asarray(p, dtype=np.float64).tolist()}
            for p in (via_paths or [])
        ],
    }
    with open(path, "w") as f:
        json.dump(doc, f)


def load_mesh(path, fmt: str = "json") -> TetMesh:
    """Load a mesh from canonical JSON or a TetGen .node/.ele pair.

    For ``fmt="tetgen"``, ``path`` is the ``.node`` file; the matching ``.ele``
    file must sit next to it.
    """
    if fmt == "json":
        mesh, _ = make_mesh(*_read_json_arrays(path))
        return mesh
    if fmt == "tetgen":
        mesh, _ = make_mesh(*_read_tetgen(path))
        return mesh
    raise MeshError(f"unknown mesh format {fmt!r}")


def load_via_paths(path) -> list[np.ndarray]:
    """Cable via-point paths stored alongside a canonical JSON mesh."""
    with open(path) as f:
        doc = json.load(f)
    return [np.asarray(c["via_points"], dtype=np.float64) for c in doc.get("cables", [])]


def _read_json_arrays(path):
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise MeshError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("vertices", "tets"):
        if key not in doc:
            raise MeshError(f"{path}: missing required key {key!r}")
    return doc["vertices"], doc["tets"], doc.get("fixed", [])


def _read_tetgen(node_path):
    node_path = str(node_path)
    if not node_path.endswith(".node"):
        raise MeshError(f"{node_path}: tetgen format expects a .node file")
    ele_path = node_path[: -len(".node")] + ".ele"

    def rows(p):
        with open(p) as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if line:
                    yield line.split()

    node_rows = list(rows(node_path))
    if not node_rows:
        raise MeshError(f"{node_path}: empty file")
    count = int(node_rows[0][0])
    body = node_rows[1 : 1 + count]
    if len(body) != count:
        raise MeshError(f"{node_path}: expected {count} node rows, found {len(body)}")
    first_index = int(body[0][0])
    vertices = np.array([[float(x) for x in r[1:4]] for r in body])

    ele_rows = list(rows(ele_path))
    if not ele_rows:
        raise MeshError(f"{ele_path}: empty file")
    ecount = int(ele_rows[0][0])
    ebody = ele_rows[1 : 1 + ecount]
    if len(ebody) != ecount:
        raise MeshError(f"{ele_path}: expected {ecount} element rows, found {len(ebody)}")
    tets = np.array([[int(x) for x in r[1:5]] for r in ebody], dtype=np.int64) - first_index
    return vertices, tets, []


# ---------------------------------------------------------------------------
# Procedural generators
#
# The generators triangulate a structured hexahedral grid with the Kuhn
# (Freudenthal) 6-tet split, which is conforming across neighboring cells.
# Vertex count is the closed form prod(n_axis + 1); tet count 6 * prod(n_axis).
# ---------------------------------------------------------------------------

# Axis orders of the six Kuhn path tets inside one cell, with parity fixes so
# every tet comes out positively oriented.
_KUHN_PERMS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
_PERM_SIGN = {p: int(np.sign(np.linalg.det(np.eye(3)[list(p)]))) for p in _KUHN_PERMS}

# Via points are dropped at these fractional cell coordinates along the two
# non-axial directions; pairwise-distinct fractions keep them off the Kuhn
# cut planes (x=y, y=z, x=z in local coordinates) and cell faces.
_VIA_AXIAL_FRACTION = 0.431


def grid_vertex_count(nx: int, ny: int, nz: int) -> int:
    """Closed-form vertex count of the structured grid generators."""
    return (nx + 1) * (ny + 1) * (nz + 1)


def grid_tet_count(nx: int, ny: int, nz: int) -> int:
    """Closed-form tet count of the structured grid generators."""
    return 6 * nx * ny * nz


def _box_grid(nx, ny, nz, size):
    """Vertices and Kuhn tets of an [0,sx] x [0,sy] x [0,sz] box grid."""
    sx, sy, sz = size
    xs = np.linspace(0.0, sx, nx + 1)
    ys = np.linspace(0.0, sy, ny + 1)
    zs = np.linspace(0.0, sz, nz + 1)
    gx, gy, gz = np.meshgrid(xs, ys, zs, indexing="ij")
    vertices = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    tets = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                base = np.array([i, j, k])
                for perm in _KUHN_PERMS:
                    corners = [base.copy()]
                    c = base.copy()
                    for axis in perm:
                        c = c.copy()
                        c[axis] += 1
                        corners.append(c)
                    ids = [vid(*c) for c in corners]
                    if _PERM_SIGN[perm] < 0:
                        ids[2], ids[3] = ids[3], ids[2]
                    tets.append(ids)
    return vertices, np.array(tets, dtype=np.int64)


def _axial_via_path(nx, dx, y, z):
    """Via points along +x, one per cell at an off-cut-plane fraction."""
    xs = (np.arange(nx) + _VIA_AXIAL_FRACTION) * dx
    return np.column_stack([xs, np.full(nx, y), np.full(nx, z)])


def generate_finger(
    length: float = 0.16,
    width: float = 0.06,
    height: float = 0.06,
    segments: int = 5,
    cross_segments: int = 2,
    n_cables: int = 1,
    cable_offset_fraction: float = 0.3,
):
    """A clamped box finger with cables running lengthwise.

    The base (x = 0 face) is fixed.  Cables sit off the neutral axis at
    ``cable_offset_fraction`` of the half cross-section, spaced evenly around
    the axis, so a pull bends the finger toward its cable.

    Returns (mesh, via_paths).
    """
    if segments < 2:
        raise MeshError("finger needs at least 2 segments")
    nx, ny, nz = segments, cross_segments, cross_segments
    vertices, tets = _box_grid(nx, ny, nz, (length, width, height))
    vertices = vertices - np.array([0.0, width / 2, height / 2])
    fixed = np.flatnonzero(np.abs(vertices[:, 0]) < 1e-12)
    mesh, _ = make_mesh(vertices, tets, fixed)

    dx = length / nx
    via_paths = []
    for c in range(n_cables):
        theta = 2.0 * np.pi * c / max(n_cables, 1) + 0.5 * np.pi
        y = cable_offset_fraction * (width / 2) * np.cos(theta)
        z = cable_offset_fraction * (height / 2) * np.sin(theta)
        via_paths.append(_axial_via_path(nx, dx, y, z))
    via_paths = [_nudge_interior(mesh, p, dx) for p in via_paths]
    return mesh, via_paths


def generate_trunk(
    length: float = 0.35,
    radius: float = 0.05,
    segments: int = 34,
    cross_segments: int = 7,
    n_cables: int = 2,
    cable_radius_fraction: float = 0.55,
):
    """A clamped cylindrical trunk with cables spaced around the circumference.

    The square cross-section grid is warped onto a disk with the elliptical
    square-to-disk map, keeping the Kuhn tets valid.  At the default
    resolution (34 x 7 x 7) the counts land within a few percent of a
    2559-vertex / 9407-tet reference trunk.
    """
    if segments < 2:
        raise MeshError("trunk needs at least 2 segments")
    nx, nc = segments, cross_segments
    vertices, tets = _box_grid(nx, nc, nc, (length, 2 * radius, 2 * radius))
    vertices = vertices - np.array([0.0, radius, radius])
    # Elliptical square-to-disk map on the (y, z) cross-section.
    u = vertices[:, 1] / radius
    v = vertices[:, 2] / radius
    vertices[:, 1] = radius * u * np.sqrt(np.maximum(1.0 - v * v / 2.0, 0.0))
    vertices[:, 2] = radius * v * np.sqrt(np.maximum(1.0 - u * u / 2.0, 0.0))
    fixed = np.flatnonzero(np.abs(vertices[:, 0]) < 1e-12)
    mesh, _ = make_mesh(vertices, tets, fixed)

    dx = length / nx
    via_paths = []
    for c in range(n_cables):
        theta = 2.0 * np.pi * c / max(n_cables, 1)
        y = cable_radius_fraction * radius * np.cos(theta)
        z = cable_radius_fraction * radius * np.sin(theta)
        via_paths.append(_nudge_interior(mesh, _axial_via_path(nx, dx, y, z), dx))
    return mesh, via_paths


def generate_starfish(
    finger_length: float = 0.12,
    width: float = 0.035,
    height: float = 0.035,
    segments: int = 16,
    cross_segments: int = 2,
    n_fingers: int = 5,
    hub_radius: float = 0.03,
):
    """A five-finger gripper: radial fingers clamped at a rigid hub.

    Each finger is its own watertight beam; the inner-end nodes are fixed,
    standing in for a rigid palm.  One cable runs through each finger near its
    lower face, so pulling curls the fingers downward around an object below
    the hub.  Vertex count is n_fingers * (segments+1) * (cross+1)^2.
    """
    if segments < 2:
        raise MeshError("starfish fingers need at least 2 segments")
    all_verts, all_tets, fixed, via_paths = [], [], [], []
    offset = 0
    for f in range(n_fingers):
        verts, tets = _box_grid(segments, cross_segments, cross_segments,
                                (finger_length, width, height))
        verts = verts - np.array([0.0, width / 2, height / 2])
        theta = 2.0 * np.pi * f / n_fingers
        rot = np.array([
            [np.cos(theta), -np.sin(theta), 0.0],
            [np.sin(theta), np.cos(theta), 0.0],
            [0.0, 0.0, 1.0],
        ])
        verts = verts @ rot.T + rot @ np.array([hub_radius, 0.0, 0.0])
        fixed.append(offset + np.flatnonzero(
            np.abs(verts @ rot[:, 0] - hub_radius) < 1e-9))
        all_verts.append(verts)
        all_tets.append(tets + offset)

        dx = finger_length / segments
        path = _axial_via_path(segments, dx, 0.0, -0.3 * height / 2)
        via_paths.append(path @ rot.T + rot @ np.array([hub_radius, 0.0, 0.0]))
        offset += len(verts)
    mesh, _ = make_mesh(np.vstack(all_verts), np.vstack(all_tets), np.concatenate(fixed))
    dx = finger_length / segments
    via_paths = [_nudge_interior(mesh, p, dx) for p in via_paths]
    return mesh, via_paths


_GENERATORS = {
    "finger": generate_finger,
    "trunk": generate_trunk,
    "starfish": generate_starfish,
}


def generate_robot(kind: str, **params):
    """Dispatch to a procedural robot generator.

    Returns (mesh, via_paths); every via point embeds strictly inside a tet.
    """
    if kind not in _GENERATORS:
        raise MeshError(f"unknown robot kind {kind!r}; choose from {sorted(_GENERATORS)}")
    return _GENERATORS[kind](**params)


def _nudge_interior(mesh, points, cell, min_weight=1e-7):
    """Nudge any via point that lands on a tet face strictly into a tet."""
    points = np.array(points, dtype=np.float64)
    step = cell * np.array([1e-5, 2e-5, 3e-5])
    for attempt in range(8):
        try:
            emb = embed_points(mesh, points)
        except EmbeddingError:
            points = points + step
            continue
        low = emb.weights.min(axis=1) < min_weight
        if not low.any():
            return points
        points[low] += step
    raise MeshError("could not place via points strictly inside the mesh")


# ---------------------------------------------------------------------------
# Barycentric embedding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BarycentricEmbedding:
    """Per-point host tets and barycentric weights (the sparse coupling matrix).

    Each row holds the four convex weights of one embedded point inside its
    host tet; rows sum to one.  ``node_indices`` caches the host tets' vertex
    ids for fast interpolation/scatter.
    """

    tet_indices: np.ndarray    # (H,) int64
    node_indices: np.ndarray   # (H, 4) int64
    weights: np.ndarray        # (H, 4) float64, >= 0, rows sum to 1
    num_vertices: int

    @property
    def num_points(self) -> int:
        return len(self.tet_indices)


def embed_points(mesh: TetMesh, points, tol: float = 1e-9) -> BarycentricEmbedding:
    """Find each point's host tet and barycentric weights.

    Points on shared faces/vertices resolve to the lowest containing tet
    index.  A point outside every tet (beyond ``tol`` on the weights) raises
    :class:`EmbeddingError` naming the point and its nearest tet.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    v = mesh.vertices[mesh.tets]                    # (M, 4, 3)
    dm = np.swapaxes(v[:, 1:] - v[:, :1], 1, 2)     # (M, 3, 3) edge columns
    dm_inv = np.linalg.inv(dm)
    rel = points[:, None, :] - v[None, :, 0, :]     # (P, M, 3)
    w123 = np.einsum("mij,pmj->pmi", dm_inv, rel)   # (P, M, 3)
    w0 = 1.0 - w123.sum(axis=2)
    w = np.concatenate([w0[:, :, None], w123], axis=2)  # (P, M, 4)
    inside = (w.min(axis=2) >= -tol)
    host = np.argmax(inside, axis=1)                # first (lowest) hit
    found = inside[np.arange(len(points)), host]
    if not found.all():
        bad = int(np.flatnonzero(~found)[0])
        nearest = int(np.argmax(w[bad].min(axis=1)))
        raise EmbeddingError(
            f"point {bad} at {points[bad].tolist()} lies outside the mesh "
            f"(nearest tet {nearest}, worst weight {w[bad, nearest].min():.3e})"
        )
    weights = w[np.arange(len(points)), host]
    weights = np.maximum(weights, 0.0)
    weights /= weights.sum(axis=1, keepdims=True)
    return BarycentricEmbedding(
        tet_indices=host.astype(np.int64),
        node_indices=mesh.tets[host],
        weights=weights,
        num_vertices=mesh.num_vertices,
    )


def interpolate(embedding: BarycentricEmbedding, nodal_field: np.ndarray) -> np.ndarray:
    """Weights-weighted sum of each host tet's nodal values, (H, 3)."""
    nodal_field = np.asarray(nodal_field, dtype=np.float64)
    if len(nodal_field) != embedding.num_vertices:
        raise EmbeddingError(
            f"nodal field has {len(nodal_field)} entries, mesh has "
            f"{embedding.num_vertices} vertices"
        )
    return np.einsum("hi,hij->hj", embedding.weights, nodal_field[embedding.node_indices])


def scatter_forces(
    embedding: BarycentricEmbedding,
    via_forces: np.ndarray,
    mode: str = "transpose",
) -> np.ndarray:
    """Map via-point forces to nodal forces, (N, 3).

    ``transpose`` distributes each force to its host tet's nodes by the
    barycentric weights (the adjoint of :func:`interpolate`; conserves the
    total force).  ``pseudoinverse`` returns the least-squares solution of
    ``interpolate(F) = f`` restricted to the touched nodes, and raises if the
    restricted system is row-rank deficient.
    """
    via_forces = np.asarray(via_forces, dtype=np.float64)
    if len(via_forces) != embedding.num_points:
        raise EmbeddingError(
            f"got {len(via_forces)} via forces for {embedding.num_points} points"
        )
    out = np.zeros((embedding.num_vertices, 3))
    if mode == "transpose":
        contrib = embedding.weights[:, :, None] * via_forces[:, None, :]
        np.add.at(out, embedding.node_indices.reshape(-1), contrib.reshape(-1, 3))
        return out
    if mode == "pseudoinverse":
        w_r, touched = restricted_weight_matrix(embedding)
        rank = np.linalg.matrix_rank(w_r)
        if rank < embedding.num_points:
            raise EmbeddingError(
                f"pseudoinverse scatter: restricted normal system is rank "
                f"deficient (rank {rank} < {embedding.num_points} via points)"
            )
        sol, *_ = np.linalg.lstsq(w_r, via_forces, rcond=None)
        out[touched] = sol
        return out
    raise ValueError(f"unknown scatter mode {mode!r}")


def restricted_weight_matrix(embedding: BarycentricEmbedding):
    """Dense (H, n_touched) weight matrix over the nodes touched by the embedding."""
    touched = np.unique(embedding.node_indices)
    col = np.searchsorted(touched, embedding.node_indices)
    w_r = np.zeros((embedding.num_points, len(touched)))
    rows = np.repeat(np.arange(embedding.num_points), 4)
    np.add.at(w_r, (rows, col.reshape(-1)), embedding.weights.reshape(-1))
    return w_r, touched
