"""Depth-image rendering from cameras placed inside scene objects.

The rasterizer is a deterministic software z-buffer: perspective projection,
per-pixel smallest forward-axis depth, perspective-correct depth at pixel
centers (plane/ray intersection), near-plane clipping, back faces kept (the
cameras sit inside closed objects).  Background pixels hold exactly the far
value; depth ties go to the lower triangle index.

Differentiation is coverage-frozen: per-pixel triangle assignment is held
fixed and gradients flow through the interpolated depth only, so silhouette
motion contributes nothing.  An optional screen-space Gaussian blur (sigma in
pixels, default 0) softens coverage transitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FACE_ORDER = ("+x", "-x", "+y", "-y", "+z", "-z")
_FACE_FORWARD = np.array([
    [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1],
], dtype=np.float64)
_FACE_UP = np.array([
    [0, 0, 1], [0, 0, 1], [0, 0, 1], [0, 0, 1], [0, 1, 0], [0, 1, 0],
], dtype=np.float64)


@dataclass(frozen=True)
class Camera:
    """Pinhole camera with forward-axis depth convention."""

    position: np.ndarray     # (3,)
    right: np.ndarray        # unit
    up: np.ndarray           # unit
    forward: np.ndarray      # unit
    vertical_fov: float      # radians
    width: int
    height: int
    near: float
    far: float

    def __post_init__(self):
        if not 0.0 < self.near < self.far:
            raise ValueError("camera requires 0 < near < far")
        if not 0.0 < self.vertical_fov < np.pi:
            raise ValueError("vertical fov must lie in (0, pi)")
        if self.width < 1 or self.height < 1:
            raise ValueError("resolution must be at least 1x1")

    @staticmethod
    def look(position, forward, up, vertical_fov, width, height, near, far) -> "Camera":
        f = np.asarray(forward, dtype=np.float64)
        f = f / np.linalg.norm(f)
        r = np.cross(f, np.asarray(up, dtype=np.float64))
        nr = np.linalg.norm(r)
        if nr < 1e-12:
            raise ValueError("camera up vector is parallel to forward")
        r = r / nr
        u = np.cross(r, f)
        return Camera(
            position=np.asarray(position, dtype=np.float64),
            right=r, up=u, forward=f,
            vertical_fov=float(vertical_fov),
            width=int(width), height=int(height),
            near=float(near), far=float(far),
        )

    @property
    def basis(self) -> np.ndarray:
        """(3, 3) with columns (right, up, forward): world -> camera via (p-c) @ basis."""
        return np.column_stack([self.right, self.up, self.forward])

    def ndc_grids(self):
        """Per-column and per-row NDC ray slopes (u along right, v along up)."""
        tan_y = np.tan(self.vertical_fov / 2.0)
        tan_x = tan_y * self.width / self.height
        u = (2.0 * (np.arange(self.width) + 0.5) / self.width - 1.0) * tan_x
        v = (1.0 - 2.0 * (np.arange(self.height) + 0.5) / self.height) * tan_y
        return u, v, tan_x, tan_y


@dataclass(frozen=True)
class CubeRig:
    """Six 90-degree cameras at a shared center covering all directions."""

    center: np.ndarray
    cameras: tuple  # 6 Cameras, face order +X,-X,+Y,-Y,+Z,-Z


def cube_rig(center, resolution: int, near: float, far: float) -> CubeRig:
    center = np.asarray(center, dtype=np.float64)
    fov = np.pi / 2.0
    cams = tuple(
        Camera.look(center, _FACE_FORWARD[i], _FACE_UP[i], fov,
                    resolution, resolution, near, far)
        for i in range(6)
    )
    return CubeRig(center=center, cameras=cams)


def classify_direction(direction) -> int:
    """Cube face index for a direction: argmax |component|, ties by face order."""
    d = np.asarray(direction, dtype=np.float64)
    a = np.abs(d)
    axis = int(np.argmax(a))      # first maximum, i.e. face-order tie-break
    return 2 * axis + (0 if d[axis] >= 0.0 else 1)


@dataclass
class RasterResult:
    """Depth image with the per-pixel winning triangle (-1 = background)."""

    depth: np.ndarray     # (H, W) float64 in [near, far]
    tri_id: np.ndarray    # (H, W) int32


def _clip_near(tri_cam, near):
    """Clip one camera-space triangle against z = near; returns sub-triangles."""
    inside = tri_cam[:, 2] >= near
    count = int(inside.sum())
    if count == 3:
        return [tri_cam]
    if count == 0:
        return []
    poly = []
    for i in range(3):
        a, b = tri_cam[i], tri_cam[(i + 1) % 3]
        ain, bin_ = inside[i], inside[(i + 1) % 3]
        if ain:
            poly.append(a)
        if ain != bin_:
            t = (near - a[2]) / (b[2] - a[2])
            poly.append(a + t * (b - a))
    tris = [np.array([poly[0], poly[i], poly[i + 1]]) for i in range(1, len(poly) - 1)]
    return tris


def rasterize_depth(vertices, triangles, camera: Camera) -> RasterResult:
    """Z-buffer depth image of a triangle mesh; see the module docstring."""
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64)
    h, w = camera.height, camera.width
    depth = np.full((h, w), camera.far)
    tri_id = np.full((h, w), -1, dtype=np.int32)
    if len(triangles) == 0:
        return RasterResult(depth, tri_id)

    q = (vertices - camera.position) @ camera.basis
    u_grid, v_grid, tan_x, tan_y = camera.ndc_grids()

    for t in range(len(triangles)):
        tri_cam = q[triangles[t]]
        if tri_cam[:, 2].min() > camera.far:
            continue
        n = np.cross(tri_cam[1] - tri_cam[0], tri_cam[2] - tri_cam[0])
        n_dot_p0 = float(n @ tri_cam[0])
        for sub in _clip_near(tri_cam, camera.near):
            z = sub[:, 2]
            px = (sub[:, 0] / z / tan_x + 1.0) * w / 2.0 - 0.5
            py = (1.0 - sub[:, 1] / z / tan_y) * h / 2.0 - 0.5
            i0 = max(0, int(np.ceil(px.min())))
            i1 = min(w - 1, int(np.floor(px.max())))
            j0 = max(0, int(np.ceil(py.min())))
            j1 = min(h - 1, int(np.floor(py.max())))
            if i0 > i1 or j0 > j1:
                continue
            area = (px[1] - px[0]) * (py[2] - py[0]) - (px[2] - px[0]) * (py[1] - py[0])
            if area == 0.0:
                continue
            sgn = 1.0 if area > 0.0 else -1.0
            gi = np.arange(i0, i1 + 1)
            gj = np.arange(j0, j1 + 1)
            pgx = gi[None, :]
            pgy = gj[:, None]
            inside = np.ones((len(gj), len(gi)), dtype=bool)
            for e in range(3):
                ax, ay = px[e], py[e]
                bx, by = px[(e + 1) % 3], py[(e + 1) % 3]
                edge = (bx - ax) * (pgy - ay) - (by - ay) * (pgx - ax)
                inside &= sgn * edge >= 0.0
            if not inside.any():
                continue
            denom = (
                n[0] * u_grid[None, i0:i1 + 1]
                + n[1] * v_grid[j0:j1 + 1, None]
                + n[2]
            )
            with np.errstate(divide="ignore", invalid="ignore"):
                d = n_dot_p0 / denom
            valid = (
                inside
                & (np.abs(denom) > 1e-300)
                & np.isfinite(d)
                & (d >= camera.near)
                & (d <= camera.far)
            )
            window = depth[j0:j1 + 1, i0:i1 + 1]
            win = valid & (d < window)
            window[win] = d[win]
            tri_id[j0:j1 + 1, i0:i1 + 1][win] = t
    return RasterResult(depth, tri_id)


def depth_with_assignment(vertices, triangles, camera: Camera, tri_id: np.ndarray):
    """Depth image re-evaluated under a frozen pixel-to-triangle assignment.

    The finite-difference oracle for the coverage-frozen gradient contract.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64)
    q = (vertices - camera.position) @ camera.basis
    u_grid, v_grid, _, _ = camera.ndc_grids()
    depth = np.full(tri_id.shape, camera.far)
    jj, ii = np.nonzero(tri_id >= 0)
    if len(jj) == 0:
        return depth
    t = tri_id[jj, ii]
    tri_cam = q[triangles[t]]              # (P, 3, 3)
    n = np.cross(tri_cam[:, 1] - tri_cam[:, 0], tri_cam[:, 2] - tri_cam[:, 0])
    dirs = np.column_stack([u_grid[ii], v_grid[jj], np.ones(len(ii))])
    denom = np.einsum("pj,pj->p", n, dirs)
    depth[jj, ii] = np.einsum("pj,pj->p", n, tri_cam[:, 0]) / denom
    return depth


def rasterize_backward(vertices, triangles, camera: Camera,
                       tri_id: np.ndarray, grad_depth: np.ndarray) -> np.ndarray:
    """Coverage-frozen vertex-position gradient of a depth image, (N, 3).

    Per covered pixel the depth is n . p0 / (n . dir) with n the triangle
    normal in camera space; the chain rule through the cross product gives the
    exact derivative at fixed assignment.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int64)
    grad_vertices = np.zeros_like(vertices)
    jj, ii = np.nonzero((tri_id >= 0) & (grad_depth != 0.0))
    if len(jj) == 0:
        return grad_vertices

    q = (vertices - camera.position) @ camera.basis
    u_grid, v_grid, _, _ = camera.ndc_grids()
    t = tri_id[jj, ii]
    p0, p1, p2 = (q[triangles[t, k]] for k in range(3))
    e1, e2 = p1 - p0, p2 - p0
    n = np.cross(e1, e2)
    dirs = np.column_stack([u_grid[ii], v_grid[jj], np.ones(len(ii))])
    a = np.einsum("pj,pj->p", n, p0)
    b = np.einsum("pj,pj->p", n, dirs)
    g = grad_depth[jj, ii]

    ga = g / b
    gb = -g * a / (b * b)
    gn = ga[:, None] * p0 + gb[:, None] * dirs
    ge1 = np.cross(e2, gn)
    ge2 = np.cross(gn, e1)
    gp0 = ga[:, None] * n - ge1 - ge2

    grad_q = np.zeros_like(vertices)
    np.add.at(grad_q, triangles[t, 0], gp0)
    np.add.at(grad_q, triangles[t, 1], ge1)
    np.add.at(grad_q, triangles[t, 2], ge2)
    return grad_q @ camera.basis.T


def blur_depth(depth: np.ndarray, sigma: float, far: float) -> np.ndarray:
    """Screen-space Gaussian blur that leaves an all-background image untouched."""
    if sigma <= 0.0:
        return depth
    from scipy.ndimage import gaussian_filter

    return far + gaussian_filter(depth - far, sigma, mode="constant", cval=0.0)


def blur_depth_backward(grad: np.ndarray, sigma: float) -> np.ndarray:
    """Adjoint of :func:`blur_depth` (the filter is self-adjoint)."""
    if sigma <= 0.0:
        return grad
    from scipy.ndimage import gaussian_filter

    return gaussian_filter(grad, sigma, mode="constant", cval=0.0)


def render_views(meshes: dict, rig: CubeRig, sigma: float = 0.0):
    """Depth images of each named mesh from every face of a cube rig.

    ``meshes`` maps a name to (vertices, triangles); each mesh is rendered
    alone, exactly as the loss definitions require.  Returns
    {name: [RasterResult per face]} with blur applied to the depth arrays.
    """
    out = {}
    for name, (verts, tris) in meshes.items():
        results = []
        for cam in rig.cameras:
            res = rasterize_depth(verts, tris, cam)
            if sigma > 0.0:
                res = RasterResult(blur_depth(res.depth, sigma, cam.far), res.tri_id)
            results.append(res)
        out[name] = results
    return out


# ---------------------------------------------------------------------------
# Image files: 16-bit binary PGM, depth mapped [near, far] -> [0, 65535].
# ---------------------------------------------------------------------------

def write_pgm16(path, depth: np.ndarray, near: float, far: float) -> None:
    scaled = np.round((np.clip(depth, near, far) - near) / (far - near) * 65535.0)
    data = scaled.astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{depth.shape[1]} {depth.shape[0]}\n65535\n".encode())
        f.write(data.tobytes())


def read_pgm16(path, near: float, far: float) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path}: not a binary PGM file")
        dims = f.readline().split()
        w, h = int(dims[0]), int(dims[1])
        maxval = int(f.readline())
        data = np.frombuffer(f.read(), dtype=">u2").reshape(h, w)
    return near + data.astype(np.float64) / maxval * (far - near)
