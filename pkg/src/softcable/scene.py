"""Declarative scene description: parsing, validation, and compilation.

A scene JSON file declares the robot (procedural generator or mesh file),
rigid objects with roles (target / obstacle), simulation and optimizer
settings, and the task weights.  :func:`parse_scene` validates with
field-path error messages and materializes every default, so the echoed
document round-trips to a fixpoint.  :func:`compile_scene` turns the
declaration into runtime arrays: mesh, cables, masses, FEM precomputation,
cube rigs, and object surface meshes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import cable as cable_mod
from . import contact as contact_mod
from . import elasticity, renderer, tetmesh


class SceneError(ValueError):
    """Scene file violates the schema; the message carries the field path."""


_sentinel = object()


def _get(d, path, key, typ, default=_sentinel):
    loc = f"{path}.{key}" if path else key
    if key not in d:
        if default is _sentinel:
            raise SceneError(f"{loc}: required field missing")
        return default
    val = d[key]
    if val is None and default is None:
        return None
    if typ is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if typ is not None and not isinstance(val, typ):
        raise SceneError(f"{loc}: expected {getattr(typ, '__name__', typ)}, got {type(val).__name__}")
    return val


def _vec3(d, path, key, default=None):
    v = _get(d, path, key, list, default if default is not None else _sentinel)
    if len(v) != 3 or not all(isinstance(x, (int, float)) for x in v):
        raise SceneError(f"{path}.{key}: expected a 3-vector of numbers")
    return [float(x) for x in v]


def _check_range(value, lo, hi, loc):
    if not lo <= value <= hi:
        raise SceneError(f"{loc}: value {value} outside [{lo}, {hi}]")
    return value


def _check_positive(value, loc):
    if value <= 0:
        raise SceneError(f"{loc}: must be positive, got {value}")
    return value


_GENERATOR_DEFAULTS = {
    "finger": {"length": 0.16, "width": 0.06, "height": 0.06, "segments": 5,
               "cross_segments": 2, "n_cables": 1, "cable_offset_fraction": 0.3},
    "trunk": {"length": 0.35, "radius": 0.05, "segments": 34, "cross_segments": 7,
              "n_cables": 2, "cable_radius_fraction": 0.55},
    "starfish": {"finger_length": 0.12, "width": 0.035, "height": 0.035,
                 "segments": 16, "cross_segments": 2, "n_fingers": 5,
                 "hub_radius": 0.03},
}


@dataclass
class RobotSpec:
    generator: dict | None
    mesh_path: str | None
    translate: list
    rotate_axis: list
    rotate_angle_deg: float
    material: elasticity.Material
    cable_stiffness: float
    cable_damping: float
    cable_mode: str
    scatter_mode: str


@dataclass
class ObjectSpec:
    id: str
    role: str                     # "target" | "obstacle"
    collides: bool
    shape: contact_mod.SDFShape
    rig_resolution: int
    rig_near: float
    rig_far: float | None         # None = 2x scene bounding radius at compile
    surface_resolution: int


@dataclass
class SimSpec:
    dt: float
    duration: float
    gravity: list
    collisions_enabled: bool
    frames: int
    frame_window: float


@dataclass
class TaskSpec:
    target: str | None
    obstacles: list
    alpha: float


@dataclass
class OptimSpec:
    learning_rate: float
    iterations: int
    gradient_method: str          # "fd_central" | "adjoint"
    fd_epsilon: float
    checkpoint_interval: int | None


@dataclass
class Scene:
    name: str
    robot: RobotSpec
    objects: list
    sim: SimSpec
    task: TaskSpec
    optimizer: OptimSpec
    contact: contact_mod.ContactParams
    blur_sigma: float

    @property
    def num_cables(self) -> int:
        if self.robot.generator is not None:
            kind = self.robot.generator["kind"]
            key = "n_fingers" if kind == "starfish" else "n_cables"
            return int(self.robot.generator[key])
        return len(tetmesh.load_via_paths(self.robot.mesh_path))


_SHAPE_PARSERS = {
    "sphere": lambda d, path: contact_mod.Sphere(
        center=tuple(_vec3(d, path, "center")),
        radius=_check_positive(_get(d, path, "radius", float), f"{path}.radius"),
    ),
    "capped_cylinder": lambda d, path: contact_mod.CappedCylinder(
        base=tuple(_vec3(d, path, "base")),
        axis=tuple(_vec3(d, path, "axis")),
        radius=_check_positive(_get(d, path, "radius", float), f"{path}.radius"),
        height=_check_positive(_get(d, path, "height", float), f"{path}.height"),
    ),
    "egg": lambda d, path: contact_mod.Egg(
        center=tuple(_vec3(d, path, "center")),
        equatorial_radius=_check_positive(
            _get(d, path, "equatorial_radius", float), f"{path}.equatorial_radius"),
        polar_scale_top=_check_positive(
            _get(d, path, "polar_scale_top", float), f"{path}.polar_scale_top"),
        polar_scale_bottom=_check_positive(
            _get(d, path, "polar_scale_bottom", float), f"{path}.polar_scale_bottom"),
    ),
    "half_space": lambda d, path: contact_mod.HalfSpace(
        point=tuple(_vec3(d, path, "point")),
        normal=tuple(_vec3(d, path, "normal")),
    ),
}


def _parse_shape(d, path):
    kind = _get(d, path, "type", str)
    if kind not in _SHAPE_PARSERS:
        raise SceneError(f"{path}.type: unknown shape {kind!r}")
    try:
        return _SHAPE_PARSERS[kind](d, path)
    except ValueError as exc:
        if isinstance(exc, SceneError):
            raise
        raise SceneError(f"{path}: {exc}") from exc


def parse_scene_dict(doc: dict, name_hint: str = "scene") -> Scene:
    """Validate a scene document and materialize all defaults."""
    name = _get(doc, "", "name", str, name_hint)

    r = _get(doc, "", "robot", dict)
    gen = _get(r, "robot", "generator", dict, None)
    mesh_path = _get(r, "robot", "mesh_path", str, None)
    if (gen is None) == (mesh_path is None):
        raise SceneError("robot: exactly one of 'generator' or 'mesh_path' is required")
    if gen is not None:
        kind = _get(gen, "robot.generator", "kind", str)
        if kind not in _GENERATOR_DEFAULTS:
            raise SceneError(f"robot.generator.kind: unknown kind {kind!r}")
        merged = {"kind": kind, **_GENERATOR_DEFAULTS[kind]}
        for key, val in gen.items():
            if key != "kind" and key not in _GENERATOR_DEFAULTS[kind]:
                raise SceneError(f"robot.generator.{key}: unknown parameter for {kind!r}")
            merged[key] = val
        gen = merged

    rot = _get(r, "robot", "rotate", dict, {"axis": [0.0, 0.0, 1.0], "angle_deg": 0.0})
    mat = _get(r, "robot", "material", dict)
    try:
        material = elasticity.Material(
            young_modulus=_get(mat, "robot.material", "young_modulus_pa", float),
            poisson_ratio=_get(mat, "robot.material", "poisson_ratio", float),
            density=_get(mat, "robot.material", "density_kg_m3", float),
            damping_factor=_get(mat, "robot.material", "damping_factor", float, 0.0),
        )
    except ValueError as exc:
        if isinstance(exc, SceneError):
            raise
        raise SceneError(f"robot.material: {exc}") from exc
    cable_mode = _get(r, "robot", "cable_mode", str, "conserving")
    if cable_mode not in cable_mod.MODES:
        raise SceneError(f"robot.cable_mode: unknown mode {cable_mode!r}")
    scatter_mode = _get(r, "robot", "scatter_mode", str, "transpose")
    if scatter_mode not in ("transpose", "pseudoinverse"):
        raise SceneError(f"robot.scatter_mode: unknown mode {scatter_mode!r}")
    robot = RobotSpec(
        generator=gen,
        mesh_path=mesh_path,
        translate=_vec3(r, "robot", "translate", [0.0, 0.0, 0.0]),
        rotate_axis=_vec3(rot, "robot.rotate", "axis", [0.0, 0.0, 1.0]),
        rotate_angle_deg=_get(rot, "robot.rotate", "angle_deg", float, 0.0),
        material=material,
        cable_stiffness=_check_positive(
            _get(r, "robot", "cable_stiffness_n_m", float, 100.0),
            "robot.cable_stiffness_n_m"),
        cable_damping=_get(r, "robot", "cable_damping_kg_s", float, 0.01),
        cable_mode=cable_mode,
        scatter_mode=scatter_mode,
    )

    objects = []
    seen = set()
    for i, o in enumerate(_get(doc, "", "objects", list, [])):
        path = f"objects[{i}]"
        if not isinstance(o, dict):
            raise SceneError(f"{path}: expected an object block")
        oid = _get(o, path, "id", str)
        if oid in seen:
            raise SceneError(f"{path}.id: duplicate object id {oid!r}")
        seen.add(oid)
        role = _get(o, path, "role", str)
        if role not in ("target", "obstacle"):
            raise SceneError(f"{path}.role: expected 'target' or 'obstacle', got {role!r}")
        rig = _get(o, path, "rig", dict, {})
        objects.append(ObjectSpec(
            id=oid,
            role=role,
            collides=_get(o, path, "collides", bool, False),
            shape=_parse_shape(_get(o, path, "shape", dict), f"{path}.shape"),
            rig_resolution=int(_check_positive(
                _get(rig, f"{path}.rig", "resolution", int, 32), f"{path}.rig.resolution")),
            rig_near=_check_positive(
                _get(rig, f"{path}.rig", "near", float, 1e-3), f"{path}.rig.near"),
            rig_far=_get(rig, f"{path}.rig", "far", float, None),
            surface_resolution=int(_check_positive(
                _get(o, path, "surface_resolution", int, 12), f"{path}.surface_resolution")),
        ))

    s = _get(doc, "", "sim", dict)
    sim = SimSpec(
        dt=_check_positive(_get(s, "sim", "dt", float, 5e-5), "sim.dt"),
        duration=_get(s, "sim", "duration_s", float),
        gravity=_vec3(s, "sim", "gravity", [0.0, 0.0, -9.81]),
        collisions_enabled=_get(s, "sim", "collisions_enabled", bool, False),
        frames=int(_check_positive(_get(s, "sim", "frames", int, 10), "sim.frames")),
        frame_window=_check_range(
            _get(s, "sim", "frame_window", float, 0.5), 0.0, 1.0, "sim.frame_window"),
    )
    if sim.duration < 0:
        raise SceneError("sim.duration_s: must be nonnegative")

    t = _get(doc, "", "task", dict)
    task = TaskSpec(
        target=_get(t, "task", "target", str, None),
        obstacles=list(_get(t, "task", "obstacles", list, [])),
        alpha=_check_range(_get(t, "task", "alpha", float, 1.0), 0.0, 1.0, "task.alpha"),
    )
    if task.target is None and not task.obstacles:
        raise SceneError("task: need a target or at least one obstacle")
    for oid in [task.target, *task.obstacles]:
        if oid is not None and oid not in seen:
            raise SceneError(f"task: references unknown object {oid!r}")
    if task.target is None and task.alpha > 0.0:
        raise SceneError("task.alpha: alpha > 0 requires a target")
    if not task.obstacles and task.alpha < 1.0:
        raise SceneError("task.alpha: alpha < 1 requires obstacles")

    o = _get(doc, "", "optimizer", dict, {})
    optimizer = OptimSpec(
        learning_rate=_check_positive(
            _get(o, "optimizer", "learning_rate", float, 0.1), "optimizer.learning_rate"),
        iterations=int(_get(o, "optimizer", "iterations", int, 30)),
        gradient_method=_get(o, "optimizer", "gradient_method", str, "fd_central"),
        fd_epsilon=_check_positive(
            _get(o, "optimizer", "fd_epsilon", float, 1e-3), "optimizer.fd_epsilon"),
        checkpoint_interval=_get(o, "optimizer", "checkpoint_interval", int, None),
    )
    if optimizer.iterations < 0:
        raise SceneError("optimizer.iterations: must be nonnegative")
    if optimizer.gradient_method not in ("fd_central", "adjoint"):
        raise SceneError(
            f"optimizer.gradient_method: expected 'fd_central' or 'adjoint', "
            f"got {optimizer.gradient_method!r}")

    c = _get(doc, "", "contact", dict, {})
    try:
        contact = contact_mod.ContactParams(
            penalty_stiffness=_get(c, "contact", "penalty_stiffness", float, 1e4),
            penalty_damping=_get(c, "contact", "penalty_damping", float, 1.0),
        )
    except ValueError as exc:
        raise SceneError(f"contact: {exc}") from exc

    rend = _get(doc, "", "render", dict, {})
    blur_sigma = _get(rend, "render", "blur_sigma", float, 0.0)
    if blur_sigma < 0:
        raise SceneError("render.blur_sigma: must be nonnegative")

    return Scene(name=name, robot=robot, objects=objects, sim=sim, task=task,
                 optimizer=optimizer, contact=contact, blur_sigma=blur_sigma)


def parse_scene(path) -> Scene:
    """Load, validate, and default-materialize a scene JSON file."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: not valid JSON ({exc})") from exc
    import os

    return parse_scene_dict(doc, name_hint=os.path.splitext(os.path.basename(path))[0])


def _shape_to_dict(shape) -> dict:
    if isinstance(shape, contact_mod.Sphere):
        return {"type": "sphere", "center": list(shape.center), "radius": shape.radius}
    if isinstance(shape, contact_mod.CappedCylinder):
        return {"type": "capped_cylinder", "base": list(shape.base),
                "axis": list(shape.axis), "radius": shape.radius, "height": shape.height}
    if isinstance(shape, contact_mod.Egg):
        return {"type": "egg", "center": list(shape.center),
                "equatorial_radius": shape.equatorial_radius,
                "polar_scale_top": shape.polar_scale_top,
                "polar_scale_bottom": shape.polar_scale_bottom}
    return {"type": "half_space", "point": list(shape.point), "normal": list(shape.normal)}


def scene_to_dict(scene: Scene) -> dict:
    """Serialize a Scene with all defaults materialized (round-trip fixpoint)."""
    r = scene.robot
    robot = {
        "translate": r.translate,
        "rotate": {"axis": r.rotate_axis, "angle_deg": r.rotate_angle_deg},
        "material": {
            "young_modulus_pa": r.material.young_modulus,
            "poisson_ratio": r.material.poisson_ratio,
            "density_kg_m3": r.material.density,
            "damping_factor": r.material.damping_factor,
        },
        "cable_stiffness_n_m": r.cable_stiffness,
        "cable_damping_kg_s": r.cable_damping,
        "cable_mode": r.cable_mode,
        "scatter_mode": r.scatter_mode,
    }
    if r.generator is not None:
        robot["generator"] = r.generator
    else:
        robot["mesh_path"] = r.mesh_path
    return {
        "name": scene.name,
        "robot": robot,
        "objects": [
            {
                "id": o.id, "role": o.role, "collides": o.collides,
                "shape": _shape_to_dict(o.shape),
                "rig": {"resolution": o.rig_resolution, "near": o.rig_near,
                        "far": o.rig_far},
                "surface_resolution": o.surface_resolution,
            }
            for o in scene.objects
        ],
        "sim": {
            "dt": scene.sim.dt, "duration_s": scene.sim.duration,
            "gravity": scene.sim.gravity,
            "collisions_enabled": scene.sim.collisions_enabled,
            "frames": scene.sim.frames, "frame_window": scene.sim.frame_window,
        },
        "task": {"target": scene.task.target, "obstacles": scene.task.obstacles,
                 "alpha": scene.task.alpha},
        "optimizer": {
            "learning_rate": scene.optimizer.learning_rate,
            "iterations": scene.optimizer.iterations,
            "gradient_method": scene.optimizer.gradient_method,
            "fd_epsilon": scene.optimizer.fd_epsilon,
            "checkpoint_interval": scene.optimizer.checkpoint_interval,
        },
        "contact": {"penalty_stiffness": scene.contact.penalty_stiffness,
                    "penalty_damping": scene.contact.penalty_damping},
        "render": {"blur_sigma": scene.blur_sigma},
    }


# ---------------------------------------------------------------------------
# Object surface meshes (UV tessellations of the analytic shapes)
# ---------------------------------------------------------------------------

def _uv_sphere(center, radius, n, z_scale_top=1.0, z_scale_bottom=1.0):
    stacks, slices = n, 2 * n
    verts = [np.array([0.0, 0.0, radius * z_scale_top])]
    for i in range(1, stacks):
        phi = np.pi * i / stacks
        z = radius * np.cos(phi)
        z *= z_scale_top if z >= 0 else z_scale_bottom
        rr = radius * np.sin(phi)
        for j in range(slices):
            th = 2 * np.pi * j / slices
            verts.append(np.array([rr * np.cos(th), rr * np.sin(th), z]))
    verts.append(np.array([0.0, 0.0, -radius * z_scale_bottom]))
    verts = np.array(verts) + np.asarray(center)
    tris = []
    for j in range(slices):
        tris.append([0, 1 + j, 1 + (j + 1) % slices])
    for i in range(stacks - 2):
        a, b = 1 + i * slices, 1 + (i + 1) * slices
        for j in range(slices):
            j2 = (j + 1) % slices
            tris.append([a + j, b + j, b + j2])
            tris.append([a + j, b + j2, a + j2])
    last = len(verts) - 1
    base = 1 + (stacks - 2) * slices
    for j in range(slices):
        tris.append([last, base + (j + 1) % slices, base + j])
    return verts, np.array(tris, dtype=np.int64)


def _cylinder_surface(base, axis, radius, height, n):
    axis = np.asarray(axis, dtype=np.float64)
    e = contact_mod._perp_unit(axis)
    f = np.cross(axis, e)
    slices = 2 * n
    ring = [np.cos(2 * np.pi * j / slices) * e + np.sin(2 * np.pi * j / slices) * f
            for j in range(slices)]
    bot = [np.asarray(base) + radius * r for r in ring]
    top = [p + height * axis for p in bot]
    cb = np.asarray(base, dtype=np.float64)
    ct = cb + height * axis
    verts = np.array(bot + top + [cb, ct])
    ib, it = 2 * slices, 2 * slices + 1
    tris = []
    for j in range(slices):
        j2 = (j + 1) % slices
        tris.append([j, slices + j, slices + j2])
        tris.append([j, slices + j2, j2])
        tris.append([ib, j2, j])
        tris.append([it, slices + j, slices + j2])
    return verts, np.array(tris, dtype=np.int64)


def surface_mesh_for_shape(shape, resolution: int):
    """Closed triangle surface of an analytic shape for rendering."""
    if isinstance(shape, contact_mod.Sphere):
        return _uv_sphere(shape.center, shape.radius, resolution)
    if isinstance(shape, contact_mod.Egg):
        return _uv_sphere(shape.center, shape.equatorial_radius, resolution,
                          shape.polar_scale_top, shape.polar_scale_bottom)
    if isinstance(shape, contact_mod.CappedCylinder):
        return _cylinder_surface(shape.base, shape.axis, shape.radius,
                                 shape.height, resolution)
    if isinstance(shape, contact_mod.HalfSpace):
        normal = np.asarray(shape.normal)
        e = contact_mod._perp_unit(normal)
        f = np.cross(normal, e)
        c = np.asarray(shape.point)
        size = 10.0
        verts = np.array([c + size * (se * e + sf * f)
                          for se, sf in ((-1, -1), (1, -1), (1, 1), (-1, 1))])
        return verts, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    raise TypeError(f"no surface tessellation for {type(shape).__name__}")


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

def _rotation_matrix(axis, angle_deg):
    angle = math.radians(angle_deg)
    a = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise SceneError("robot.rotate.axis: zero vector")
    a = a / norm
    k = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


@dataclass
class CompiledScene:
    """Runtime arrays built from a Scene declaration."""

    spec: Scene
    mesh: tetmesh.TetMesh
    cables: list                   # softcable.cable.Cable, index order
    via_paths: list
    material: elasticity.Material
    masses: np.ndarray
    free_mask: np.ndarray          # (N,) bool
    precomp: elasticity.FemPrecomp
    contact_shapes: list           # shapes that actually produce forces
    rigs: dict                     # object id -> CubeRig
    object_surfaces: dict          # object id -> (vertices, triangles)
    interest_weights: dict         # object id -> loss weight on its grip term
    n_steps: int
    frame_steps: list

    @property
    def num_cables(self) -> int:
        return len(self.cables)


def frame_step_indices(n_steps: int, frames: int, window: float) -> list:
    """Recorded step indices: `frames` uniform samples over the trailing window."""
    if n_steps == 0:
        return [0]
    start = n_steps * (1.0 - window)
    raw = [start + (i + 1) / frames * (n_steps - start) for i in range(frames)]
    steps = sorted({min(n_steps, max(1, round(x))) for x in raw})
    return steps


def compile_scene(scene: Scene) -> CompiledScene:
    """Materialize the runtime model for simulation, rendering, and losses."""
    if scene.robot.generator is not None:
        params = dict(scene.robot.generator)
        kind = params.pop("kind")
        try:
            mesh, via_paths = tetmesh.generate_robot(kind, **params)
        except tetmesh.MeshError as exc:
            raise SceneError(f"robot.generator: {exc}") from exc
    else:
        mesh = tetmesh.load_mesh(scene.robot.mesh_path)
        via_paths = tetmesh.load_via_paths(scene.robot.mesh_path)
        if not via_paths:
            raise SceneError("robot.mesh_path: mesh file declares no cables")

    rot = _rotation_matrix(scene.robot.rotate_axis, scene.robot.rotate_angle_deg)
    trans = np.asarray(scene.robot.translate)
    vertices = mesh.vertices @ rot.T + trans
    mesh = tetmesh.TetMesh(
        vertices=vertices, tets=mesh.tets,
        surface_tris=mesh.surface_tris, fixed_nodes=mesh.fixed_nodes,
    )
    via_paths = [np.asarray(p) @ rot.T + trans for p in via_paths]

    cables = [
        cable_mod.Cable(
            embedding=tetmesh.embed_points(mesh, path),
            stiffness=scene.robot.cable_stiffness,
            damping=scene.robot.cable_damping,
        )
        for path in via_paths
    ]

    object_surfaces = {
        o.id: surface_mesh_for_shape(o.shape, o.surface_resolution)
        for o in scene.objects
    }
    all_points = np.vstack([mesh.vertices, *[v for v, _ in object_surfaces.values()]])

    interest = ([scene.task.target] if scene.task.target else []) + list(scene.task.obstacles)
    rigs = {}
    for o in scene.objects:
        if o.id not in interest:
            continue
        center = _shape_center(o.shape)
        far = o.rig_far
        if far is None:
            far = 2.0 * float(np.linalg.norm(all_points - center, axis=1).max())
        rigs[o.id] = renderer.cube_rig(center, o.rig_resolution, o.rig_near, far)

    if scene.task.obstacles:
        weights = {scene.task.target: scene.task.alpha} if scene.task.target else {}
        for q in scene.task.obstacles:
            weights[q] = -(1.0 - scene.task.alpha) / len(scene.task.obstacles)
    else:
        weights = {scene.task.target: 1.0}

    contact_shapes = [
        o.shape for o in scene.objects
        if scene.sim.collisions_enabled and o.collides
    ]

    n_steps = math.ceil(scene.sim.duration / scene.sim.dt - 1e-12)
    return CompiledScene(
        spec=scene,
        mesh=mesh,
        cables=cables,
        via_paths=via_paths,
        material=scene.robot.material,
        masses=elasticity.lumped_masses(mesh, scene.robot.material.density),
        free_mask=mesh.free_mask(),
        precomp=elasticity.precompute_fem(mesh),
        contact_shapes=contact_shapes,
        rigs=rigs,
        object_surfaces=object_surfaces,
        interest_weights=weights,
        n_steps=n_steps,
        frame_steps=frame_step_indices(n_steps, scene.sim.frames, scene.sim.frame_window),
    )


def _shape_center(shape):
    if isinstance(shape, contact_mod.Sphere):
        return np.asarray(shape.center, dtype=np.float64)
    if isinstance(shape, contact_mod.Egg):
        return np.asarray(shape.center, dtype=np.float64)
    if isinstance(shape, contact_mod.CappedCylinder):
        return np.asarray(shape.base) + 0.5 * shape.height * np.asarray(shape.axis)
    return np.asarray(shape.point, dtype=np.float64)
