"""End-to-end gradients of the task loss with respect to pull ratios.

Two engines share one forward pipeline (simulate -> render -> loss):

``fd_gradient``
    Central finite differences per cable, 2C + 1 full simulations.  Probes at
    negative pull ratios are evaluated as-is; clamping is the optimizer's
    projection, not the loss's.

``adjoint_gradient``
    Hand-written reverse mode through every integration step, the
    coverage-frozen rasterizer, and the loss.  Memory is bounded by
    checkpointing: states are stored every K steps and segments are
    recomputed exactly during the backward sweep, so the gradient is
    independent of K.  The max(., 0) kinks pass the subgradient 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import contact as contact_mod
from . import elasticity, objective, renderer
from .cable import segment_forces
from .scene import CompiledScene
from .simulator import make_forces_fn, rest_state, simulate, step
from .tetmesh import interpolate, restricted_weight_matrix, scatter_forces


@dataclass
class GradientReport:
    loss_value: float
    grad: np.ndarray            # (C,)
    method: str                 # "fd_central" | "adjoint"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.grad).all():
            raise ArithmeticError(f"non-finite gradient: {self.grad}")


# ---------------------------------------------------------------------------
# Forward pipeline
# ---------------------------------------------------------------------------

def object_images(compiled: CompiledScene):
    """Depth images of each interest object from its own rig (cached; static)."""
    cached = getattr(compiled, "_object_images", None)
    if cached is None:
        sigma = compiled.spec.blur_sigma
        cached = {}
        for oid, rig in compiled.rigs.items():
            verts, tris = compiled.object_surfaces[oid]
            for f, cam in enumerate(rig.cameras):
                img = renderer.rasterize_depth(verts, tris, cam).depth
                cached[(oid, f)] = renderer.blur_depth(img, sigma, cam.far)
        compiled._object_images = cached
    return cached


def render_robot(compiled: CompiledScene, positions: np.ndarray):
    """Raster results of the robot mesh from every interest-object view.

    Returns {(object id, face): RasterResult}; depths already blurred.
    """
    sigma = compiled.spec.blur_sigma
    out = {}
    tris = compiled.mesh.surface_tris
    for oid, rig in compiled.rigs.items():
        for f, cam in enumerate(rig.cameras):
            res = renderer.rasterize_depth(positions, tris, cam)
            if sigma > 0.0:
                res = renderer.RasterResult(
                    renderer.blur_depth(res.depth, sigma, cam.far), res.tri_id)
            out[(oid, f)] = res
    return out


def loss_terms(compiled: CompiledScene, robot_frames):
    """(loss, grip term, avoid term) from per-frame robot raster dicts.

    ``robot_frames`` is a list over recorded frames of the dicts returned by
    :func:`render_robot`.  The grip term is the target's mean distance image;
    the avoid term is the mean over obstacles of the (negative) avoid losses.
    """
    spec = compiled.spec
    obj_imgs = object_images(compiled)

    def mean_delta(oid):
        total, count = 0.0, 0
        for frame in robot_frames:
            for f in range(6):
                delta = objective.distance_image(
                    frame[(oid, f)].depth, obj_imgs[(oid, f)])
                total += float(delta.mean())
                count += 1
        return total / count

    grip = mean_delta(spec.task.target) if spec.task.target else 0.0
    if spec.task.obstacles:
        avoid = -sum(mean_delta(q) for q in spec.task.obstacles) / len(spec.task.obstacles)
        loss = spec.task.alpha * grip + (1.0 - spec.task.alpha) * avoid
    else:
        avoid = 0.0
        loss = grip
    return loss, grip, avoid


@dataclass
class LossEvaluation:
    loss: float
    grip_term: float
    avoid_term: float
    snapshots: list            # (step, SimState) at recorded frames
    robot_frames: list         # per frame: {(object id, face): RasterResult}


def evaluate_loss(compiled: CompiledScene, pull_ratios) -> LossEvaluation:
    """Run simulate -> render -> objective at fixed pull ratios."""
    _, snapshots = simulate(compiled, pull_ratios)
    robot_frames = [render_robot(compiled, st.positions) for _, st in snapshots]
    loss, grip, avoid = loss_terms(compiled, robot_frames)
    return LossEvaluation(loss, grip, avoid, snapshots, robot_frames)


# ---------------------------------------------------------------------------
# Finite differences
# ---------------------------------------------------------------------------

def fd_gradient(compiled: CompiledScene, pull_ratios, epsilon: float | None = None):
    """Central-difference gradient, (loss(p + e) - loss(p - e)) / 2e per cable."""
    if epsilon is None:
        epsilon = compiled.spec.optimizer.fd_epsilon
    if epsilon <= 0:
        raise ValueError("fd epsilon must be positive")
    p = np.asarray(pull_ratios, dtype=np.float64)
    base = evaluate_loss(compiled, p)
    grad = np.zeros(len(p))
    for i in range(len(p)):
        probe = p.copy()
        probe[i] = p[i] + epsilon
        hi = evaluate_loss(compiled, probe).loss
        probe[i] = p[i] - epsilon
        lo = evaluate_loss(compiled, probe).loss
        grad[i] = (hi - lo) / (2.0 * epsilon)
    return GradientReport(
        loss_value=base.loss, grad=grad, method="fd_central",
        diagnostics={"epsilon": epsilon, "grip_term": base.grip_term,
                     "avoid_term": base.avoid_term},
    )


# ---------------------------------------------------------------------------
# Adjoint engine
# ---------------------------------------------------------------------------

def _cable_pinv(cab):
    """Cached pseudoinverse of the restricted weight matrix (scatter adjoint)."""
    cache = cab._matrices
    if "_pinv" not in cache:
        w_r, touched = restricted_weight_matrix(cab.embedding)
        cache["_pinv"] = (np.linalg.pinv(w_r), touched)
    return cache["_pinv"]


def force_vjp(compiled: CompiledScene, positions, velocities, pull_ratios, fbar):
    """Transpose-Jacobian products of the total force w.r.t. (x, v, p).

    Elastic: the stable Neo-Hookean Hessian is symmetric, so the VJP is the
    analytic force differential along ``fbar``; Kelvin-Voigt damping is a
    symmetric linear operator in the velocities.  Cables are linear in state
    and in p.  Contact uses the frozen-normal approximation (see
    :func:`softcable.contact.penalty_force_vjp`).
    """
    spec = compiled.spec
    mesh, material, precomp = compiled.mesh, compiled.material, compiled.precomp

    xbar = elasticity.elastic_force_differential(mesh, positions, fbar, material, precomp)
    if material.damping_factor > 0.0:
        vbar = elasticity.damping_force_apply(mesh, fbar, material, precomp)
    else:
        vbar = np.zeros_like(fbar)
    pbar = np.zeros(compiled.num_cables)

    for c, cab in enumerate(compiled.cables):
        emb = cab.embedding
        if spec.robot.scatter_mode == "transpose":
            fvia_bar = interpolate(emb, fbar)
        else:
            pinv, touched = _cable_pinv(cab)
            fvia_bar = pinv.T @ fbar[touched]
        m_s, m_v = cab.matrices(spec.robot.cable_mode)
        sbar = m_s.T @ fvia_bar
        via_pos = interpolate(emb, positions)
        seg = via_pos[1:] - via_pos[:-1]
        pbar[c] = cab.stiffness * float(np.sum(seg * sbar))
        coef = pull_ratios[c] * cab.stiffness
        hbar = np.zeros_like(via_pos)
        hbar[1:] += coef * sbar
        hbar[:-1] -= coef * sbar
        xbar += scatter_forces(emb, hbar, mode="transpose")
        vbar += scatter_forces(emb, m_v.T @ fvia_bar, mode="transpose")

    for shape in compiled.contact_shapes:
        xb, vb = contact_mod.penalty_force_vjp(
            positions, velocities, shape, spec.contact, fbar)
        xbar += xb
        vbar += vb
    return xbar, vbar, pbar


def adjoint_gradient(compiled: CompiledScene, pull_ratios,
                     checkpoint_interval: int | None = None) -> GradientReport:
    """Reverse-mode gradient through all steps, the rasterizer, and the loss."""
    spec = compiled.spec
    p = np.asarray(pull_ratios, dtype=np.float64)
    dt = spec.sim.dt
    n = compiled.n_steps
    if checkpoint_interval is None:
        checkpoint_interval = spec.optimizer.checkpoint_interval
    k = checkpoint_interval or max(1, math.ceil(math.sqrt(max(n, 1))))

    forces_fn = make_forces_fn(compiled, p)
    masses, free = compiled.masses, compiled.free_mask
    frame_set = set(compiled.frame_steps)

    # Forward: checkpoints every k steps plus robot images at recorded frames.
    checkpoints = {0: rest_state(compiled)}
    frame_rasters = {}
    state = checkpoints[0].copy()
    if 0 in frame_set:
        frame_rasters[0] = render_robot(compiled, state.positions)
    for s in range(1, n + 1):
        state = step(state, forces_fn, masses, free, dt, step_index=s)
        if s % k == 0 and s < n:
            checkpoints[s] = state.copy()
        if s in frame_set:
            frame_rasters[s] = render_robot(compiled, state.positions)
    loss, grip, avoid = loss_terms(
        compiled, [frame_rasters[s] for s in compiled.frame_steps])

    def loss_position_grad(step_index, positions):
        spec_ = compiled.spec
        obj_imgs = object_images(compiled)
        n_frames = len(compiled.frame_steps)
        xgrad = np.zeros_like(positions)
        rasters = frame_rasters[step_index]
        for oid, weight in compiled.interest_weights.items():
            for f, cam in enumerate(compiled.rigs[oid].cameras):
                res = rasters[(oid, f)]
                mask = (res.depth - obj_imgs[(oid, f)]) > 0.0
                gdepth = weight * mask / (6.0 * n_frames * res.depth.size)
                gdepth = renderer.blur_depth_backward(gdepth, spec_.blur_sigma)
                xgrad += renderer.rasterize_backward(
                    positions, compiled.mesh.surface_tris, cam, res.tri_id, gdepth)
        return xgrad

    xbar = np.zeros_like(state.positions)
    vbar = np.zeros_like(state.velocities)
    pbar = np.zeros(len(p))
    if n in frame_set:
        xbar += loss_position_grad(n, state.positions)
    if n == 0:
        # duration 0: loss depends on the rest state only, which is constant in p
        return GradientReport(loss, pbar, "adjoint",
                              {"checkpoint_interval": k, "grip_term": grip,
                               "avoid_term": avoid})

    seg_end = n
    while seg_end > 0:
        seg_start = (seg_end - 1) // k * k
        seg_states = [checkpoints[seg_start].copy()]
        st = seg_states[0]
        for s in range(seg_start + 1, seg_end + 1):
            st = step(st, forces_fn, masses, free, dt, step_index=s)
            seg_states.append(st)
        for s in range(seg_end, seg_start, -1):
            prev = seg_states[s - seg_start - 1]
            wbar = free[:, None] * (vbar + dt * xbar)
            fbar = (dt / masses)[:, None] * wbar
            xb, vb, pb = force_vjp(compiled, prev.positions, prev.velocities, p, fbar)
            xbar = xbar + xb
            vbar = wbar + vb
            pbar += pb
            if (s - 1) in frame_set and s - 1 > 0:
                xbar += loss_position_grad(s - 1, prev.positions)
        seg_end = seg_start

    return GradientReport(
        loss_value=loss, grad=pbar, method="adjoint",
        diagnostics={"checkpoint_interval": k, "num_checkpoints": len(checkpoints),
                     "grip_term": grip, "avoid_term": avoid},
    )
