"""Time integration of the soft body: semi-implicit (symplectic) Euler.

Each step evaluates the total force at the current state, updates velocities
first and positions second, and pins fixed nodes by zeroing their velocity.
Everything is deterministic: fixed summation order in the force assembly,
sequential stepping, no threading in the loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import elasticity
from .scene import CompiledScene


class IntegrationError(ArithmeticError):
    """Non-finite state or force encountered during time stepping."""


@dataclass
class SimState:
    """Nodal positions/velocities (meters, m/s) at one time instant."""

    positions: np.ndarray     # (N, 3)
    velocities: np.ndarray    # (N, 3)
    time: float = 0.0

    def copy(self) -> "SimState":
        return SimState(self.positions.copy(), self.velocities.copy(), self.time)


def rest_state(compiled: CompiledScene) -> SimState:
    n = compiled.mesh.num_vertices
    return SimState(compiled.mesh.vertices.copy(), np.zeros((n, 3)), 0.0)


def step(state: SimState, forces_fn, masses, free_mask, dt: float,
         step_index: int = 0) -> SimState:
    """One symplectic Euler step: v' = v + dt F/m (0 on fixed), x' = x + dt v'."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    forces = forces_fn(state.positions, state.velocities)
    if not np.isfinite(forces).all():
        node = int(np.flatnonzero(~np.isfinite(forces).all(axis=1))[0])
        raise IntegrationError(
            f"non-finite force at node {node} in step {step_index}")
    vel = state.velocities + (dt / masses)[:, None] * forces
    vel[~free_mask] = 0.0
    pos = state.positions + dt * vel
    if not np.isfinite(pos).all():
        node = int(np.flatnonzero(~np.isfinite(pos).all(axis=1))[0])
        raise IntegrationError(
            f"non-finite position at node {node} in step {step_index}")
    return SimState(pos, vel, state.time + dt)


def make_forces_fn(compiled: CompiledScene, pull_ratios):
    """Total-force closure F(x, v) for a compiled scene at fixed pull ratios."""
    pull_ratios = np.asarray(pull_ratios, dtype=np.float64)
    if len(pull_ratios) != compiled.num_cables:
        raise ValueError(
            f"got {len(pull_ratios)} pull ratios for {compiled.num_cables} cables")
    spec = compiled.spec

    def forces_fn(positions, velocities):
        forces, _ = elasticity.total_forces(
            compiled.mesh, positions, velocities, compiled.material,
            cables=compiled.cables, pull_ratios=pull_ratios,
            contact_shapes=compiled.contact_shapes,
            contact_params=spec.contact,
            gravity=spec.sim.gravity,
            masses=compiled.masses,
            precomp=compiled.precomp,
            cable_mode=spec.robot.cable_mode,
            scatter_mode=spec.robot.scatter_mode,
        )
        return forces

    return forces_fn


def simulate(compiled: CompiledScene, pull_ratios, duration: float | None = None,
             record_all: bool = False):
    """Advance the scene from rest under the given pull ratios.

    Returns (final state, snapshots) where snapshots is a list of
    (step index, SimState) at the configured render frames (or at every step
    when ``record_all``).
    """
    from .scene import frame_step_indices

    spec = compiled.spec
    dt = spec.sim.dt
    if duration is None:
        n_steps, frames = compiled.n_steps, compiled.frame_steps
    else:
        if duration < 0:
            raise ValueError("duration must be nonnegative")
        n_steps = int(np.ceil(duration / dt - 1e-12))
        frames = frame_step_indices(n_steps, spec.sim.frames, spec.sim.frame_window)

    forces_fn = make_forces_fn(compiled, pull_ratios)
    state = rest_state(compiled)
    frame_set = set(frames)
    snapshots = [(0, state.copy())] if (record_all or 0 in frame_set) else []
    for k in range(1, n_steps + 1):
        state = step(state, forces_fn, compiled.masses, compiled.free_mask, dt,
                     step_index=k)
        if record_all or k in frame_set:
            snapshots.append((k, state.copy()))
    return state, snapshots


def save_state(path, state: SimState) -> None:
    """Binary state dump (positions, velocities, time)."""
    np.savez(path, positions=state.positions, velocities=state.velocities,
             time=np.float64(state.time))


def load_state(path) -> SimState:
    with np.load(path) as data:
        return SimState(data["positions"], data["velocities"], float(data["time"]))
