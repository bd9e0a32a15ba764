"""Cable actuation: pull-ratio parameterization and via-point spring forces.

Each cable is a chain of H >= 2 via points embedded in the robot mesh.  The
segment between consecutive via points acts as a spring whose force scales
with the dimensionless pull ratio p; damping acts on the absolute via-point
velocity.  Two force conventions are provided:

``conserving`` (default)
    Each segment spring pushes its two endpoints with equal and opposite
    forces, so the spring part of the total force telescopes to zero.

``literal``
    The sign-flipping recursion f_1 = p k (h_2 - h_1) - b h1', f_i =
    -f_{i-1} + p k (h_{i+1} - h_i) - b hi', f_H = -f_{H-1} - b hH'.  For
    H >= 3 this injects net momentum; it is kept behind a flag for fidelity
    with the recursion as published.

Both are linear maps of the segment spring forces and via velocities, so each
cable precomputes its (H, H-1) and (H, H) coefficient matrices once; the
adjoint engine reuses their transposes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tetmesh import BarycentricEmbedding, interpolate, scatter_forces

MODES = ("conserving", "literal")


def pull_ratio_from_geometry(h0, h1, hH) -> float:
    """Pull ratio: pulled length over cable span, ||h1 - h0|| / ||hH - h1||."""
    h0, h1, hH = (np.asarray(x, dtype=np.float64) for x in (h0, h1, hH))
    span = np.linalg.norm(hH - h1)
    if span == 0.0:
        raise ZeroDivisionError("cable span ||hH - h1|| is zero")
    return float(np.linalg.norm(h1 - h0) / span)


def _force_matrices(H: int, damping: float, mode: str):
    """Coefficient matrices (M_s, M_v) with f = M_s @ s + M_v @ v.

    ``s`` holds the H-1 segment spring forces p*k*(h_{j+1} - h_j), ``v`` the
    H via velocities.
    """
    if mode == "conserving":
        m_s = np.zeros((H, H - 1))
        for j in range(H - 1):
            m_s[j, j] += 1.0
            m_s[j + 1, j] -= 1.0
        m_v = -damping * np.eye(H)
        return m_s, m_v
    if mode == "literal":
        m_s = np.zeros((H, H - 1))
        m_v = np.zeros((H, H))
        for i in range(H - 1):
            m_s[i, i] = 1.0
            m_v[i, i] = -damping
            if i > 0:
                m_s[i] -= m_s[i - 1]
                m_v[i] -= m_v[i - 1]
        m_s[H - 1] = -m_s[H - 2]
        m_v[H - 1] = -m_v[H - 2]
        m_v[H - 1, H - 1] -= damping
        return m_s, m_v
    raise ValueError(f"unknown cable force mode {mode!r}; choose from {MODES}")


@dataclass
class Cable:
    """One cable: embedded via points, spring constants, and its pull ratio."""

    embedding: BarycentricEmbedding
    stiffness: float = 100.0      # N/m
    damping: float = 0.01         # kg/s
    pull_ratio: float = 0.0       # dimensionless, >= 0
    _matrices: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.embedding.num_points < 2:
            raise ValueError("a cable needs at least 2 via points")
        if self.pull_ratio < 0.0:
            raise ValueError("pull ratio must be nonnegative")

    @property
    def num_via_points(self) -> int:
        return self.embedding.num_points

    def matrices(self, mode: str):
        if mode not in self._matrices:
            self._matrices[mode] = _force_matrices(self.num_via_points, self.damping, mode)
        return self._matrices[mode]


def segment_forces(cable: Cable, pull_ratio: float, via_pos: np.ndarray) -> np.ndarray:
    """Spring force of each of the H-1 segments: p * k * (h_{j+1} - h_j)."""
    return pull_ratio * cable.stiffness * (via_pos[1:] - via_pos[:-1])


def via_point_forces(
    cable: Cable,
    via_pos: np.ndarray,
    via_vel: np.ndarray,
    mode: str = "conserving",
    pull_ratio: float | None = None,
) -> np.ndarray:
    """Forces at the H via points, (H, 3) in newtons."""
    via_pos = np.asarray(via_pos, dtype=np.float64)
    via_vel = np.asarray(via_vel, dtype=np.float64)
    H = cable.num_via_points
    if via_pos.shape != (H, 3) or via_vel.shape != (H, 3):
        raise ValueError(f"expected ({H}, 3) via positions and velocities")
    p = cable.pull_ratio if pull_ratio is None else pull_ratio
    m_s, m_v = cable.matrices(mode)
    return m_s @ segment_forces(cable, p, via_pos) + m_v @ via_vel


def nodal_cable_forces(
    cable: Cable,
    nodal_pos: np.ndarray,
    nodal_vel: np.ndarray,
    mode: str = "conserving",
    pull_ratio: float | None = None,
    scatter_mode: str = "transpose",
) -> np.ndarray:
    """Cable force field on the mesh nodes, (N, 3).

    Via-point kinematics are always interpolated from the nodal state; the
    via forces are then scattered back through the same embedding.
    """
    via_pos = interpolate(cable.embedding, nodal_pos)
    via_vel = interpolate(cable.embedding, nodal_vel)
    f_via = via_point_forces(cable, via_pos, via_vel, mode=mode, pull_ratio=pull_ratio)
    return scatter_forces(cable.embedding, f_via, mode=scatter_mode)
