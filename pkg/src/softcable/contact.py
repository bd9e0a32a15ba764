"""Differentiable penalty contact between mesh nodes and analytic shapes.

Shapes are signed-distance primitives (negative inside).  Contact is
node-vs-SDF penalty only: a node at depth d < 0 feels a smooth force
(-stiffness * d) n - damping (v . n) n along the outward normal n, zero at and
outside the surface.  Obstacles and targets in no-contact scenes simply never
enter the shape list, so disabling collisions is bitwise equivalent to the
module being absent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ContactParams:
    penalty_stiffness: float = 1.0e4   # N/m
    penalty_damping: float = 1.0       # N.s/m

    def __post_init__(self):
        if self.penalty_stiffness < 0 or self.penalty_damping < 0:
            raise ValueError("contact penalty coefficients must be nonnegative")


def _unit(v, name):
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-12:
        raise ValueError(f"{name} must be unit length (got norm {n})")
    return v


@dataclass(frozen=True)
class Sphere:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("sphere radius must be positive")


@dataclass(frozen=True)
class CappedCylinder:
    """Finite cylinder from ``base`` extending ``height`` along the unit ``axis``."""

    base: tuple
    axis: tuple
    radius: float
    height: float

    def __post_init__(self):
        _unit(self.axis, "cylinder axis")
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("cylinder radius and height must be positive")


@dataclass(frozen=True)
class Egg:
    """Sphere scaled along +z with separate top/bottom polar scales.

    The distance is the scaled-space sphere SDF times the smallest axis scale:
    a conservative approximation whose zero level set and sign are exact.
    """

    center: tuple
    equatorial_radius: float
    polar_scale_top: float
    polar_scale_bottom: float

    def __post_init__(self):
        if min(self.equatorial_radius, self.polar_scale_top, self.polar_scale_bottom) <= 0:
            raise ValueError("egg radius and polar scales must be positive")


@dataclass(frozen=True)
class HalfSpace:
    """All points with (p - point) . normal < 0 are inside."""

    point: tuple
    normal: tuple

    def __post_init__(self):
        _unit(self.normal, "half-space normal")


SDFShape = Sphere | CappedCylinder | Egg | HalfSpace


def _perp_unit(axis):
    # deterministic unit vector orthogonal to axis, for on-axis subgradients
    trial = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(trial, axis)) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    v = np.cross(axis, trial)
    return v / np.linalg.norm(v)


def sdf_eval(shape: SDFShape, points: np.ndarray):
    """Signed distance and outward unit gradient at each point.

    ``points`` may be (3,) or (P, 3); returns (distance (P,), gradient (P, 3))
    with matching leading shape.  At medial-axis points a fixed deterministic
    subgradient is returned.
    """
    points = np.asarray(points, dtype=np.float64)
    single = points.ndim == 1
    p = np.atleast_2d(points)

    if isinstance(shape, Sphere):
        rel = p - np.asarray(shape.center)
        r = np.linalg.norm(rel, axis=1)
        d = r - shape.radius
        grad = np.where(r[:, None] > 0.0, rel / np.maximum(r, 1e-300)[:, None],
                        np.array([0.0, 0.0, 1.0]))
    elif isinstance(shape, HalfSpace):
        normal = np.asarray(shape.normal)
        d = (p - np.asarray(shape.point)) @ normal
        grad = np.broadcast_to(normal, p.shape).copy()
    elif isinstance(shape, Egg):
        rel = p - np.asarray(shape.center)
        s = np.where(rel[:, 2] >= 0.0, shape.polar_scale_top, shape.polar_scale_bottom)
        q = rel.copy()
        q[:, 2] /= s
        r = np.linalg.norm(q, axis=1)
        scale = min(1.0, shape.polar_scale_top, shape.polar_scale_bottom)
        d = (r - shape.equatorial_radius) * scale
        g = q.copy()
        g[:, 2] /= s
        gn = np.linalg.norm(g, axis=1)
        grad = np.where(gn[:, None] > 0.0, g / np.maximum(gn, 1e-300)[:, None],
                        np.array([0.0, 0.0, 1.0]))
    elif isinstance(shape, CappedCylinder):
        axis = np.asarray(shape.axis)
        rel = p - np.asarray(shape.base)
        t = rel @ axis
        radial = rel - t[:, None] * axis
        rho = np.linalg.norm(radial, axis=1)
        rho_hat = np.where(rho[:, None] > 1e-300, radial / np.maximum(rho, 1e-300)[:, None],
                           _perp_unit(axis))
        cap_sign = np.where(t >= shape.height / 2.0, 1.0, -1.0)
        x = rho - shape.radius
        y = np.abs(t - shape.height / 2.0) - shape.height / 2.0

        xp = np.maximum(x, 0.0)
        yp = np.maximum(y, 0.0)
        outside = np.sqrt(xp * xp + yp * yp)
        inside = np.minimum(np.maximum(x, y), 0.0)
        d = inside + outside

        grad = np.empty_like(p)
        corner = (x > 0.0) & (y > 0.0)
        side = ~corner & (x >= y)
        cap = ~corner & (y > x)
        denom = np.maximum(outside, 1e-300)
        grad[corner] = (
            (xp / denom)[corner, None] * rho_hat[corner]
            + (yp / denom * cap_sign)[corner, None] * axis
        )
        grad[side] = rho_hat[side]
        grad[cap] = cap_sign[cap, None] * axis
    else:
        raise TypeError(f"unknown SDF shape {type(shape).__name__}")

    if single:
        return float(d[0]), grad[0]
    return d, grad


def penalty_forces(
    positions: np.ndarray,
    velocities: np.ndarray,
    shape: SDFShape,
    params: ContactParams | None = None,
) -> np.ndarray:
    """Smooth penalty forces on penetrating nodes, zero elsewhere, (N, 3)."""
    params = params or ContactParams()
    positions = np.asarray(positions, dtype=np.float64)
    velocities = np.asarray(velocities, dtype=np.float64)
    d, n = sdf_eval(shape, positions)
    depth = np.minimum(d, 0.0)
    vn = np.einsum("ij,ij->i", velocities, n)
    active = (d < 0.0).astype(np.float64)
    mag = -params.penalty_stiffness * depth - params.penalty_damping * vn * active
    return (mag * active)[:, None] * n


def penalty_force_vjp(
    positions: np.ndarray,
    velocities: np.ndarray,
    shape: SDFShape,
    params: ContactParams,
    fbar: np.ndarray,
):
    """Transpose-Jacobian products of the penalty force w.r.t. (x, v).

    Uses the frozen-normal approximation: the SDF gradient n is treated as
    constant, which drops curvature terms of order depth/radius.
    """
    d, n = sdf_eval(shape, np.asarray(positions, dtype=np.float64))
    active = (d < 0.0).astype(np.float64)
    nf = np.einsum("ij,ij->i", n, np.asarray(fbar, dtype=np.float64)) * active
    xbar = (-params.penalty_stiffness * nf)[:, None] * n
    vbar = (-params.penalty_damping * nf)[:, None] * n
    return xbar, vbar
