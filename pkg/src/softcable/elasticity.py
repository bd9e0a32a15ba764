"""Hyperelastic FEM forces on the tet mesh, lumped mass, and gravity.

The constitutive model is stable Neo-Hookean,

    Psi(F) = mu/2 (tr(F^T F) - 3) - mu (J - 1) + lam'/2 (J - 1)^2,

with J = det F and lam' = lam + mu, evaluated per tet on the deformation
gradient F = Ds Dm^{-1}.  The model is rotation-aware and tolerates element
inversion (J <= 0); inverted elements are only counted in diagnostics.

Material damping is Kelvin-Voigt: a per-tet stress damping_factor * mu * Fdot
added to the elastic stress.  The paper-supplied "damping factor" has no
published definition, so this interpretation is declared here: it makes the
damping vanish at zero velocity and act like a viscosity of
damping_factor * mu Pa.s.  Note the resulting explicit-integration stability
bound dt < 2 rho h^2 / (damping_factor * mu) on element size h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tetmesh import TetMesh, tet_volumes


@dataclass(frozen=True)
class Material:
    """Isotropic hyperelastic material parameters."""

    young_modulus: float     # Pa
    poisson_ratio: float     # dimensionless, in (0, 0.5)
    density: float           # kg/m^3
    damping_factor: float = 0.0

    def __post_init__(self):
        if self.young_modulus <= 0:
            raise ValueError("Young's modulus must be positive")
        if not 0.0 < self.poisson_ratio < 0.5:
            raise ValueError(
                f"Poisson's ratio must lie in (0, 0.5); {self.poisson_ratio} "
                "is incompressible or invalid"
            )
        if self.density <= 0:
            raise ValueError("density must be positive")
        if self.damping_factor < 0:
            raise ValueError("damping factor must be nonnegative")


@dataclass(frozen=True)
class LameParams:
    mu: float        # Pa
    lam: float       # Pa


def lame_from_material(m: Material) -> LameParams:
    """First and second Lame parameters from (E, nu)."""
    e, nu = m.young_modulus, m.poisson_ratio
    return LameParams(
        mu=e / (2.0 * (1.0 + nu)),
        lam=e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
    )


def lumped_masses(mesh: TetMesh, density: float) -> np.ndarray:
    """Per-vertex lumped masses: each tet spreads rho*vol/4 to its corners."""
    vols = tet_volumes(mesh.vertices, mesh.tets)
    masses = np.zeros(mesh.num_vertices)
    share = np.repeat(density * vols / 4.0, 4)
    np.add.at(masses, mesh.tets.reshape(-1), share)
    return masses


@dataclass(frozen=True)
class FemPrecomp:
    """Rest-configuration quantities reused every force evaluation."""

    dm_inv: np.ndarray       # (M, 3, 3)
    rest_volumes: np.ndarray  # (M,)


def precompute_fem(mesh: TetMesh, rest_pos: np.ndarray | None = None) -> FemPrecomp:
    rest_pos = mesh.vertices if rest_pos is None else np.asarray(rest_pos, dtype=np.float64)
    v = rest_pos[mesh.tets]
    dm = np.swapaxes(v[:, 1:] - v[:, :1], 1, 2)
    vols = np.linalg.det(dm) / 6.0
    if (vols <= 0).any():
        raise ValueError("rest configuration has non-positive tet volumes")
    return FemPrecomp(dm_inv=np.linalg.inv(dm), rest_volumes=vols)


def _def_grad(mesh, pos, precomp):
    v = pos[mesh.tets]
    ds = np.swapaxes(v[:, 1:] - v[:, :1], 1, 2)
    return ds @ precomp.dm_inv


def _cofactor(f):
    """Cofactor matrix of a batch of 3x3 matrices (columns are cross products)."""
    c = np.empty_like(f)
    c[:, :, 0] = np.cross(f[:, :, 1], f[:, :, 2])
    c[:, :, 1] = np.cross(f[:, :, 2], f[:, :, 0])
    c[:, :, 2] = np.cross(f[:, :, 0], f[:, :, 1])
    return c


def _stress_to_forces(mesh, stress, precomp):
    """Nodal forces from a per-tet first Piola-Kirchhoff stress."""
    h = -precomp.rest_volumes[:, None, None] * (
        stress @ np.swapaxes(precomp.dm_inv, 1, 2)
    )                                           # (M, 3, 3): columns act on nodes 1..3
    forces = np.zeros((mesh.num_vertices, 3))
    g123 = np.swapaxes(h, 1, 2)                 # (M, node, 3)
    g0 = -g123.sum(axis=1, keepdims=True)
    contrib = np.concatenate([g0, g123], axis=1)
    np.add.at(forces, mesh.tets.reshape(-1), contrib.reshape(-1, 3))
    return forces


def elastic_forces(
    mesh: TetMesh,
    rest_pos: np.ndarray,
    pos: np.ndarray,
    vel: np.ndarray,
    material: Material,
    precomp: FemPrecomp | None = None,
):
    """Stable Neo-Hookean nodal forces with Kelvin-Voigt damping.

    Returns (forces (N,3) in newtons, elastic energy in joules,
    inverted-element count).  The energy excludes the damping term.
    """
    if precomp is None:
        precomp = precompute_fem(mesh, rest_pos)
    lame = lame_from_material(material)
    mu, lam_p = lame.mu, lame.lam + lame.mu

    f = _def_grad(mesh, np.asarray(pos, dtype=np.float64), precomp)
    j = np.linalg.det(f)
    cof = _cofactor(f)
    stress = mu * f + (lam_p * (j - 1.0) - mu)[:, None, None] * cof

    i_c = np.einsum("mij,mij->m", f, f)
    psi = 0.5 * mu * (i_c - 3.0) - mu * (j - 1.0) + 0.5 * lam_p * (j - 1.0) ** 2
    energy = float(np.dot(precomp.rest_volumes, psi))

    if material.damping_factor > 0.0:
        fdot = _def_grad(mesh, np.asarray(vel, dtype=np.float64), precomp)
        stress = stress + (material.damping_factor * mu) * fdot

    forces = _stress_to_forces(mesh, stress, precomp)
    return forces, energy, int(np.count_nonzero(j <= 0.0))


def elastic_force_differential(
    mesh: TetMesh,
    pos: np.ndarray,
    dpos: np.ndarray,
    material: Material,
    precomp: FemPrecomp | None = None,
) -> np.ndarray:
    """Directional derivative of the elastic (conservative) force along dpos.

    The elastic force is -grad(E) with symmetric Hessian, so this is also the
    transpose-Jacobian product used by the adjoint engine.
    """
    if precomp is None:
        precomp = precompute_fem(mesh)
    lame = lame_from_material(material)
    mu, lam_p = lame.mu, lame.lam + lame.mu

    f = _def_grad(mesh, np.asarray(pos, dtype=np.float64), precomp)
    df = _def_grad(mesh, np.asarray(dpos, dtype=np.float64), precomp)
    j = np.linalg.det(f)
    cof = _cofactor(f)

    dcof = np.empty_like(f)
    dcof[:, :, 0] = np.cross(df[:, :, 1], f[:, :, 2]) + np.cross(f[:, :, 1], df[:, :, 2])
    dcof[:, :, 1] = np.cross(df[:, :, 2], f[:, :, 0]) + np.cross(f[:, :, 2], df[:, :, 0])
    dcof[:, :, 2] = np.cross(df[:, :, 0], f[:, :, 1]) + np.cross(f[:, :, 0], df[:, :, 1])

    dj = np.einsum("mij,mij->m", cof, df)
    dstress = (
        mu * df
        + (lam_p * dj)[:, None, None] * cof
        + (lam_p * (j - 1.0) - mu)[:, None, None] * dcof
    )
    return _stress_to_forces(mesh, dstress, precomp)


def damping_force_apply(
    mesh: TetMesh,
    dvel: np.ndarray,
    material: Material,
    precomp: FemPrecomp | None = None,
) -> np.ndarray:
    """The (symmetric) Kelvin-Voigt damping operator applied to a velocity field."""
    if precomp is None:
        precomp = precompute_fem(mesh)
    lame = lame_from_material(material)
    fdot = _def_grad(mesh, np.asarray(dvel, dtype=np.float64), precomp)
    return _stress_to_forces(mesh, (material.damping_factor * lame.mu) * fdot, precomp)


def gravity_forces(masses: np.ndarray, gravity) -> np.ndarray:
    """Per-node weight m_i * g, (N, 3)."""
    return masses[:, None] * np.asarray(gravity, dtype=np.float64)[None, :]


def total_forces(
    mesh: TetMesh,
    positions: np.ndarray,
    velocities: np.ndarray,
    material: Material,
    cables=(),
    pull_ratios=None,
    contact_shapes=(),
    contact_params=None,
    gravity=(0.0, 0.0, 0.0),
    masses: np.ndarray | None = None,
    precomp: FemPrecomp | None = None,
    cable_mode: str = "conserving",
    scatter_mode: str = "transpose",
):
    """Deterministic fixed-order total force: cables + elastic + gravity + contact.

    Fixed nodes still receive their computed force; zeroing is the
    integrator's job.  Returns (forces, diagnostics dict).
    """
    from .cable import nodal_cable_forces
    from .contact import penalty_forces

    if masses is None:
        masses = lumped_masses(mesh, material.density)
    total = np.zeros((mesh.num_vertices, 3))
    for c, cab in enumerate(cables):
        p = None if pull_ratios is None else float(pull_ratios[c])
        total += nodal_cable_forces(
            cab, positions, velocities, mode=cable_mode,
            pull_ratio=p, scatter_mode=scatter_mode,
        )
    f_el, energy, inverted = elastic_forces(
        mesh, mesh.vertices, positions, velocities, material, precomp
    )
    total += f_el
    total += gravity_forces(masses, gravity)
    for shape in contact_shapes:
        total += penalty_forces(positions, velocities, shape, contact_params)
    return total, {"elastic_energy": energy, "inverted_tets": inverted}
