"""Differentiable cable-driven soft-robot control synthesis.

Simulates tetrahedral FEM soft bodies actuated by cables, renders depth
images from cameras placed inside scene objects, evaluates grip/avoid
depth-image objectives, and optimizes cable pull ratios by projected
gradient descent.
"""

from .cable import Cable, nodal_cable_forces, pull_ratio_from_geometry, via_point_forces
from .contact import CappedCylinder, ContactParams, Egg, HalfSpace, Sphere, sdf_eval
from .elasticity import Material, elastic_forces, lame_from_material, lumped_masses
from .gradient import GradientReport, adjoint_gradient, evaluate_loss, fd_gradient
from .objective import avoid_loss, combined_loss, distance_image, grip_loss
from .renderer import Camera, CubeRig, cube_rig, rasterize_depth
from .runner import gd_step, run_experiment
from .scene import Scene, SceneError, compile_scene, parse_scene
from .simulator import SimState, simulate, step
from .tetmesh import (
    BarycentricEmbedding,
    TetMesh,
    embed_points,
    generate_robot,
    interpolate,
    load_mesh,
    scatter_forces,
)

__version__ = "0.1.0"
