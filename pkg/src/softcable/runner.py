"""Experiment orchestration: projected gradient descent over pull ratios.

Every experiment starts from p = 0, iterates simulate -> render -> loss ->
gradient -> projected update, and writes a deterministic artifact bundle:

* ``trace.csv`` - iter, loss, grip_term, avoid_term, p_1..p_C, grad_1..grad_C
  (one row per evaluated iterate, including the final one);
* ``delta_i/`` - distance-image cube maps (16-bit PGM) at the first and final
  iterate, per interest object and face;
* ``frames/`` - OBJ surface snapshots of the initial and final trajectories
  at the recorded frames;
* ``scene.json`` - the fully defaulted scene echo.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from . import objective
from .gradient import adjoint_gradient, evaluate_loss, fd_gradient, object_images
from .renderer import write_pgm16
from .scene import CompiledScene, Scene, compile_scene, parse_scene, scene_to_dict

__all__ = [
    "parse_scene", "compile_scene", "Scene", "gd_step", "run_experiment",
    "export_obj",
]


class NumericalError(ArithmeticError):
    """Non-finite quantity reached the optimizer."""


def gd_step(pull_ratios, grad, learning_rate: float) -> np.ndarray:
    """Projected gradient-descent update: p' = max(p - lr * grad, 0)."""
    p = np.asarray(pull_ratios, dtype=np.float64)
    g = np.asarray(grad, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"pull ratios {p.shape} vs gradient {g.shape}")
    if not np.isfinite(g).all():
        raise NumericalError(f"non-finite gradient {g}")
    return np.maximum(p - learning_rate * g, 0.0)


def export_obj(path, vertices: np.ndarray, triangles: np.ndarray) -> None:
    """Write a triangle surface as a Wavefront OBJ file."""
    with open(path, "w") as f:
        for v in vertices:
            f.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in triangles:
            f.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")


def _compute_gradient(compiled: CompiledScene, p, method: str):
    if method == "adjoint":
        return adjoint_gradient(compiled, p)
    return fd_gradient(compiled, p)


def _write_delta_images(compiled: CompiledScene, evaluation, out_dir, tag: str):
    os.makedirs(out_dir, exist_ok=True)
    obj_imgs = object_images(compiled)
    last_frame = evaluation.robot_frames[-1]
    for oid in compiled.interest_weights:
        rig = compiled.rigs[oid]
        for f, cam in enumerate(rig.cameras):
            delta = objective.distance_image(
                last_frame[(oid, f)].depth, obj_imgs[(oid, f)])
            write_pgm16(
                os.path.join(out_dir, f"{tag}_{oid}_face{f}.pgm"),
                delta, 0.0, cam.far)


def _write_frames(compiled: CompiledScene, evaluation, out_dir, tag: str):
    os.makedirs(out_dir, exist_ok=True)
    for (step_idx, state) in evaluation.snapshots:
        export_obj(
            os.path.join(out_dir, f"{tag}_step{step_idx:06d}.obj"),
            state.positions, compiled.mesh.surface_tris)


def run_experiment(scene: Scene, output_dir, iterations: int | None = None,
                   gradient_method: str | None = None) -> dict:
    """Run the full optimization protocol and write the artifact bundle.

    Returns a summary dict with the trace rows and final pull ratios.
    """
    os.makedirs(output_dir, exist_ok=True)
    compiled = compile_scene(scene)
    iters = scene.optimizer.iterations if iterations is None else iterations
    method = gradient_method or scene.optimizer.gradient_method
    lr = scene.optimizer.learning_rate
    c = compiled.num_cables

    with open(os.path.join(output_dir, "scene.json"), "w") as f:
        json.dump(scene_to_dict(scene), f, indent=2)

    header = (["iter", "loss", "grip_term", "avoid_term"]
              + [f"p_{i + 1}" for i in range(c)]
              + [f"grad_{i + 1}" for i in range(c)])
    rows = []
    p = np.zeros(c)
    first_eval = final_eval = None
    trace_path = os.path.join(output_dir, "trace.csv")
    with open(trace_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for it in range(iters + 1):
            try:
                report = _compute_gradient(compiled, p, method)
            except Exception as exc:
                writer.writerow([it, f"error: {exc}"])
                raise
            grip = report.diagnostics.get("grip_term", report.loss_value)
            avoid = report.diagnostics.get("avoid_term", 0.0)
            row = ([it, repr(report.loss_value), repr(grip), repr(avoid)]
                   + [repr(float(x)) for x in p]
                   + [repr(float(g)) for g in report.grad])
            writer.writerow(row)
            rows.append({"iter": it, "loss": report.loss_value, "grip": grip,
                         "avoid": avoid, "p": p.copy(), "grad": report.grad.copy()})
            if it == 0 or it == iters:
                evaluation = evaluate_loss(compiled, p)
                tag = "initial" if it == 0 else "final"
                _write_delta_images(compiled, evaluation,
                                    os.path.join(output_dir, "delta_i"), tag)
                _write_frames(compiled, evaluation,
                              os.path.join(output_dir, "frames"), tag)
                if it == 0:
                    first_eval = evaluation
                if it == iters:
                    final_eval = evaluation
            if it < iters:
                p = gd_step(p, report.grad, lr)

    return {
        "rows": rows,
        "final_p": p,
        "trace_path": trace_path,
        "initial_eval": first_eval,
        "final_eval": final_eval,
        "compiled": compiled,
    }
