"""Command-line entry points.

Subcommands:

* ``run <scene.json> --out DIR [--iters N] [--gradient fd|adjoint] [--threads T]``
* ``simulate <scene.json> --p v1,v2,... --out DIR``
* ``render <scene.json> --state state.npz --out DIR``
* ``gradcheck <scene.json> [--p v1,v2,...]``

Exit codes: 0 success, 2 scene validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .gradient import adjoint_gradient, fd_gradient, object_images, render_robot
from .renderer import write_pgm16
from .runner import export_obj, run_experiment
from .scene import SceneError, compile_scene, parse_scene
from .simulator import IntegrationError, load_state, save_state, simulate


def _parse_p(text, num_cables):
    if text is None:
        return np.zeros(num_cables)
    values = np.array([float(x) for x in text.split(",")])
    if len(values) != num_cables:
        raise SceneError(f"--p expects {num_cables} values, got {len(values)}")
    return values


def _cmd_run(args):
    scene = parse_scene(args.scene)
    method = {"fd": "fd_central", "adjoint": "adjoint", None: None}[args.gradient]
    summary = run_experiment(scene, args.out, iterations=args.iters,
                             gradient_method=method)
    last = summary["rows"][-1]
    print(f"{scene.name}: {len(summary['rows'])} evaluations, "
          f"final loss {last['loss']:.6g}, p = {np.round(summary['final_p'], 4).tolist()}")
    return 0


def _cmd_simulate(args):
    scene = parse_scene(args.scene)
    compiled = compile_scene(scene)
    p = _parse_p(args.p, compiled.num_cables)
    final, snapshots = simulate(compiled, p)
    os.makedirs(args.out, exist_ok=True)
    save_state(os.path.join(args.out, "state.npz"), final)
    for step_idx, st in snapshots:
        export_obj(os.path.join(args.out, f"step{step_idx:06d}.obj"),
                   st.positions, compiled.mesh.surface_tris)
    print(f"simulated {compiled.n_steps} steps; final state and "
          f"{len(snapshots)} frame snapshots in {args.out}")
    return 0


def _cmd_render(args):
    scene = parse_scene(args.scene)
    compiled = compile_scene(scene)
    state = load_state(args.state)
    os.makedirs(args.out, exist_ok=True)
    robot = render_robot(compiled, state.positions)
    objects = object_images(compiled)
    for (oid, face), res in robot.items():
        cam = compiled.rigs[oid].cameras[face]
        write_pgm16(os.path.join(args.out, f"robot_{oid}_face{face}.pgm"),
                    res.depth, cam.near, cam.far)
        write_pgm16(os.path.join(args.out, f"object_{oid}_face{face}.pgm"),
                    objects[(oid, face)], cam.near, cam.far)
    print(f"wrote {2 * len(robot)} depth images to {args.out}")
    return 0


def _cmd_gradcheck(args):
    scene = parse_scene(args.scene)
    compiled = compile_scene(scene)
    p = _parse_p(args.p, compiled.num_cables)
    fd = fd_gradient(compiled, p)
    adj = adjoint_gradient(compiled, p)
    print(f"loss: fd {fd.loss_value!r}  adjoint {adj.loss_value!r}")
    print(f"{'cable':>6} {'fd_central':>16} {'adjoint':>16} {'abs diff':>12} {'rel diff':>10}")
    for i in range(len(p)):
        a, b = fd.grad[i], adj.grad[i]
        denom = max(abs(a), abs(b), 1e-300)
        print(f"{i + 1:>6} {a:>16.8e} {b:>16.8e} {abs(a - b):>12.3e} "
              f"{abs(a - b) / denom:>10.2%}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="softcable",
        description="Differentiable cable-driven soft-robot control synthesis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the optimization protocol on a scene")
    run.add_argument("scene")
    run.add_argument("--out", required=True)
    run.add_argument("--iters", type=int, default=None)
    run.add_argument("--gradient", choices=["fd", "adjoint"], default=None)
    run.add_argument("--threads", type=int, default=1,
                     help="accepted for compatibility; execution is sequential "
                          "and output is thread-count independent")
    run.set_defaults(func=_cmd_run)

    sim = sub.add_parser("simulate", help="simulate at fixed pull ratios")
    sim.add_argument("scene")
    sim.add_argument("--p", default=None, help="comma-separated pull ratios")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    ren = sub.add_parser("render", help="render depth images of a saved state")
    ren.add_argument("scene")
    ren.add_argument("--state", required=True)
    ren.add_argument("--out", required=True)
    ren.set_defaults(func=_cmd_render)

    gc = sub.add_parser("gradcheck", help="compare fd and adjoint gradients")
    gc.add_argument("scene")
    gc.add_argument("--p", default=None, help="comma-separated pull ratios")
    gc.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SceneError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
