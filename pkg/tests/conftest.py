import copy

import numpy as np
import pytest

from softcable.scene import compile_scene, parse_scene_dict

# A tiny, fast finger-over-ball scene used across the suites.  Element size
# and damping are matched so the explicit damping operator stays well inside
# its stability limit at the configured dt.
SMALL_SCENE = {
    "name": "unit",
    "robot": {
        "generator": {"kind": "finger", "segments": 3, "cross_segments": 1,
                      "n_cables": 1, "cable_offset_fraction": 0.8,
                      "length": 0.12, "width": 0.05, "height": 0.05},
        "material": {"young_modulus_pa": 30000.0, "poisson_ratio": 0.4,
                     "density_kg_m3": 1080.0, "damping_factor": 0.02},
        "cable_stiffness_n_m": 15000.0,
    },
    "objects": [
        {"id": "ball", "role": "target",
         "shape": {"type": "sphere", "center": [0.07, 0.0, -0.06],
                   "radius": 0.035},
         "rig": {"resolution": 16, "far": 0.12}},
    ],
    "sim": {"dt": 0.0002, "duration_s": 0.1, "frames": 3},
    "task": {"target": "ball"},
    "optimizer": {"learning_rate": 0.1, "iterations": 2,
                  "gradient_method": "fd_central"},
    "render": {"blur_sigma": 1.5},
}


def make_scene(**overrides):
    doc = copy.deepcopy(SMALL_SCENE)
    for path, value in overrides.items():
        node = doc
        keys = path.split(".")
        for k in keys[:-1]:
            node = node[k]
        node[keys[-1]] = value
    return parse_scene_dict(doc)


@pytest.fixture(scope="session")
def small_compiled():
    return compile_scene(make_scene())


@pytest.fixture
def small_scene():
    return make_scene()
