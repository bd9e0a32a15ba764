import copy
import csv
import json
import os

import numpy as np
import pytest

from softcable import cli, runner
from softcable.scene import (SceneError, compile_scene, parse_scene,
                             parse_scene_dict, scene_to_dict)

from conftest import SMALL_SCENE, make_scene


def tiny_scene_dict(**sim):
    doc = copy.deepcopy(SMALL_SCENE)
    doc["sim"].update({"duration_s": 0.004, **sim})
    doc["optimizer"]["iterations"] = 2
    doc["objects"][0]["rig"]["resolution"] = 8
    return doc


# ---------------------------------------------------------------------------
# scene parsing
# ---------------------------------------------------------------------------

def test_parse_error_carries_field_path():
    doc = tiny_scene_dict()
    doc["task"]["alpha"] = 1.3
    with pytest.raises(SceneError, match=r"task\.alpha"):
        parse_scene_dict(doc)


def test_parse_error_on_missing_required():
    doc = tiny_scene_dict()
    del doc["robot"]["material"]
    with pytest.raises(SceneError, match=r"robot\.material"):
        parse_scene_dict(doc)


def test_parse_error_on_unknown_generator_param():
    doc = tiny_scene_dict()
    doc["robot"]["generator"]["radius"] = 0.05   # a trunk knob on a finger
    with pytest.raises(SceneError, match=r"robot\.generator\.radius"):
        parse_scene_dict(doc)


def test_parse_error_on_dangling_task_reference():
    doc = tiny_scene_dict()
    doc["task"]["target"] = "nope"
    with pytest.raises(SceneError, match="nope"):
        parse_scene_dict(doc)


def test_scene_round_trip_is_a_fixpoint():
    scene = parse_scene_dict(tiny_scene_dict())
    echoed = scene_to_dict(scene)
    again = scene_to_dict(parse_scene_dict(echoed))
    assert echoed == again


def test_parse_rejects_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SceneError, match="JSON"):
        parse_scene(path)


# ---------------------------------------------------------------------------
# optimizer step
# ---------------------------------------------------------------------------

def test_gd_step_plain_update():
    out = runner.gd_step(np.array([0.2]), np.array([1.0]), 0.1)
    np.testing.assert_allclose(out, [0.1], atol=1e-15)


def test_gd_step_projects_to_zero():
    out = runner.gd_step(np.array([0.05, 0.3]), np.array([2.0, -1.0]), 0.1)
    np.testing.assert_allclose(out, [0.0, 0.4], atol=1e-15)


def test_gd_step_validation():
    with pytest.raises(ValueError):
        runner.gd_step(np.zeros(2), np.zeros(3), 0.1)
    with pytest.raises(runner.NumericalError):
        runner.gd_step(np.zeros(1), np.array([np.inf]), 0.1)


# ---------------------------------------------------------------------------
# experiment protocol
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    scene = parse_scene_dict(tiny_scene_dict())
    summary = runner.run_experiment(scene, out)
    return scene, out, summary


def test_run_writes_artifact_bundle(tiny_run):
    scene, out, summary = tiny_run
    assert (out / "trace.csv").exists()
    assert (out / "scene.json").exists()
    faces = sorted(os.listdir(out / "delta_i"))
    assert faces == [f"{tag}_ball_face{f}.pgm"
                     for tag in ("final", "initial") for f in range(6)]
    frames = sorted(os.listdir(out / "frames"))
    assert all(name.endswith(".obj") for name in frames)
    assert any(name.startswith("initial_") for name in frames)
    assert any(name.startswith("final_") for name in frames)
    echoed = json.loads((out / "scene.json").read_text())
    assert parse_scene_dict(echoed) == scene


def test_trace_column_contract(tiny_run):
    scene, out, summary = tiny_run
    with open(out / "trace.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["iter", "loss", "grip_term", "avoid_term",
                       "p_1", "grad_1"]
    assert len(rows) == 1 + scene.optimizer.iterations + 1
    for k, row in enumerate(rows[1:]):
        assert row[0] == str(k)
        # repr() round-trips the float64 exactly
        assert repr(float(row[1])) == row[1]


def test_run_iterates_with_projection(tiny_run):
    scene, out, summary = tiny_run
    rows = summary["rows"]
    assert len(rows) == 3
    np.testing.assert_array_equal(rows[0]["p"], [0.0])
    for k in range(1, 3):
        expected = runner.gd_step(rows[k - 1]["p"], rows[k - 1]["grad"],
                                  scene.optimizer.learning_rate)
        np.testing.assert_array_equal(rows[k]["p"], expected)
        assert (rows[k]["p"] >= 0).all()
    np.testing.assert_array_equal(summary["final_p"], rows[-1]["p"])


def test_zero_iterations_evaluates_once(tmp_path):
    scene = parse_scene_dict(tiny_scene_dict())
    summary = runner.run_experiment(scene, tmp_path, iterations=0)
    assert len(summary["rows"]) == 1
    assert summary["initial_eval"] is summary["final_eval"]


def test_rerun_is_byte_identical(tmp_path):
    scene = parse_scene_dict(tiny_scene_dict())
    a = tmp_path / "a"
    b = tmp_path / "b"
    runner.run_experiment(scene, a)
    runner.run_experiment(scene, b)
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
    for sub in ("delta_i", "frames"):
        for name in sorted(os.listdir(a / sub)):
            assert (a / sub / name).read_bytes() == (b / sub / name).read_bytes()


def test_export_obj_format(tmp_path):
    path = tmp_path / "m.obj"
    runner.export_obj(path, np.array([[0.0, 0.5, 1.0], [1.0, 0.0, 0.0],
                                      [0.0, 1.0, 0.0]]),
                      np.array([[0, 1, 2]]))
    lines = path.read_text().splitlines()
    assert lines[0] == "v 0.0 0.5 1.0"
    assert lines[-1] == "f 1 2 3"


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def write_scene(tmp_path, doc):
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_cli_run_success(tmp_path, capsys):
    path = write_scene(tmp_path, tiny_scene_dict())
    code = cli.main(["run", path, "--out", str(tmp_path / "out"),
                     "--iters", "1", "--threads", "4"])
    assert code == 0
    assert "final loss" in capsys.readouterr().out
    assert (tmp_path / "out" / "trace.csv").exists()


def test_cli_invalid_scene_exits_2(tmp_path, capsys):
    doc = tiny_scene_dict()
    doc["task"]["alpha"] = -1.0
    path = write_scene(tmp_path, doc)
    assert cli.main(["run", path, "--out", str(tmp_path / "out")]) == 2
    assert "task.alpha" in capsys.readouterr().err


def test_cli_missing_file_exits_2(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path / "out")]) == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_cli_numerical_failure_exits_3(tmp_path, capsys):
    doc = tiny_scene_dict(dt=0.05, duration_s=2.0)
    path = write_scene(tmp_path, doc)
    code = cli.main(["simulate", path, "--p", "1.0",
                     "--out", str(tmp_path / "out")])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_cli_simulate_then_render(tmp_path, capsys):
    path = write_scene(tmp_path, tiny_scene_dict())
    out = tmp_path / "sim"
    assert cli.main(["simulate", path, "--p", "0.2", "--out", str(out)]) == 0
    assert (out / "state.npz").exists()
    rout = tmp_path / "render"
    assert cli.main(["render", path, "--state", str(out / "state.npz"),
                     "--out", str(rout)]) == 0
    names = os.listdir(rout)
    assert len(names) == 12 and all(n.endswith(".pgm") for n in names)


def test_cli_gradcheck_prints_table(tmp_path, capsys):
    path = write_scene(tmp_path, tiny_scene_dict())
    assert cli.main(["gradcheck", path, "--p", "0.02"]) == 0
    out = capsys.readouterr().out
    assert "fd_central" in out and "adjoint" in out


def test_cli_wrong_p_count_exits_2(tmp_path, capsys):
    path = write_scene(tmp_path, tiny_scene_dict())
    assert cli.main(["simulate", path, "--p", "0.1,0.2",
                     "--out", str(tmp_path / "out")]) == 2
