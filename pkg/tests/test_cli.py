import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from pinnkit.cli import (
    ConfigError,
    DomainError,
    MissingCheckpointError,
    RunReport,
    l2_relative_error,
    main,
    parse_config_text,
    parse_geometry,
    run,
    to_dict,
)
from pinnkit.cli.config import build_config, dump_config, parse_config
from pinnkit.cli.registry import REGISTRY
from pinnkit.quadrature import volterra_exact
from pinnkit.training import AdamConfig, LbfgsConfig, OptimizerError


def volterra_cfg(out, **extra):
    d = {"problem": "volterra-ide", "out": str(out)}
    d.update(extra)
    return parse_config_text(json.dumps(d))


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# --- config -------------------------------------------------------------------

def test_minimal_volterra_defaults():
    cfg = parse_config_text('{"problem": "volterra-ide"}')
    assert (cfg.network.depth, cfg.network.width) == (4, 20)
    assert len(cfg.optimizers) == 1 and isinstance(cfg.optimizers[0], LbfgsConfig)
    assert cfg.points.domain == 12


def test_table_defaults_for_registry():
    poisson = parse_config_text('{"problem": "poisson-lshape"}')
    assert (poisson.network.depth, poisson.network.width) == (4, 50)
    adam, lbfgs = poisson.optimizers
    assert isinstance(adam, AdamConfig) and adam.lr == 1e-3 and adam.iterations == 50000
    assert isinstance(lbfgs, LbfgsConfig)
    lorenz = parse_config_text('{"problem": "lorenz-inverse"}')
    assert (lorenz.network.depth, lorenz.network.width) == (3, 40)
    assert lorenz.points.domain == 400
    assert set(REGISTRY) == {"poisson-lshape", "burgers-1d", "burgers-2d", "lorenz-inverse",
                             "diffusion-reaction-inverse", "volterra-ide", "frequency-demo"}


def test_negative_point_count_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config_text('{"problem": "volterra-ide",\n "points": {"domain": -5}}')
    assert exc.value.key == "domain"
    assert exc.value.line == 2


def test_unknown_key_reports_line():
    text = '{\n  "problem": "volterra-ide",\n  "bogus": 1\n}'
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.key == "bogus" and exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_unknown_problem_rejected():
    with pytest.raises(ConfigError):
        parse_config_text('{"problem": "navier-stokes"}')


def test_invalid_json_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text('{\n"problem": }')
    assert exc.value.line == 2


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_config_roundtrip(name):
    cfg = parse_config_text(json.dumps({"problem": name, "seed": 3}))
    assert build_config(to_dict(cfg)) == cfg
    assert parse_config_text(dump_config(cfg)) == cfg


def test_parse_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "nope.json")


# --- l2 relative error ----------------------------------------------------------

def test_l2_identical_is_zero():
    ref = np.array([1.0, -2.0, 3.0])
    assert l2_relative_error(ref, ref) == 0.0


def test_l2_doubled_is_one():
    ref = np.array([1.0, -2.0, 3.0])
    assert l2_relative_error(2 * ref, ref) == pytest.approx(1.0, abs=1e-15)


def test_l2_unit_perturbation_hand_computed():
    # ref = (1, 1, 1, 1): ||ref|| = 2, so a perturbation of 1 in one entry gives 1/2
    ref = np.ones(4)
    e1 = np.array([1.0, 0, 0, 0])
    assert l2_relative_error(ref + e1, ref) == 0.5
    assert 0.5 == 1 / math.sqrt(4)
    # scaling the perturbation by ||ref|| gives exactly 1
    ref = np.array([1.0, 2.0, 3.0, 4.0])
    assert l2_relative_error(ref + e1 * np.linalg.norm(ref), ref) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("n", [1, 4, 9, 100])
def test_l2_unit_perturbation_scaling(n):
    ref = np.ones(n)
    pred = ref.copy()
    pred[0] += 1
    assert l2_relative_error(pred, ref) == pytest.approx(1 / math.sqrt(n), rel=1e-14)


def test_l2_zero_reference():
    with pytest.raises(DomainError):
        l2_relative_error([1.0, 2.0], [0.0, 0.0])


def test_l2_length_mismatch():
    with pytest.raises(ValueError):
        l2_relative_error([1.0, 2.0], [1.0])


# --- geometry expressions -------------------------------------------------------

def test_lshape_expression():
    g = parse_geometry("difference(rectangle([-1,-1],[1,1]), rectangle([0,0],[1,1]))")
    pts = np.array([[-0.5, -0.5], [0.5, 0.5], [0.5, -0.5], [-0.5, 0.5]])
    np.testing.assert_array_equal(g.inside(pts), [True, False, True, True])


def test_nested_json_expression_matches_text():
    tree = {"op": "difference", "args": [
        {"op": "rectangle", "args": [[-1, -1], [1, 1]]},
        {"op": "disk", "args": [[0, 0], 0.5]}]}
    a = parse_geometry(tree)
    b = parse_geometry("difference(rectangle([-1,-1],[1,1]), disk([0,0],0.5))")
    pts = np.random.default_rng(0).uniform(-1, 1, (200, 2))
    np.testing.assert_array_equal(a.inside(pts), b.inside(pts))


@pytest.mark.parametrize("expr", ["__import__('os')", "rectangle([0,0],[1,1]).area",
                                  "foo(1)", "rectangle([0,0],", "disk([0,0], x)"])
def test_expression_rejects_non_whitelisted(expr):
    with pytest.raises(ValueError):
        parse_geometry(expr)


# --- runs ------------------------------------------------------------------------

@pytest.fixture(scope="module")
def volterra_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("volterra")
    report = run("solve", volterra_cfg(out))
    return out, report


def test_solve_writes_manifest(volterra_run):
    out, report = volterra_run
    assert report.status == "ok" and report.exit_code == 0
    names = {p.split("/")[-1] for p in report.files}
    assert {"checkpoint.npz", "loss_history.csv", "solution.csv", "config.json",
            "report.json"} <= names
    for p in report.files:
        assert (out / p.split("/")[-1]).exists()
    saved = json.loads((out / "report.json").read_text())
    assert saved["metrics"]["l2_relative_error"] == report.metrics["l2_relative_error"]
    assert report.metrics["l2_relative_error"] < 1e-2


def test_predict_from_checkpoint_near_closed_form(volterra_run, tmp_path):
    out, _ = volterra_run
    cfg = volterra_cfg(out, predict={"grid": {"lower": [0], "upper": [5], "n": [6]}})
    report = run("predict", cfg)
    header, data = read_csv(out / "solution.csv")
    assert header == ["x0", "u0"]
    np.testing.assert_array_equal(data[:, 0], np.arange(6.0))
    np.testing.assert_allclose(data[:, 1], np.exp(-data[:, 0]) * np.cosh(data[:, 0]), atol=1e-2)
    assert report.metrics["l2_relative_error"] < 1e-2
    assert volterra_exact(np.array([0.0]))[0] == 1.0


def test_export_without_checkpoint(tmp_path):
    with pytest.raises(MissingCheckpointError):
        run("export", volterra_cfg(tmp_path / "empty"))


def test_main_exit_codes(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "volterra-ide", "out": str(tmp_path / "o")}))
    assert main(["export", "--config", str(cfg)]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"problem": "volterra-ide", "points": {"domain": 0}}')
    assert main(["solve", "--config", str(bad)]) == 1
    assert main(["solve", "--config", str(cfg), "--iters", "0"]) == 1
    assert main(["solve", "--config", str(cfg), "--iters", "30"]) == 0


def test_identical_seeds_identical_csv(tmp_path):
    a = run("solve", volterra_cfg(tmp_path / "a", seed=7))
    b = run("solve", volterra_cfg(tmp_path / "b", seed=7))
    assert a.exit_code == b.exit_code == 0
    for name in ("solution.csv", "loss_history.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_export_is_idempotent(volterra_run, tmp_path):
    out, _ = volterra_run
    cfg = volterra_cfg(out)
    run("export", cfg)
    first = {n: (out / n).read_bytes() for n in ("solution.csv", "loss_history.csv")}
    run("export", cfg)
    for n, data in first.items():
        assert (out / n).read_bytes() == data


def test_cli_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "volterra-ide", "out": str(tmp_path / "ignored")}))
    out = tmp_path / "chosen"
    assert main(["train", "--config", str(cfg), "--out", str(out), "--seed", "5",
                 "--iters", "7"]) == 0
    saved = json.loads((out / "config.json").read_text())
    assert saved["seed"] == 5
    assert saved["optimizers"][0]["max_iter"] == 7
    assert json.loads((out / "report.json").read_text())["metrics"]["iterations"] == 7
    assert not (tmp_path / "ignored").exists()


def test_restore_continues_training(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "frequency-demo", "out": str(tmp_path / "o"),
                               "points": {"domain": 50}, "params": {"spectrum_every": 5}}))
    assert main(["train", "--config", str(cfg), "--iters", "10"]) == 0
    ck = tmp_path / "o" / "checkpoint.npz"
    assert main(["train", "--config", str(cfg), "--iters", "20", "--restore", str(ck)]) == 0
    hist = read_csv(tmp_path / "o" / "loss_history.csv")[1]
    # warm start: 10 + 20 updates plus the closing row
    np.testing.assert_array_equal(hist[:, 0], np.arange(31))
    assert (tmp_path / "o" / "spectrum.csv").exists()


def test_restore_with_mismatched_network(tmp_path):
    run("train", volterra_cfg(tmp_path, optimizers=[{"name": "lbfgs", "max_iter": 3}]))
    cfg = volterra_cfg(tmp_path, network={"depth": 2, "width": 5})
    with pytest.raises(ConfigError):
        run("predict", cfg)


def test_training_failure_keeps_partial_artifacts(tmp_path, monkeypatch):
    runmod = sys.modules["pinnkit.cli.run"]

    def boom(*a, **k):
        raise OptimizerError("non-finite gradient at iteration 3")

    monkeypatch.setattr(runmod, "train", boom)
    report = run("solve", volterra_cfg(tmp_path))
    assert report.status == "failed"
    assert report.exit_code == 2
    assert (tmp_path / "checkpoint.npz").exists()
    assert not (tmp_path / "solution.csv").exists()
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "volterra-ide", "out": str(tmp_path)}))
    assert main(["solve", "--config", str(cfg)]) == 2


def test_exit_code_tracks_errors():
    r = RunReport("solve", "x")
    assert r.exit_code == 0
    r.errors.append("diverged")
    assert r.exit_code == 2


def test_rar_run_writes_added_points(tmp_path):
    d = {"problem": "burgers-1d", "out": str(tmp_path),
         "optimizers": [{"name": "adam", "lr": 1e-3, "iterations": 5}],
         "points": {"domain": 100, "boundary": 20, "initial": 20},
         "rar": {"m": 2, "E0": 1e-12, "inner_iters": 3, "max_rounds": 2, "pool_size": 200},
         "predict": {"points": [[0.0, 0.5], [0.5, 0.5]]}}
    report = run("solve", parse_config_text(json.dumps(d)))
    assert report.exit_code == 0
    header, added = read_csv(tmp_path / "added_points.csv")
    assert len(added) == 4
    assert report.metrics["rar_rounds"] == 2
    header, sol = read_csv(tmp_path / "solution.csv")
    assert header == ["x0", "t", "u0"] and sol.shape == (2, 3)


def test_custom_poisson_problem(tmp_path):
    d = {"problem": "custom", "out": str(tmp_path),
         "geometry": "difference(rectangle([-1,-1],[1,1]), rectangle([0,0],[1,1]))",
         "residual": {"name": "poisson", "source": 1.0},
         "conditions": [{"type": "dirichlet", "value": 0.0}],
         "network": {"depth": 2, "width": 8},
         "optimizers": [{"name": "adam", "lr": 1e-3, "iterations": 20}],
         "points": {"domain": 50, "boundary": 20},
         "predict": {"points": [[-0.5, -0.5]]}}
    report = run("solve", parse_config_text(json.dumps(d)))
    assert report.exit_code == 0
    assert report.losses["loss_f"] >= 0 and report.losses["loss_b"] >= 0
    header, sol = read_csv(tmp_path / "solution.csv")
    assert header == ["x0", "x1", "u0"]


def test_custom_burgers_needs_time(tmp_path):
    d = {"problem": "custom", "out": str(tmp_path), "geometry": "interval(-1, 1)",
         "residual": {"name": "burgers"}, "network": {"depth": 1, "width": 4},
         "optimizers": [{"name": "lbfgs"}], "points": {"domain": 10}}
    with pytest.raises(ConfigError):
        run("train", parse_config_text(json.dumps(d)))
    d["params"] = {"time": [0, 1]}
    d["conditions"] = [{"type": "initial", "value": 0.0}]
    d["optimizers"] = [{"name": "lbfgs", "max_iter": 2}]
    d["points"] = {"domain": 10, "boundary": 4, "initial": 4}
    assert run("train", parse_config_text(json.dumps(d))).exit_code == 0


def test_custom_bad_geometry(tmp_path):
    d = {"problem": "custom", "out": str(tmp_path), "geometry": "blob(1)",
         "residual": {"name": "poisson"}, "network": {"depth": 1, "width": 4},
         "optimizers": [{"name": "lbfgs"}], "points": {"domain": 10}}
    with pytest.raises(ConfigError) as exc:
        run("train", parse_config_text(json.dumps(d)))
    assert exc.value.key == "geometry"


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "volterra-ide", "out": str(tmp_path / "o")}))
    proc = subprocess.run([sys.executable, "-m", "pinnkit", "export", "--config", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert "checkpoint" in proc.stderr
