"""Run configuration parsing and the command-line subcommands."""
import json

import numpy as np
import pytest

from elastoutm.cli import main
from elastoutm.config import RunConfig, load_config, node_list, parse_config
from elastoutm.errors import ConfigError
from elastoutm.laplace import BoundaryTrace
from elastoutm.solver import FieldGrid


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2))
    return str(p)


# ----------------------------------------------------------------- parsing

def test_defaults_and_node_lists():
    cfg = parse_config("")
    assert isinstance(cfg, RunConfig) and cfg.material_params().lam == 2.0
    assert np.allclose(node_list({"start": 0, "stop": 1, "num": 5}), [0, 0.25, 0.5, 0.75, 1])
    assert np.allclose(node_list({"start": 0, "stop": 1, "step": 0.5}), [0, 0.5, 1])
    with pytest.raises(ConfigError):
        node_list({"start": 0, "num": 3})


def test_unknown_key_reports_line():
    text = '{\n  "material": {\n    "lambda": 2,\n    "nu": 0.3\n  }\n}'
    with pytest.raises(ConfigError, match=r"material\.nu.*line 4"):
        parse_config(text)
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config('{"output": "a", "output": "b"}')
    with pytest.raises(ConfigError, match="line 1"):
        parse_config('{"output": }')


def test_physical_invariants_rechecked_on_load():
    with pytest.raises(ConfigError):
        parse_config('{"material": {"lambda": 1, "mu": 0}}')
    with pytest.raises(ConfigError):
        parse_config('{"quad": {"path_mode": "sideways"}}')
    with pytest.raises(ConfigError):
        parse_config('{"normalization": "other"}')


def test_overrides():
    cfg = parse_config('{"material": {"lambda": 2, "mu": 1}}', ["material.mu=3", "eval.x=[0, 1]", "output=run"])
    assert cfg.material.mu == 3 and list(cfg.nodes("x")) == [0, 1] and cfg.output == "run"
    with pytest.raises(ConfigError):
        parse_config("", ["novalue"])


# ----------------------------------------------------------------- subcommands

def test_solve_zero_problem_and_determinism(tmp_path):
    cfg = write(tmp_path, {"eval": {"x": [-1, 0, 1], "y": [0.5, 1.0], "t": [0.5, 1.0]}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "solve.csv").read_bytes()
    assert a == (tmp_path / "b" / "solve.csv").read_bytes()
    g = FieldGrid.from_csv(tmp_path / "a" / "solve.csv")
    assert g.u.shape == (2, 2, 3) and not np.any(g.u) and not np.any(g.v)


def test_invocation_metadata_round_trips(tmp_path):
    cfg = write(tmp_path, {"material": {"lambda": 1.5, "mu": 0.5}, "eval": {"x": [0.0]}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path), "--override", "quad.tol=1e-7"]) == 0
    meta = json.loads((tmp_path / "solve_run.json").read_text())
    again = parse_config(json.dumps(meta["config"]))
    assert again == load_config(cfg, ["quad.tol=1e-7", f"output={meta['config']['output']}"])
    assert meta["command"] == "solve" and "version" in meta


def test_zeros_report_and_exit_codes(capsys):
    assert main(["zeros", "--lambda", "2", "--mu", "1"]) == 0
    out = capsys.readouterr().out
    assert "Delta_1 zeros" in out and "Delta_2 zeros" in out and "+1.0000i" in out
    assert main(["zeros", "--lambda", "1", "--mu", "1"]) == 0
    assert "no unstable forcing poles" in capsys.readouterr().out
    assert main(["zeros", "--lambda", "2", "--mu", "0"]) == 1
    assert "mu" in capsys.readouterr().err
    assert main(["frobnicate"]) == 1


def test_bad_config_file_exits_1(tmp_path, capsys):
    cfg = write(tmp_path, {"eval": {"z": [1]}})
    assert main(["solve", "--config", cfg]) == 1
    assert "eval.z" in capsys.readouterr().err


def test_compare_zero_problem(tmp_path, capsys):
    cfg = write(tmp_path, {"eval": {"x": [-0.5, 0, 0.5], "y": [0.25, 0.5], "t": [0.25]},
                           "oracle": {"h": 0.0625, "X": 1.5, "Y": 1.5}})
    assert main(["compare", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "relative L2 difference 0.0000%" in out and "PASS" in out


def test_appendix_zero_problem(tmp_path):
    cfg = write(tmp_path, {"appendix": {"t_grid": {"start": 0, "stop": 1, "num": 11}, "k_list": [1.0]}})
    assert main(["appendix", "--config", cfg, "--out", str(tmp_path)]) == 0
    for route in ("volterra", "laplace", "mainpath"):
        tr = BoundaryTrace.from_csv(tmp_path / f"trace_{route}_k1.csv")
        assert not np.any(tr.u) and not np.any(tr.v)
