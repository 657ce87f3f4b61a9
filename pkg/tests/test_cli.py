import csv
import io
import json

import numpy as np
import pytest

from finslerlab.cli import (THREADS_ENV, RunConfig, _pool_map, dumps_json, load_schema, run,
                           table_csv, validate_config)
from finslerlab.errors import ConfigError


def invoke(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), err


def error_json(err):
    return json.loads(err.strip().splitlines()[-1])


def test_cz_katok_short_equator(capsys):
    code, rep, _ = invoke(capsys, "cz", "--metric", "katok", "--epsilon", "0.3", "--orbit",
                          "short-equator", "--iterates", "2", "--grid", "1024")
    assert code == 0
    assert rep["data"]["mu"] >= 3
    assert rep["checks"]["symplectic"] and rep["checks"]["taui"]


@pytest.mark.slow
def test_convexity_ellipsoid_is_marginal(capsys):
    code, rep, _ = invoke(capsys, "convexity", "--metric", "revolution", "--a", "0.5")
    assert code == 0
    assert rep["data"]["verdict"] is False and rep["data"]["marginal"] is True
    doubled = [r for r in rep["data"]["orbits"] if r["iterate"] == 2 and r["marginal"]]
    assert doubled and doubled[0]["mu"] == 1 and abs(doubled[0]["tau3"]) < 5e-3


def test_lift_round_case(capsys):
    code, rep, _ = invoke(capsys, "lift", "--katok-epsilon", "0.0")
    assert code == 0
    d = rep["data"]
    assert d["ellipsoid"]["p"] == 0.5 and d["ellipsoid"]["q"] == 0.5
    assert d["g_range"] == pytest.approx([1.0, 1.0], abs=1e-12)
    assert all(rep["checks"].values())


@pytest.mark.slow
def test_convexity_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, rep, _ = invoke(capsys, "convexity", "--sweep-start", "0", "--sweep-stop", "0.2",
                          "--sweep-step", "0.1", "--csv-out", str(out))
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert rows[0] == ["epsilon", "ell", "tau3", "mu", "verdict"]
    eps = [float(r[0]) for r in rows[1:]]
    assert eps == [0.0, 0.1, 0.2]
    # tau3 of the doubled short equator is -(1 - eps)/2 for the Katok family
    for r in rows[1:]:
        assert float(r[2]) == pytest.approx(-(1 - float(r[0])) / 2, abs=5e-3)
        assert int(r[3]) == 3 and r[4] == "true"


def test_empty_table_is_header_only():
    assert table_csv(["epsilon", "ell"], []) == "epsilon,ell\n"


def test_cylinder_outputs_and_determinism(tmp_path, capsys):
    paths = []
    for tag in ("a", "b"):
        j, c, s = (tmp_path / f"{tag}.json", tmp_path / f"{tag}.csv", tmp_path / f"{tag}.svg")
        code, rep, _ = invoke(capsys, "cylinder", "--r-min", "0.01", "--seed", "7",
                              "--json-out", str(j), "--csv-out", str(c), "--svg-out", str(s))
        assert code == 0 and all(rep["checks"].values())
        paths.append((j, c, s))
    for x, y in zip(*paths):
        assert x.read_bytes() == y.read_bytes()
    header = paths[0][1].read_text().splitlines()[0]
    assert header == "Re z,Im z,k,Re F,Im F,t,a"
    assert "<polyline" in paths[0][2].read_text()


def test_threads_from_environment(monkeypatch, capsys):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert RunConfig.from_dict("lift", {}).threads == 3
    assert RunConfig.from_dict("lift", {"threads": 1}).threads == 1
    assert _pool_map(abs, [-3, 2, -1], 3) == _pool_map(abs, [-3, 2, -1], 1) == [3, 2, 1]
    monkeypatch.setenv(THREADS_ENV, "many")
    code, _, err = invoke(capsys, "lift", "--katok-epsilon", "0.2")
    assert code == 2 and error_json(err)["exit_code"] == 2


@pytest.mark.parametrize("argv", [
    ["cz", "--metric", "katok", "--epsilon", "1.5"],
    ["cz", "--epsilon", "0.3"],
    ["teleport"],
    ["convexity", "--sweep-start", "0"],
    ["cylinder", "--c", "0.5"],
], ids=["epsilon-out-of-range", "flag-without-metric", "unknown-subcommand", "partial-sweep",
        "resonant-rotation"])
def test_config_errors_exit_2(capsys, argv):
    code, out, err = invoke(capsys, *argv)
    assert code == 2 and out is None
    assert error_json(err)["exit_code"] == 2


def test_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"metric": {"family": "katok", "epsilon": 0.3}, "cz": {"gird": 64}}))
    code, _, err = invoke(capsys, "cz", "--config", str(cfg))
    assert code == 2 and "gird" in error_json(err)["message"]


def test_unwritable_output(capsys):
    code, _, err = invoke(capsys, "lift", "--katok-epsilon", "0.1", "--json-out",
                          "/nonexistent-dir/x.json")
    assert code == 2 and error_json(err)["error"] == "ConfigError"


def test_check_failure_exits_1(capsys):
    code, rep, err = invoke(capsys, "reproduce-paper", "--criteria", "3,4")
    assert code == 1
    assert rep["checks"] == {"criterion_3": True, "criterion_4": False}
    assert error_json(err)["failed_checks"] == ["criterion_4"]


def test_schema_validation():
    schema = load_schema()
    assert schema["additionalProperties"] is False
    validate_config({"metric": {"family": "killing", "epsilon": 0.2, "axis": [0, 0, 1],
                                "base": {"family": "revolution", "a": 0.8}},
                     "lift": {"h": {"kind": "ellipsoid", "p": 0.6, "q": 0.4}}})
    for bad in ({"metric": {"family": "katok", "eps": 0.3}}, {"cz": {"grid": 8}},
                {"lift": {"h": {"kind": "torus"}}}, {"threads": 0}):
        with pytest.raises(ConfigError):
            validate_config(bad)


def test_json_is_canonical():
    s = dumps_json({"b": np.float64(0.1), "a": np.array([1, 2]), "c": np.bool_(True)})
    assert s.index('"a"') < s.index('"b"')
    assert json.loads(s) == {"a": [1, 2], "b": 0.1, "c": True}
