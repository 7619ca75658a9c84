import json

import numpy as np
import pytest

from nhcse import cli, scenarios
from nhcse.circuit import parse_netlist
from nhcse.results import dumps_json, flatten, read_csv, read_json, write_csv


def run(argv):
    return cli.main([str(a) for a in argv])


def test_list_scenarios(capsys):
    assert run(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in scenarios.SCENARIOS:
        assert name in out


def test_run_chern(tmp_path):
    assert run(["run", "chern", "--out", tmp_path]) == 0
    s = read_json(tmp_path / "summary.json")
    assert s["Q"] == 1
    assert s["status"] == "ok"
    assert s["Q_by_grid"] == {"24": 1, "48": 1}


def test_run_from_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "chern", "model": {"phi": -np.pi / 2}}))
    assert run(["run", "--config", cfg, "--out", tmp_path / "o"]) == 0
    assert read_json(tmp_path / "o" / "summary.json")["Q"] == -1


def test_oracle_suite_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run(["run", "oracle-suite", "--seed", 7, "--out", tmp_path / d]) == 0
    a = (tmp_path / "a" / "summary.json").read_bytes()
    assert a == (tmp_path / "b" / "summary.json").read_bytes()
    s = json.loads(a)
    assert s["seed"] == 7 and s["predicate_mismatches"] == 0


@pytest.fixture(scope="module")
def fig2a_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("fig2a")
    for d in ("a", "b"):
        assert run(["run", "fig2a", "--out", root / d]) == 0
    return root / "a", root / "b"


def test_fig2a_outputs(fig2a_dirs):
    out, _ = fig2a_dirs
    for name in ("spectrum.csv", "density.csv", "profile.csv", "summary.json",
                 "spectrum.svg", "density.svg", "profile.svg"):
        assert (out / name).exists(), name
    header, rows = read_csv(out / "spectrum.csv")
    assert header == ["re", "im", "class", "k_label"]
    assert len(rows) == 24 * 20 * 2
    im = np.array([r[1] for r in rows])
    cls = np.array([r[2] for r in rows])
    edge = im[cls != "bulk"]
    # edge states on one line at gamma_bar = 0; the bulk spans the two regions
    assert edge.size > 0 and np.ptp(edge) < 0.02 and abs(edge.mean()) < 0.01
    assert im[cls == "bulk"].min() == pytest.approx(-0.1, abs=2e-3)
    assert im[cls == "bulk"].max() == pytest.approx(0.1, abs=2e-3)


def test_rerun_byte_identical(fig2a_dirs):
    a, b = fig2a_dirs
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_outputs_round_trip(fig2a_dirs):
    out, _ = fig2a_dirs
    for name in ("spectrum.csv", "density.csv", "profile.csv"):
        header, rows = read_csv(out / name)
        write_csv(out / f"copy_{name}", header, rows)
        assert (out / f"copy_{name}").read_bytes() == (out / name).read_bytes()
        (out / f"copy_{name}").unlink()
    s = read_json(out / "summary.json")
    assert dumps_json(s) == (out / "summary.json").read_text()


def test_circuit_check_netlist(tmp_path):
    assert run(["run", "circuit-check", "--out", tmp_path]) == 0
    s = read_json(tmp_path / "summary.json")
    assert s["max_deviation"] < 1e-12 and s["E_w0"] == 2.2
    rows = parse_netlist((tmp_path / "netlist.txt").read_text())
    assert {r[0] for r in rows} >= {"CAP", "IND", "CAPG", "INDG", "RES"}


@pytest.mark.parametrize("cfg,code", [
    ({"scenario": "fig2a", "geometry": {"Lx": -3}}, 2),
    ({"scenario": "fig2a", "bogus": 1}, 2),
    ({"scenario": "nope"}, 2),
])
def test_error_summary(tmp_path, cfg, code):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(cfg))
    assert run(["run", "--config", path, "--out", tmp_path / "o"]) == code
    s = read_json(tmp_path / "o" / "summary.json")
    assert s["status"] == "error"
    assert s["error"]["type"] and s["error"]["message"]


def test_run_requires_scenario(capsys):
    assert run(["run"]) == 2


def test_empty_sweep_header_only(tmp_path):
    assert run(["sweep", "fig2cd", "--param", "gamma", "--values", "", "--out", tmp_path]) == 0
    assert (tmp_path / "sweep.csv").read_text() == "gamma,status,error\n"


def test_sweep_bad_parameter(tmp_path):
    assert run(["sweep", "fig2cd", "--param", "model.nope", "--values", "1",
                "--out", tmp_path]) == 2


def test_sweep_row_errors_recorded(tmp_path):
    assert run(["sweep", "chern", "--param", "model.phi", "--values", "1.5707963267948966,0",
                "--out", tmp_path]) == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    st = dict(zip(header, rows[0]))
    assert st["status"] == "ok" and st["Q"] == 1
    bad = dict(zip(header, rows[1]))
    assert bad["status"] == "error" and "GapClosedError" in bad["error"]


def test_fig2cd_sweep_monotone(tmp_path, monkeypatch):
    monkeypatch.setenv("NHCSE_THREADS", "2")
    assert run(["sweep", "fig2cd", "--param", "gamma", "--values", "0.05,0.1,0.2,0.4",
                "--out", tmp_path]) == 0
    header, rows = read_csv(tmp_path / "sweep.csv")
    xi = [dict(zip(header, r))["xi"] for r in rows]
    assert all(r[1] == "ok" for r in rows)
    assert all(a > b for a, b in zip(xi, xi[1:]))
    assert (tmp_path / "sweep.svg").exists()


def test_fig4_sweep(tmp_path):
    cfg = tmp_path / "fig4.json"
    # zigzag/armchair cuts only: skip the rectangle solve
    cfg.write_text(json.dumps({"scenario": "fig4",
                               "geometry": {"Lx": 20, "Ly": 20, "bc_x": "periodic",
                                            "bc_y": "open", "edge_style": "zigzag"}}))
    assert run(["sweep", "--config", cfg, "--param", "gamma", "--values", "0.1,0.3",
                "--out", tmp_path / "o", "--no-plots"]) == 0
    header, rows = read_csv(tmp_path / "o" / "sweep.csv")
    col = {h: [r[i] for r in rows] for i, h in enumerate(header)}
    assert all(abs(v) > 0.01 for v in col["zigzag.lower"])
    assert abs(col["zigzag.lower"][1]) > abs(col["zigzag.lower"][0])
    assert all(v < 1e-8 for v in col["armchair.max_abs_gamma_eff"])


def test_threads_env_validated(tmp_path, monkeypatch):
    monkeypatch.setenv("NHCSE_THREADS", "0")
    assert run(["run", "chern", "--out", tmp_path]) == 2


def test_parse_values():
    assert cli.parse_values("0.1, 2,abc,,") == [0.1, 2, "abc"]
    assert cli.parse_values("") == []


def test_flatten_drops_lists():
    assert flatten({"a": {"b": 1.0, "c": [1, 2]}, "d": np.float64(2.0), "e": float("nan")}) == \
        {"a.b": 1.0, "d": 2.0, "e": None}
