import csv
import json
import math

import pytest

from ermakov.cli import ConfigError, ScenarioConfig, main

LEWIS = {
    "system": {"form": "conservative", "N": "u^(-2)/2"},
    "initial": {"t0": 0, "x": 1, "y": 1, "vx": 0, "vy": 0},
    "t_end": 5,
    "tolerance": 1e-10,
    "sample_interval": 0.5,
    "invariants": ["H", "I0", "I2", "I3"],
}


def _write(tmp_path, cfg, name="scenario.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _with(**changes):
    cfg = json.loads(json.dumps(LEWIS))
    cfg.update(changes)
    return cfg


def _report(path):
    return json.loads(path.read_text())


class TestSimulate:
    def test_lewis_csv(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(["simulate", "--config", _write(tmp_path, LEWIS), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "time,x,y,vx,vy,H,I0,I2,I3"
        rows = list(csv.DictReader(lines))
        last = rows[-1]
        assert float(last["time"]) == 5.0
        assert float(last["y"]) == pytest.approx(math.sqrt(26), abs=1e-8)
        assert len(rows) == 11

    def test_header_without_invariants(self, tmp_path):
        out = tmp_path / "traj.csv"
        main(["simulate", "--config", _write(tmp_path, _with(invariants=[])), "--out", str(out)])
        assert out.read_text().splitlines()[0] == "time,x,y,vx,vy"

    def test_invariant_columns_keep_canonical_order(self, tmp_path):
        out = tmp_path / "traj.csv"
        main(["simulate", "--config", _write(tmp_path, _with(invariants=["I3", "H"])), "--out", str(out)])
        assert out.read_text().splitlines()[0] == "time,x,y,vx,vy,H,I3"

    def test_seventeen_digits(self, tmp_path):
        out = tmp_path / "traj.csv"
        main(["simulate", "--config", _write(tmp_path, LEWIS), "--out", str(out)])
        row = out.read_text().splitlines()[3].split(",")
        assert all(float(format(float(v), ".17g")) == float(v) for v in row)
        assert row[2] == format(float(row[2]), ".17g")

    def test_deterministic(self, tmp_path):
        cfg = _write(tmp_path, LEWIS)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["simulate", "--config", cfg, "--out", str(a)])
        main(["simulate", "--config", cfg, "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_malformed_expression(self, tmp_path, capsys):
        cfg = _with(system={"form": "conservative", "N": "u^(-2)/"})
        code = main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "position" in capsys.readouterr().err

    def test_t_end_before_t0(self, tmp_path, capsys):
        code = main(["simulate", "--config", _write(tmp_path, _with(t_end=0)), "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "t_end" in capsys.readouterr().err

    def test_truncated_run_is_numeric_error(self, tmp_path):
        cfg = _with(system={"form": "normalized", "F": "-1", "G": "0"}, invariants=[], t_end=2)
        out = tmp_path / "x.csv"
        assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 3
        assert out.exists()

    def test_rk4(self, tmp_path):
        cfg = _with(method="rk4", step=1e-3)
        del cfg["tolerance"]
        out = tmp_path / "x.csv"
        assert main(["simulate", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0


class TestConfigValidation:
    @pytest.mark.parametrize(
        "change",
        [
            {"tolrance": 1e-9},
            {"system": {"form": "conservative", "N": "u", "F": "u"}},
            {"system": {"form": "polar", "N": "u"}},
            {"initial": {"x": 1, "y": 1, "vx": 0}},
            {"initial": {"x": 1, "y": 1, "vx": 0, "vy": 0, "z": 0}},
            {"method": "euler"},
            {"method": "rk4"},
            {"invariants": ["H", "Q"]},
            {"reduction": {"rho0": 0}},
            {"checks": {"drfit": 1e-6}},
            {"omega": 1},
            {"t_end": "5"},
        ],
    )
    def test_rejected(self, change):
        with pytest.raises((ConfigError, ValueError)):
            ScenarioConfig.from_dict(_with(**change))

    def test_defaults(self):
        cfg = ScenarioConfig.from_dict(_with())
        assert cfg.control.method == "dp54"
        assert cfg.checks["drift"] == 1e-7

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "x.csv")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path / "x.csv")]) == 2


class TestInvariants:
    def test_lewis_passes(self, tmp_path):
        rep = tmp_path / "rep.json"
        assert main(["invariants", "--config", _write(tmp_path, LEWIS), "--report", str(rep)]) == 0
        data = _report(rep)
        assert data["pass"] is True
        assert [c["name"] for c in data["checks"]] == ["H", "I0", "I2", "I3"]
        assert all({"name", "value", "tolerance", "pass"} <= set(c) for c in data["checks"])

    def test_from_trajectory_file(self, tmp_path):
        cfg = _write(tmp_path, LEWIS)
        traj = tmp_path / "traj.csv"
        main(["simulate", "--config", cfg, "--out", str(traj)])
        rep = tmp_path / "rep.json"
        assert main(["invariants", "--config", cfg, "--trajectory", str(traj), "--report", str(rep)]) == 0
        assert _report(rep)["samples"] == 11

    def test_tolerance_override_fails(self, tmp_path):
        rep = tmp_path / "rep.json"
        code = main(["invariants", "--config", _write(tmp_path, LEWIS), "--report", str(rep), "--tolerance", "1e-16"])
        assert code == 1
        assert _report(rep)["pass"] is False

    def test_H_on_general(self, tmp_path, capsys):
        cfg = _with(system={"form": "general", "f": "u", "g": "v"}, invariants=["H"])
        assert main(["invariants", "--config", _write(tmp_path, cfg)]) == 2
        assert "not conservative" in capsys.readouterr().err

    def test_empty_list(self, tmp_path):
        assert main(["invariants", "--config", _write(tmp_path, _with(invariants=[]))]) == 2


REDUCE = {
    "system": {"form": "normalized", "F": "0", "G": "1"},
    "omega": "1",
    "initial": {"x": 1, "y": 1, "vx": 0, "vy": 0},
    "t_end": 1,
    "sample_interval": 0.1,
    "reduction": {"rho0": 1, "rhodot0": 0},
}


class TestReduce:
    def test_lewis(self, tmp_path):
        out, rep = tmp_path / "r.csv", tmp_path / "r.json"
        assert main(["reduce", "--config", _write(tmp_path, REDUCE), "--out", str(out), "--report", str(rep)]) == 0
        rows = list(csv.DictReader(out.read_text().splitlines()))
        assert float(rows[-1]["T"]) == pytest.approx(math.tan(1), abs=1e-8)
        assert float(rows[-1]["Y"]) == pytest.approx(math.sqrt(1 + math.tan(1) ** 2), abs=1e-8)
        checks = {c["name"]: c for c in _report(rep)["checks"]}
        assert checks["two_path"]["value"] < 1e-7 and checks["i0_frame_match"]["pass"]

    def test_omega_zero_identity(self, tmp_path):
        cfg = dict(REDUCE, omega=None, system={"form": "conservative", "N": "u^(-2)/2"})
        del cfg["omega"]
        out = tmp_path / "r.csv"
        assert main(["reduce", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
        for r in csv.DictReader(out.read_text().splitlines()):
            assert float(r["X"]) == float(r["x"]) and float(r["T"]) == pytest.approx(float(r["t"]), abs=1e-14)

    def test_zero_crossing(self, tmp_path, capsys):
        code = main(["reduce", "--config", _write(tmp_path, dict(REDUCE, t_end=3)), "--out", str(tmp_path / "r.csv")])
        assert code == 3
        err = capsys.readouterr().err
        assert "rho changes sign" in err and "1.5" in err

    def test_needs_reduction_block(self, tmp_path):
        cfg = dict(REDUCE)
        del cfg["reduction"]
        assert main(["reduce", "--config", _write(tmp_path, cfg)]) == 2


class TestAnalyticAndScan:
    def test_analytic_compare(self, tmp_path):
        rep = tmp_path / "a.json"
        assert main(["analytic-compare", "--config", _write(tmp_path, LEWIS), "--report", str(rep)]) == 0
        data = _report(rep)
        assert data["constants"] == {"H": 0.5, "I0": 1.0, "I2": 0.0}
        assert [c["name"] for c in data["checks"]] == ["radial_r2", "theta_identity"]

    def test_scan_lewis(self, tmp_path):
        rep = tmp_path / "n.json"
        assert main(["noether-scan", "--config", _write(tmp_path, LEWIS), "--report", str(rep)]) == 0
        m = {r["vector"]: r for r in _report(rep)["matrix"]}
        assert m["dX"]["case2"]["pass"] and not m["dY"]["case2"]["pass"]
        assert not m["rotation"]["case2"]["pass"] and m["rotation"]["case3"] is None
        assert m["HV"]["case2"]["pass"] and m["HV"]["case3"]["pass"]
        assert abs(m["HV"]["case2"]["constants"]["c1"]) < 1e-8

    def test_scan_rotational(self, tmp_path):
        cfg = _with(system={"form": "conservative", "N": "3/(1+u^2)"}, initial={"x": 1, "y": 2, "vx": 0.3, "vy": -0.1})
        rep = tmp_path / "n.json"
        assert main(["noether-scan", "--config", _write(tmp_path, cfg), "--report", str(rep)]) == 0
        m = {r["vector"]: r for r in _report(rep)["matrix"]}
        assert m["rotation"]["case2"]["pass"]

    def test_scan_v1_with_gradient_kv(self, tmp_path):
        cfg = _with(
            system={"form": "conservative", "N": "1/(2*u-1)^2"},
            initial={"x": 1, "y": -1, "vx": 1, "vy": 0.2},
            gradient_kv={"b1": 2, "b2": 1},
        )
        rep = tmp_path / "n.json"
        assert main(["noether-scan", "--config", _write(tmp_path, cfg), "--report", str(rep)]) == 0
        m = {r["vector"]: r for r in _report(rep)["matrix"]}
        kv = m["grad-KV(2,1)"]
        assert kv["case2"]["pass"] and kv["case3"]["pass"]


def test_batch_with_jobs(tmp_path):
    a = _write(tmp_path, LEWIS, "a.json")
    b = _write(tmp_path, _with(t_end=2), "b.json")
    out = tmp_path / "out"
    assert main(["simulate", "--config", a, b, "--out", str(out), "--jobs", "2"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["a.csv", "b.csv"]


def test_batch_exit_code_is_worst(tmp_path):
    a = _write(tmp_path, LEWIS, "a.json")
    b = _write(tmp_path, _with(t_end=-1), "b.json")
    assert main(["simulate", "--config", a, b, "--out", str(tmp_path / "out")]) == 2


@pytest.mark.parametrize("command", ["analytic-compare", "noether-scan"])
def test_commands_needing_a_potential_reject_other_forms(tmp_path, command):
    assert main([command, "--config", _write(tmp_path, REDUCE)]) == 2
