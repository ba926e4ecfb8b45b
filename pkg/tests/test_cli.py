import csv
import os
import json

import numpy as np
import pytest

from ymflow import cli
from ymflow import exterior as ext

SMALL = {
    "name": "small",
    "geometry": "FourManifold",
    "grid": {"shape": [6, 6, 6, 6]},
    "initial": {"ansatz": "random", "seed": 4, "k_max": 1, "amplitude": 0.4},
    "duration": {"steps": 6},
    "monitor": {"every": 2, "probes": [{"x": [0.5] * 4, "R": 0.125}]},
}


def _write(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj, indent=2))
    return str(p)


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_algebra_verify_passes_and_writes_report(tmp_path, capsys):
    code = cli.main(["algebra-verify", "--families", "FourManifold", "G2", "--comass-samples", "200",
                     "--out", str(tmp_path)])
    assert code == 0
    rep = json.loads((tmp_path / "algebra_report.json").read_text())
    assert rep["passed"] and {c["family"] for c in rep["checks"]} == {"lie", "FourManifold", "G2"}
    assert "checks passed" in capsys.readouterr().out


def test_algebra_verify_corrupted_phi_exits_3(monkeypatch, capsys):
    good = ext.g2_phi

    def corrupted():
        phi = good()
        c = np.array(phi.coeffs, dtype=float)
        c[np.flatnonzero(c)[0]] = 0.5
        return ext.KForm(phi.n, phi.k, c)

    monkeypatch.setattr(ext, "g2_phi", corrupted)
    code = cli.main(["algebra-verify", "--families", "G2", "--comass-samples", "50"])
    out = capsys.readouterr().out
    assert code == 3
    assert "FAIL" in out and "G2" in out


def test_usage_errors_exit_2(tmp_path, capsys):
    assert cli.main(["run"]) == 2
    assert cli.main(["run", "--scenario", "nope"]) == 2
    assert cli.main(["frobnicate"]) == 2
    bad = dict(SMALL, grid={"shape": [3, 4, 4, 4]})
    assert cli.main(["run", "--config", _write(tmp_path, bad), "--quiet"]) == 2
    assert "config error" in capsys.readouterr().err


def test_blowup_exits_4(tmp_path):
    obj = dict(SMALL, initial={"ansatz": "random", "seed": 2, "amplitude": 3.0},
               integrator={"method": "euler", "dt": 100.0}, grid={"shape": [4] * 4}, monitor={})
    out = tmp_path / "o"
    assert cli.main(["run", "--config", _write(tmp_path, obj), "--out", str(out), "--quiet"]) == 4
    rep = json.loads((out / "report.json").read_text())
    assert rep["blowup"]["aborted"] and "exceeds" in rep["blowup"]["reason"]


def test_help_lists_config_keys(capsys):
    with pytest.raises(SystemExit) as ei:
        cli.build_parser().parse_args(["run", "--help"])
    assert ei.value.code == 0
    out = capsys.readouterr().out
    for key in ("grid.shape", "duration.t_end", "monitor.monotonicity", "output.snapshot"):
        assert key in out
    assert cli.main(["--help"]) == 0


def test_fixed_point_csv_is_flat(tmp_path):
    assert cli.main(["run", "--scenario", "fixed_point", "--out", str(tmp_path), "--quiet"]) == 0
    rows = _csv(tmp_path / "series.csv")
    assert len(rows) == 11
    for r in rows:
        for k, v in r.items():
            if k not in ("t", "dt"):
                assert float(v) == 0.0, k


def test_run_outputs_and_determinism(tmp_path):
    cfg = _write(tmp_path, SMALL)
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(["run", "--config", cfg, "--out", str(a), "--quiet"]) == 0
    assert cli.main(["run", "--config", cfg, "--out", str(b), "--quiet"]) == 0
    assert cli.main(["run", "--config", cfg, "--out", str(c), "--quiet", "--threads", "1"]) == 0
    ref = (a / "series.csv").read_bytes()
    assert ref == (b / "series.csv").read_bytes() == (c / "series.csv").read_bytes()
    assert b"\r\n" in ref
    rows = _csv(a / "series.csv")
    assert [int(round(float(r["t"]) / float(rows[1]["dt"]))) for r in rows][:1] == [0]
    assert len(rows) == 4  # steps 0, 2, 4, 6
    assert "phi_R0.125_x0.5_0.5_0.5_0.5" in rows[0]
    rep = json.loads((a / "report.json").read_text())
    assert rep["energy_identity"]["relative"] < 1e-3 and rep["energy_monotone"]
    assert (a / "final.hflw").exists()


def test_seed_and_steps_override(tmp_path):
    cfg = _write(tmp_path, SMALL)
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "a"), "--quiet", "--steps", "2"]) == 0
    assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--quiet", "--steps", "2",
                     "--seed", "9"]) == 0
    ra = json.loads((tmp_path / "a" / "report.json").read_text())
    rb = json.loads((tmp_path / "b" / "report.json").read_text())
    assert ra["steps"] == rb["steps"] == 2
    assert ra["blowup"]["last_finite"]["E"] != rb["blowup"]["last_finite"]["E"]


def test_kahler_sup_F_omega_non_increasing(scenario_run):
    code, rep, out = scenario_run("kahler_t4")
    assert code == 0
    s = [float(r["sup_F_omega"]) for r in _csv(os.path.join(out, "series.csv"))]
    assert all(b <= a + 1e-10 for a, b in zip(s, s[1:]))


@pytest.mark.parametrize("case", ["k3", "cy3", "g2mono", "su4"])
def test_reduce_check(case, tmp_path, capsys):
    assert cli.main(["reduce-check", case, "--steps", "2", "--out", str(tmp_path)]) == 0
    assert "passed" in capsys.readouterr().out


def test_reduce_check_commuting_data(tmp_path):
    assert cli.main(["reduce-check", "k3", "--data", "commuting", "--steps", "2", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "reduce_k3.json").read_text())
    assert rep["higgs_max_principle_worst_increment"] <= 1e-12


def test_report_subcommand(tmp_path, capsys):
    assert cli.main(["run", "--scenario", "fixed_point", "--out", str(tmp_path), "--quiet"]) == 0
    capsys.readouterr()
    assert cli.main(["report", str(tmp_path)]) == 0
    assert "fixed_point" in capsys.readouterr().out
    assert cli.main(["report", str(tmp_path / "missing.json")]) == 2
