from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest

from pamfk import heat_kernel
from pamfk.cli import CSV_COLUMNS, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def strip_run(records):
    out = []
    for r in records:
        r = dict(r)
        r.pop("run", None)
        r["config"] = {**r["config"], "output": {**r["config"]["output"], "path": None}}
        out.append(r)
    return out


GAUSS_MOMENT = {
    "geometry": {"dimension": 1, "t": 0.5, "x": [0.0]},
    "model": {"kind": "gaussian", "sigma": 1.0, "eps": 0.0},
    "mc": {"samples": 2000, "steps_per_segment": 16, "seed": 4, "block_size": 256},
    "moment": {"k": 2, "representation": "bridge"},
    "initial": {"density": "one"},
}


class TestCommands:
    def test_zero_model_dirac(self, tmp_path):
        cfg = {"geometry": {"t": 1.0}, "model": {"kind": "zero"}, "moment": {"k": 1, "representation": "bridge"}, "initial": {"atoms": [{"location": 0.0, "weight": 1.0}]}}
        out = tmp_path / "o.json"
        assert main(["moment", "--config", write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
        rec = json.loads(out.read_text())[0]
        assert rec["mean"] == pytest.approx(heat_kernel(1.0, 0.0), rel=1e-14)
        assert rec["standard_error"] == 0.0 and rec["schema_version"] == 1

    def test_validate_agrees(self, tmp_path):
        cfg = {**GAUSS_MOMENT, "moment": {"k": 2, "representation": "free"}, "chaos": {"n_max": 6}}
        out = tmp_path / "v.json"
        assert main(["validate", "--config", write(tmp_path, cfg), "--out", str(out)]) == EXIT_OK
        rec = json.loads(out.read_text())[0]
        assert rec["agreement"] is True and rec["oracle_tail_bound"] < 1e-6

    def test_chaos(self, tmp_path, capsys):
        cfg = {"geometry": {"t": 0.25}, "model": {"kind": "white_noise"}, "chaos": {"n_max": 20}}
        assert main(["chaos", "--config", write(tmp_path, cfg)]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)[0]
        assert rec["mean"] == pytest.approx(1.3586423701047219, abs=1e-12)

    def test_derivative(self, tmp_path, capsys):
        cfg = {
            "geometry": {"t": 0.5},
            "model": {"kind": "gaussian", "sigma": 1.0},
            "mc": {"samples": 500, "steps_per_segment": 8},
            "initial": {"atoms": [{"location": 0.0, "weight": 1.0}]},
            "derivative": {"r": [0.1, 0.3], "z": [0.2, -0.1], "k": 2},
        }
        assert main(["derivative-moment", "--config", write(tmp_path, cfg)]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)[0]
        assert rec["mean"] > 0 and rec["details"]["order"] == 2

    def test_spde(self, tmp_path, capsys):
        cfg = {"geometry": {"t": 0.1}, "spde": {"dx": 0.2, "dt": 0.02, "L": 2.0, "k": 1, "reps": 200}}
        assert main(["spde", "--config", write(tmp_path, cfg)]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)[0]
        assert abs(rec["mean"] - 1.0) < 5 * rec["standard_error"]


class TestRoundTrip:
    def test_record_reruns_identically(self, tmp_path):
        first = tmp_path / "a.json"
        assert main(["moment", "--config", write(tmp_path, GAUSS_MOMENT), "--out", str(first)]) == EXIT_OK
        second = tmp_path / "b.json"
        assert main(["moment", "--config", str(first), "--out", str(second), "--workers", "3"]) == EXIT_OK
        a, b = json.loads(first.read_text()), json.loads(second.read_text())
        assert strip_run(a) == strip_run(b)
        assert b[0]["run"]["workers"] == 3

    def test_seed_override(self, tmp_path, capsys):
        path = write(tmp_path, GAUSS_MOMENT)
        main(["moment", "--config", path, "--seed", "4"])
        a = json.loads(capsys.readouterr().out)[0]
        main(["moment", "--config", path, "--seed", "5"])
        b = json.loads(capsys.readouterr().out)[0]
        assert a["mean"] != b["mean"] and b["config"]["mc"]["seed"] == 5

    def test_csv_appends_with_single_header(self, tmp_path):
        path = write(tmp_path, GAUSS_MOMENT)
        out = tmp_path / "r.csv"
        for _ in range(2):
            assert main(["moment", "--config", path, "--format", "csv", "--out", str(out)]) == EXIT_OK
        rows = list(csv.reader(out.open()))
        assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 3
        # floats survive the round trip exactly
        assert float(rows[1][CSV_COLUMNS.index("mean")]) == float(rows[2][CSV_COLUMNS.index("mean")])
        assert json.loads(rows[1][CSV_COLUMNS.index("config")])["mc"]["seed"] == 4

    def test_csv_numeric_cells_parse(self, tmp_path):
        cfg = {"geometry": {"t": 0.25}, "model": {"kind": "white_noise"}, "chaos": {"n_max": 6}}
        out = tmp_path / "c.csv"
        assert main(["chaos", "--config", write(tmp_path, cfg), "--format", "csv", "--out", str(out)]) == EXIT_OK
        row = dict(zip(*list(csv.reader(out.open()))))
        for col in ("mean", "standard_error", "oracle_tail_bound"):
            float(row[col])


class TestErrors:
    @pytest.mark.parametrize(
        "patch, field",
        [
            ({"geometry": {"t": -1.0}}, "geometry.t"),
            ({"model": {"kind": "pink"}}, "model.kind"),
            ({"model": {"kind": "white_noise", "eps": 0.0}}, "model.eps"),
            ({"model": {"kind": "white_noise", "eps": [0.01, 0.02, 0.005]}}, "model.eps"),
            ({"initial": {"density": "nope"}}, "initial.density"),
            ({"moment": {"k": 0}}, "moment.k"),
            ({"moment": {"k": 2, "representation": "sideways"}}, "moment.representation"),
        ],
    )
    def test_config_errors_name_the_field(self, tmp_path, capsys, patch, field):
        cfg = {**GAUSS_MOMENT, **patch}
        assert main(["moment", "--config", write(tmp_path, cfg)]) == EXIT_CONFIG
        assert field in capsys.readouterr().err

    def test_unordered_pins(self, tmp_path, capsys):
        cfg = {"geometry": {"t": 0.5}, "model": {"kind": "gaussian", "sigma": 1.0}, "derivative": {"r": [0.3, 0.1], "z": [0, 0]}}
        assert main(["derivative-moment", "--config", write(tmp_path, cfg)]) == EXIT_CONFIG
        assert "derivative.r" in capsys.readouterr().err

    def test_broken_json(self, tmp_path, capsys):
        assert main(["moment", "--config", write(tmp_path, '{"geometry": {"t": 1,}}')]) == EXIT_CONFIG
        assert "line 1" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["moment", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_atoms_with_free_representation(self, tmp_path, capsys):
        cfg = {**GAUSS_MOMENT, "moment": {"k": 2, "representation": "free"}, "initial": {"atoms": [{"location": 0.0, "weight": 1.0}]}}
        assert main(["moment", "--config", write(tmp_path, cfg)]) == EXIT_CONFIG
        assert "bridge" in capsys.readouterr().err

    def test_overflow_exit_code(self, tmp_path, capsys):
        cfg = {
            "geometry": {"t": 20.0},
            "model": {"kind": "gaussian", "sigma": 1e-5},
            "mc": {"samples": 8, "steps_per_segment": 1},
            "moment": {"k": 2, "representation": "bridge"},
            "initial": {"atoms": [{"location": 0.0, "weight": 1.0}]},
        }
        assert main(["moment", "--config", write(tmp_path, cfg)]) == EXIT_NUMERIC
        assert "diagnostics" in capsys.readouterr().err


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, {"geometry": {"t": 0.25}, "model": {"kind": "white_noise"}, "chaos": {"n_max": 4}})
    proc = subprocess.run([sys.executable, "-m", "pamfk.cli", "chaos", "--config", cfg, "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("schema_version,")
