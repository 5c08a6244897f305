import json
import re

import numpy as np
import pytest

from nndlab import cli
from nndlab.concordance import concordancy_check, concordant5_system, linf_embed


def run(args):
    return cli.main(args)


class TestUsageErrors:
    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run(["nnd", "--space", "paris", "--n", "100"])
        assert err.value.code == 2

    def test_unknown_space_exits_2(self):
        with pytest.raises(SystemExit) as err:
            run(["nnd", "--space", "hyperbolic", "--n", "100", "--k", "4"])
        assert err.value.code == 2

    def test_no_command_prints_help(self, capsys):
        assert run([]) == 2
        assert "usage" in capsys.readouterr().out.lower()


class TestNnd:
    def test_paris_run_report(self, tmp_path):
        out = tmp_path / "report.json"
        code = run(
            ["nnd", "--space", "paris", "--n", "256", "--k", "4",
             "--mode", "batch", "--seed", "1", "--out", str(out)]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["space"] == "paris"
        assert doc["config"]["seed"] == 1
        assert doc["data"]["recall"] == 1.0
        assert doc["data"]["rounds"] >= 1

    def test_generic_crs_low_recall(self, tmp_path):
        out = tmp_path / "report.json"
        run(["nnd", "--space", "generic-crs", "--n", "256", "--k", "8",
             "--mode", "pointwise", "--stop", "budget", "--seed", "3", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["data"]["recall"] < 0.7


class TestTwoNrq:
    def test_schedule_golden_csv(self, tmp_path):
        out = tmp_path / "schedule.csv"
        code = run(["2nrq", "schedule", "--n", "1e7", "--k", "28", "--d", "4",
                    "--alpha", "0.5", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("# config:")
        assert lines[1] == "t,r_t,theta_t,formula_used"
        assert len(lines) == 11  # config + header + t = 0..8
        last = lines[-1].split(",")
        assert last[0] == "8" and last[3] == "implicit"

    def test_schedule_json(self, tmp_path):
        out = tmp_path / "schedule.json"
        run(["2nrq", "schedule", "--n", "2e4", "--k", "12", "--d", "2",
             "--format", "json", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["data"]["tau"] == len(doc["data"]["radii"]) - 1

    def test_k_not_above_2d_exits_3(self, capsys):
        assert run(["2nrq", "schedule", "--n", "1e4", "--k", "4", "--d", "4"]) == 3
        assert "2^d" in capsys.readouterr().err

    def test_simulate_small(self, tmp_path):
        out = tmp_path / "sim.json"
        code = run(["2nrq", "simulate", "--n", "2000", "--k", "12", "--d", "2",
                    "--seed", "7", "--sample-vertices", "200", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["data"]["tau"] >= 1
        assert len(doc["data"]["sampling_reports"]) == doc["data"]["tau"] + 1


class TestCrs:
    def test_enumerate_n4(self, tmp_path):
        out = tmp_path / "census.json"
        assert run(["crs", "enumerate", "--n", "4", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["data"]["orders"] == 720
        assert doc["data"]["bounds_ok"] is True

    def test_enumerate_refusal_exits_4(self, capsys):
        assert run(["crs", "enumerate", "--n", "6"]) == 4
        assert "refused" in capsys.readouterr().err

    def test_embed_concordant5_matrix(self, tmp_path):
        out = tmp_path / "embed.csv"
        run(["crs", "embed", "--example", "concordant5", "--out", str(out)])
        lines = out.read_text().strip().splitlines()
        table, extension = concordant5_system()
        expected = linf_embed(concordancy_check(table), extension=extension)
        header = lines[1].split(",")[1:]
        assert header == [f"{i}-{j}" for i, j in expected.column_pairs]
        row0 = np.array([float(v) for v in lines[2].split(",")[1:]])
        assert np.allclose(row0, expected.coords[0])

    def test_special_powers2_isolated(self, tmp_path):
        out = tmp_path / "special.json"
        run(["crs", "special", "--kind", "powers2", "--n", "6",
             "--check", "isolated", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["data"]["isolated"] is True

    def test_special_baranyai_component(self, tmp_path):
        out = tmp_path / "component.json"
        run(["crs", "special", "--kind", "baranyai", "--n", "4",
             "--check", "component", "--cap", "100", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["data"]["component_size"] >= 8

    def test_fraction(self, tmp_path):
        out = tmp_path / "fraction.json"
        run(["crs", "fraction", "--n", "4", "--samples", "2000", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["data"]["exact"] == "1/5"


class TestDiag:
    def test_diameter_report(self, tmp_path):
        out = tmp_path / "diam.json"
        hist = tmp_path / "diam.csv"
        code = run(["diag", "diameter", "--n", "500", "--k", "3", "--trials", "3",
                    "--eps", "0.5", "--seed", "1", "--out", str(out),
                    "--histogram", str(hist)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["data"]["diameters"]) == 3
        assert hist.read_text().splitlines()[1] == "diameter,count"

    def test_diameter_k2_rejected(self, capsys):
        assert run(["diag", "diameter", "--n", "100", "--k", "2"]) == 3
        assert "K >= 3" in capsys.readouterr().err

    def test_expansion_report(self, tmp_path):
        out = tmp_path / "exp.json"
        run(["diag", "expansion", "--n", "2000", "--k", "16", "--sets", "200",
             "--seed", "2", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["data"]["violations"] == 0


class TestOutputDiscipline:
    def test_version_prints_checksum(self, capsys):
        assert run(["--version"]) == 0
        out = capsys.readouterr().out
        assert re.search(r"nndlab \d+\.\d+\.\d+ \(golden schedule sha256/12: [0-9a-f]{12}\)", out)

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["2nrq", "schedule", "--n", "1e5", "--k", "20", "--d", "3"]
        run(args + ["--out", str(a)])
        run(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_seeded_experiment_reruns_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["diag", "expansion", "--n", "300", "--k", "8", "--sets", "50", "--seed", "9"]
        run(args + ["--out", str(a)])
        run(args + ["--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_outdir_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("NNDLAB_OUTDIR", str(tmp_path))
        run(["crs", "fraction", "--n", "4", "--samples", "100", "--out", "frac.json"])
        assert (tmp_path / "frac.json").exists()

    def test_scientific_notation_counts(self):
        assert cli._count("1e3") == 1000
        with pytest.raises(Exception):
            cli._count("2.5")
