import json
import math

from scherkbench.cli import main

SQUARE_ANGLES = [k * math.pi / 2 for k in range(4)]
SKEW_ANGLES = [0.0, 0.5 * math.pi, math.pi, 1.2 * math.pi]
SMALL_MESH = {"rings": 6, "side": 8, "arc": 3, "theta": 8}


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


class TestFeasibilityCommand:
    def test_feasible_square(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"polygon": {"angles": SQUARE_ANGLES}})
        assert main(["feasibility", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "feasibility.json").read_text())
        assert report["report"]["feasible"] is True
        assert "config_hash" in report

    def test_infeasible_exit_code(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"polygon": {"angles": SKEW_ANGLES}})
        assert main(["feasibility", "--config", cfg, "--out", str(tmp_path)]) == 2
        report = json.loads((tmp_path / "feasibility.json").read_text())
        assert report["report"]["feasible"] is False


class TestSolveCommand:
    def test_ideal_solve_outputs(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.json",
            {"polygon": {"angles": SQUARE_ANGLES}, "T": 3.0, "mesh": SMALL_MESH},
        )
        out = tmp_path / "run"
        assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
        assert (out / "field.csv").exists()
        assert (out / "field_mesh.json").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["mode"] == "ideal"
        assert summary["fields"]["field"]["residual_history"][-1] <= 1e-9
        header = (out / "field.csv").read_text().splitlines()[0]
        assert "tool_version=" in header and "config_hash=" in header

    def test_outputs_are_deterministic(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.json",
            {"polygon": {"angles": SQUARE_ANGLES}, "T": 3.0, "mesh": SMALL_MESH},
        )
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["solve", "--config", cfg, "--out", str(out2)]) == 0
        for name in ("field.csv", "field_mesh.json", "summary.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_infeasible_polygon_blocked(self, tmp_path, capsys):
        cfg = write_config(
            tmp_path, "c.json",
            {"polygon": {"angles": SKEW_ANGLES}, "mesh": SMALL_MESH},
        )
        assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_halfplane_monotonicity_summary(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.json",
            {"mode": "halfplane", "radii": [1.5, 2.0], "mesh": {"rings": 8, "theta": 8}},
        )
        out = tmp_path / "hp"
        assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["monotonicity"] == "pass"
        assert set(summary["fields"]) == {"field_n1.5", "field_n2"}

    def test_unknown_mode_is_an_error(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"mode": "bogus"})
        assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 1


class TestDiagnoseCommand:
    def test_modulus_selftest(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"tasks": ["modulus_selftest"]})
        assert main(["diagnose", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "diagnose.json").read_text())
        assert report["modulus_selftest"]["error"] <= 1e-3

    def test_flux_loop(self, tmp_path):
        cfg = write_config(
            tmp_path, "c.json",
            {"tasks": ["flux_loop"], "polygon": {"angles": SQUARE_ANGLES},
             "T": 3.0, "mesh": SMALL_MESH},
        )
        assert main(["diagnose", "--config", cfg, "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "diagnose.json").read_text())
        assert report["flux_loop"]["ratio"] <= 1e-6


class TestErrorHandling:
    def test_missing_config_file(self, tmp_path):
        assert main(["feasibility", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 1

    def test_positive_curvature_rejected(self, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"kappa": 1.0, "polygon": {"angles": SQUARE_ANGLES}})
        assert main(["feasibility", "--config", cfg, "--out", str(tmp_path)]) == 1

    def test_non_object_config_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1, 2, 3]")
        assert main(["feasibility", "--config", str(path), "--out", str(tmp_path)]) == 1
