import csv
import hashlib
import io
import json
import subprocess
import sys

import pytest

from abqt import cli
from abqt.protocol import AliceInfo, BobInfo, CaseId, ChannelSpec, row_outcome
from abqt.verify import OracleReport

GRID = {"theta_grid": [0.3, 1.2, 2.5], "phi_grid": [0.5, 2.0], "surface_alphas": [0.5, 1.0, 5.0],
        "curve_alphas": [0.5, 1.0, 2.0, 5.0, 10.0]}
GRID_SHA256 = "c42bcd66f2b2bb3f31e766701b5b8b85e5fa1d392ba0c8e7a8141a1d07c5cda9"


@pytest.fixture
def grid_file(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(GRID))
    return path


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestRun:
    def test_alpha_five_has_eight_faithful_rows(self, capsys):
        code, out, _ = run(capsys, "run", "--alpha", "5", "--format", "json")
        assert code == 0
        data = json.loads(out)
        assert len(data["rows"]) == 64
        faithful = [r for r in data["rows"] if r["class_ab"] == "F" and r["class_ba"] == "F"]
        assert len(faithful) == 8 and {r["row"] for r in faithful} == {5}
        assert data["summary"]["faithful_total"] == pytest.approx(1 / 8, abs=1e-3)

    def test_classification_column_is_alpha_independent(self, capsys):
        tags = []
        for alpha in ("1", "5"):
            _, out, _ = run(capsys, "run", "--alpha", alpha, "--format", "json")
            tags.append([(r["class_ab"], r["class_ba"]) for r in json.loads(out)["rows"]])
        assert tags[0] == tags[1]

    def test_degenerate_bob_input_still_reports_all_rows(self, capsys):
        code, out, _ = run(capsys, "run", "--theta1", "0", "--format", "json")
        assert code == 0 and len(json.loads(out)["rows"]) == 64

    def test_csv_layout(self, capsys):
        _, out, _ = run(capsys, "run")
        lines = out.split("\n")
        assert lines[0] == ",".join(cli.RUN_COLUMNS)
        assert "\r" not in out
        assert any(line.startswith("# faithful_total,") for line in lines)

    def test_markdown(self, capsys):
        code, out, _ = run(capsys, "run", "--format", "markdown")
        assert code == 0 and out.startswith("### alpha = 1")


class TestSweep:
    def test_checksum_on_fixed_grid(self, capsys, grid_file):
        code, out, _ = run(capsys, "sweep", "--config", str(grid_file))
        assert code == 0
        assert hashlib.sha256(out.encode()).hexdigest() == GRID_SHA256

    def test_parallel_output_is_identical(self, capsys, grid_file):
        _, serial, _ = run(capsys, "sweep", "--config", str(grid_file), "--what", "surfaces")
        _, parallel, _ = run(capsys, "sweep", "--config", str(grid_file), "--what", "surfaces", "--jobs", "2")
        assert serial == parallel

    def test_long_format_and_row_count(self, capsys, grid_file):
        _, out, _ = run(capsys, "sweep", "--config", str(grid_file))
        rows = list(csv.DictReader(io.StringIO(out)))
        assert list(rows[0]) == cli.SWEEP_COLUMNS
        # 3 quantities x 3 alphas x 3 thetas x 2 phis, then 6 curves x 5 alphas
        assert len(rows) == 3 * 3 * 3 * 2 + 6 * 5
        assert [r["quantity"] for r in rows[:54]] == ["F1_AB"] * 18 + ["F3_AB"] * 18 + ["F4_AB"] * 18
        fav = [float(r["value"]) for r in rows if r["quantity"] == "Fav_AB"]
        assert fav == sorted(fav)

    def test_default_grid_shape(self):
        cfg = cli.ScenarioConfig.from_sources({"surface_alphas": [1.0], "theta_grid": [0.1], "curve_alphas": [1.0]})
        records = cli.sweep_records(cfg, "surfaces")
        assert len(records) == 3 * 61

    def test_single_point_matches_run(self):
        cfg = cli.ScenarioConfig.from_sources({"theta_grid": [0.3], "phi_grid": [0.9], "surface_alphas": [2.0]})
        values = {r["quantity"]: r["value"] for r in cli.sweep_records(cfg, "surfaces")}
        alice, bob = AliceInfo.from_angles(0.3, 0.9), BobInfo.from_angle(0.7)
        for q, row in (("F1_AB", 1), ("F3_AB", 3), ("F4_AB", 4)):
            assert values[q] == pytest.approx(row_outcome(alice, bob, ChannelSpec(2.0), CaseId.I, row).f_ab, abs=1e-12)

    def test_empty_grid_is_config_error(self, capsys, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"theta_grid": []}))
        code, _, err = run(capsys, "sweep", "--config", str(path))
        assert code == 1 and "theta_grid" in err


@pytest.fixture(scope="module")
def records():
    return cli.table_records(cli.ScenarioConfig.from_sources())


class TestTables:
    def test_sixty_four_rows(self, records):
        assert len(records) == 64

    def test_identity_row(self, records):
        r = next(r for r in records if r["case"] == "I" and r["row"] == 5)
        assert (r["alice"], r["bob"], r["tag"]) == ("I_6", "I_5 ⊗ I_4", "F")

    def test_case_two_first_row(self, records):
        r = next(r for r in records if r["case"] == "II" and r["row"] == 1)
        assert (r["alice"], r["bob"], r["tag"]) == ("D_6 P_6", "(D_5 ⊗ D_4)(P_5 ⊗ P_4)", "NF")

    def test_heralded_expression(self, records):
        r = next(r for r in records if r["case"] == "I" and r["row"] == 5)
        assert r["heralded"] == ("N_AA'(A_0|α,α⟩ + A_1|α,-α⟩ + A_2|-α,α⟩ + A_3|-α,-α⟩)_{4,5}"
                                 " ⊗ N_B(B_0|α⟩ + B_1|-α⟩)_6")

    def test_printed_ops_column(self, records):
        mismatched = {(r["case"], r["row"]) for r in records if r["printed_ops_match"] == "no"}
        assert mismatched == {("VII", k) for k in (3, 5, 6, 7, 8)}

    def test_markdown_has_eight_tables(self, capsys):
        code, out, _ = run(capsys, "tables", "--format", "markdown")
        assert code == 0 and out.count("### Table") == 8
        assert "\\|α" in out


class TestVerifyAndCircuit:
    def test_verify_small(self, capsys):
        code, out, _ = run(capsys, "verify", "--alpha", "0.5", "--cutoff", "10")
        assert code == 0 and "PASS" in out

    def test_cutoff_too_small(self, capsys):
        code, _, err = run(capsys, "verify", "--alpha", "1", "--cutoff", "4")
        assert code == 1 and "suggested cutoff" in err

    def test_feasibility_bound(self, capsys):
        code, _, err = run(capsys, "verify", "--alpha", "3")
        assert code == 1 and "alpha" in err

    def test_verification_failure_exit_code(self, capsys, monkeypatch):
        import abqt.verify
        monkeypatch.setattr(abqt.verify, "verify_protocol",
                            lambda *a, **k: OracleReport(0.5, 10, deviations={"pattern_probability": 1.0}))
        code, out, _ = run(capsys, "verify", "--alpha", "0.5")
        assert code == 2 and "FAIL" in out

    def test_invariant_breach_exit_code(self, capsys, monkeypatch):
        def broken(config):
            raise cli.InvariantBreach("probabilities sum to 0.9")
        monkeypatch.setattr(cli, "run_report", broken)
        code, _, err = run(capsys, "run")
        assert code == 3 and "InvariantBreach" in err

    def test_circuit(self, capsys, tmp_path):
        path = tmp_path / "c.abqt"
        path.write_text("MODES 3\nSTATE 0 1 = |a,a> + |-a,-a>\nSTATE 2 = |a>\nBPS 0 2\n"
                        "MEASURE 0 ODD\nTARGET 1 2 = |a, 0>\n")
        code, out, _ = run(capsys, "circuit", str(path), "--format", "json")
        assert code == 0 and json.loads(out)[0]["target_fidelity"] == pytest.approx(1)

    def test_circuit_syntax_error(self, capsys, tmp_path):
        path = tmp_path / "bad.abqt"
        path.write_text("MODES 2\nBPS 0 7\n")
        code, _, err = run(capsys, "circuit", str(path))
        assert code == 1 and "line 2, column 7" in err

    def test_circuit_impossible_outcome(self, capsys, tmp_path):
        path = tmp_path / "zero.abqt"
        path.write_text("MODES 1\nSTATE 0 = |0>\nMEASURE 0 ODD\n")
        code, _, _ = run(capsys, "circuit", str(path))
        assert code == 1


class TestOutput:
    def test_output_flag(self, capsys, tmp_path):
        target = tmp_path / "out.csv"
        code, out, _ = run(capsys, "run", "-o", str(target))
        assert code == 0 and out == "" and target.read_text().startswith("pattern,")

    def test_output_directory_variable(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
        run(capsys, "tables", "--format", "json")
        assert json.loads((tmp_path / "tables.json").read_text())[0]["case"] == "I"

    def test_module_entry_point(self):
        done = subprocess.run([sys.executable, "-m", "abqt", "--version"], capture_output=True, text=True)
        assert done.returncode == 0 and "abqt" in done.stdout
