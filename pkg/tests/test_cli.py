from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from conftest import DATA, read_json
from oipsce.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_json(path: Path, doc) -> Path:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


class TestLint:
    def test_valid_catalog_ok(self, runner):
        result = runner.invoke(main, ["lint", str(DATA / "catalog_case_a.json")])
        assert result.exit_code == 0
        assert "OK" in result.output

    def test_cyclic_catalog_exit_1_with_findings_on_stderr(self, runner, tmp_path):
        doc = {"version": "c", "schema_rev": 1, "phases": [
            {"id": "PID", "parents": ["CSV"]},
            {"id": "CSV", "parents": ["PID"]},
        ]}
        path = write_json(tmp_path / "cyclic.json", doc)
        result = runner.invoke(main, ["lint", str(path)])
        assert result.exit_code == 1
        assert "PARENT_CYCLE" in result.stderr

    def test_high_critical_fraction_is_advisory_exit_0(self, runner):
        result = runner.invoke(main, ["lint", str(DATA / "catalog_case_b.json")])
        assert result.exit_code == 0
        assert "CRITICAL_FRACTION_HIGH" in result.output
        assert "OK" in result.output

    def test_missing_file_exit_2(self, runner):
        result = runner.invoke(main, ["lint", "no-such-file.json"])
        assert result.exit_code == 2


class TestAudit:
    def audit_case_b(self, runner, *extra):
        return runner.invoke(main, [
            "audit",
            "--catalog", str(DATA / "catalog_case_b.json"),
            "--dialogue", str(DATA / "dialogue_case_b.json"),
            *extra,
        ])

    def test_case_b_summary_ends_with_failing_edge(self, runner):
        result = self.audit_case_b(runner)
        assert result.exit_code == 0
        assert result.stdout.rstrip().endswith(
            "CallSuccess: FAIL (edge PID→CSV: e=52 !< s=42)")
        assert "Coverage: PASS" in result.output
        assert "OrderSafe: FAIL" in result.output

    def test_case_b_prints_one_line_per_phase(self, runner):
        result = self.audit_case_b(runner)
        for pid in ("PID", "CSV", "DFV", "DRC", "DCC", "CRN"):
            assert any(line.strip().startswith(pid)
                       for line in result.output.splitlines())
        assert "s=45" in result.output and "e=52" in result.output
        assert "required=no" in result.output  # DCC relieved by restrictions fact

    def test_case_a_slice_partial_coverage_no_edge_violations(self, runner):
        result = runner.invoke(main, [
            "audit",
            "--catalog", str(DATA / "catalog_case_a.json"),
            "--dialogue", str(DATA / "dialogue_case_a_slice.json"),
        ])
        assert result.exit_code == 0
        assert "Coverage: FAIL" in result.output
        assert "OrderSafe: PASS" in result.output

    def test_case_a_full_passes(self, runner):
        result = runner.invoke(main, [
            "audit",
            "--catalog", str(DATA / "catalog_case_a.json"),
            "--dialogue", str(DATA / "dialogue_case_a_full.json"),
        ])
        assert result.exit_code == 0
        assert result.stdout.rstrip().endswith("CallSuccess: PASS")

    def test_missing_file_exit_2(self, runner):
        result = runner.invoke(main, [
            "audit", "--catalog", "nope.json",
            "--dialogue", str(DATA / "dialogue_case_b.json")])
        assert result.exit_code == 2

    def test_out_json_byte_identical_across_runs(self, runner, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        assert self.audit_case_b(runner, "--out", str(out1)).exit_code == 0
        assert self.audit_case_b(runner, "--out", str(out2)).exit_code == 0
        assert out1.read_bytes() == out2.read_bytes()
        doc = json.loads(out1.read_text())
        assert doc["decision"]["call_success"] is False
        assert doc["audit_id"] == "" and doc["created_at"] == ""

    def test_separate_verdicts_file_wins_loudly(self, runner, tmp_path):
        verdicts = {"DCC": {"v": 0, "evidence": []}}
        path = write_json(tmp_path / "verdicts.json", verdicts)
        result = self.audit_case_b(runner, "--verdicts", str(path))
        assert result.exit_code == 0
        assert "VERDICT_OVERRIDE" in result.stderr
        assert "v=0" in result.output


class TestBatchReportReaudit:
    def seed(self, runner, tmp_path) -> tuple[Path, Path]:
        dialogues = tmp_path / "dialogues"
        dialogues.mkdir()
        write_json(dialogues / "case_b.json", read_json("dialogue_case_b.json"))
        doc = read_json("dialogue_case_b.json")
        doc["id"] = "case-b-second"
        write_json(dialogues / "case_b2.json", doc)
        store = tmp_path / "store"
        result = runner.invoke(main, [
            "batch", "--catalog", str(DATA / "catalog_case_b.json"),
            "--dialogues", str(dialogues), "--store", str(store),
        ])
        assert result.exit_code == 0, result.output
        return dialogues, store

    def test_batch_then_report(self, runner, tmp_path):
        _, store = self.seed(runner, tmp_path)
        result = runner.invoke(main, ["report", "--store", str(store)])
        assert result.exit_code == 0
        assert "2 dialogues" in result.output
        assert "CallSuccess rate: 0%" in result.output
        assert "Review queue:" in result.output

    def test_report_on_empty_store(self, runner, tmp_path):
        store = tmp_path / "empty-store"
        store.mkdir()
        result = runner.invoke(main, ["report", "--store", str(store)])
        assert result.exit_code == 0
        assert "0 dialogues" in result.output

    def test_batch_empty_dir(self, runner, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        result = runner.invoke(main, [
            "batch", "--catalog", str(DATA / "catalog_case_b.json"),
            "--dialogues", str(empty), "--store", str(tmp_path / "s"),
        ])
        assert result.exit_code == 0
        assert "0 dialogues" in result.output

    def test_batch_parallel_jobs(self, runner, tmp_path):
        dialogues = tmp_path / "dialogues"
        dialogues.mkdir()
        for i in range(6):
            doc = read_json("dialogue_case_b.json")
            doc["id"] = f"case-b-{i}"
            write_json(dialogues / f"d{i}.json", doc)
        store = tmp_path / "store"
        result = runner.invoke(main, [
            "batch", "--catalog", str(DATA / "catalog_case_b.json"),
            "--dialogues", str(dialogues), "--store", str(store), "--jobs", "4",
        ])
        assert result.exit_code == 0
        assert "6/6 dialogues audited" in result.output

    def test_reaudit_unchanged_catalog_all_identical(self, runner, tmp_path):
        _, store = self.seed(runner, tmp_path)
        result = runner.invoke(main, [
            "reaudit", "--store", str(store),
            "--catalog", str(DATA / "catalog_case_b.json"),
        ])
        assert result.exit_code == 0
        assert "2/2 decisions identical (100%)" in result.output

    def test_reaudit_with_demoted_edges_reports_changes(self, runner, tmp_path):
        _, store = self.seed(runner, tmp_path)
        doc = read_json("catalog_case_b.json")
        doc["version"] = "bv-demoted"
        for ph in doc["phases"]:
            if ph["id"] in ("CSV", "DRC"):
                ph["critical_parents"] = []
                ph["critical_rationale"] = {}
        path = write_json(tmp_path / "demoted.json", doc)
        result = runner.invoke(main, ["reaudit", "--store", str(store),
                                      "--catalog", str(path)])
        assert result.exit_code == 0
        assert "0/2 decisions identical (0%)" in result.output
        assert "CHANGED" in result.output
