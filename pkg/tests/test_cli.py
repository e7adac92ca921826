"""Command-line surface: verdicts, exit codes, records stability, pipelines."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

from ctxdl.cli import main

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run_cli(*argv, capsys):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def records_of(out: str) -> list[dict]:
    return [json.loads(line) for line in out.splitlines()]


class TestVerdictCommands:
    def test_check_ok(self, capsys):
        code, out, _ = run_cli("check", SAMPLES / "sensing.kb", capsys=capsys)
        assert code == 0
        assert out.startswith("ok:")

    def test_subsumes_chain(self, capsys):
        code, out, _ = run_cli(
            "subsumes", SAMPLES / "chain.kb", "A", "C", "--format", "records", capsys=capsys
        )
        assert code == 0
        assert records_of(out) == [
            {"command": "subsumes", "lhs": "A", "rhs": "C", "subsumes": True}
        ]

    def test_negative_verdict_still_exits_zero(self, capsys):
        code, out, _ = run_cli(
            "subsumes", SAMPLES / "chain.kb", "C", "A", "--format", "records", capsys=capsys
        )
        assert code == 0
        assert records_of(out)[0]["subsumes"] is False

    def test_sat(self, capsys):
        code, out, _ = run_cli(
            "sat", SAMPLES / "chain.kb", "A & !C", "--format", "records", capsys=capsys
        )
        assert code == 0
        assert records_of(out)[0]["satisfiable"] is False

    def test_saturate_lists_canonical_assertions(self, capsys):
        code, out, _ = run_cli(
            "saturate", SAMPLES / "chain.kb", "--format", "records", capsys=capsys
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["assertions"] == ["a:A@U"]


class TestRun:
    def test_loop_exhausts_fuel(self, capsys):
        code, out, _ = run_cli(
            "run", SAMPLES / "loop.p", "--kb", SAMPLES / "empty.kb",
            "--fuel", "100", "--format", "records", capsys=capsys,
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["outcome"] == "fuel-exhausted"
        assert rec["steps"] == 100

    def test_fuel_exhausted_text_report(self, capsys):
        code, out, _ = run_cli(
            "run", SAMPLES / "loop.p", "--kb", SAMPLES / "empty.kb", "--fuel", "100",
            capsys=capsys,
        )
        assert code == 0
        assert "fuel-exhausted after 100 steps" in out

    def test_promotion_program_with_trace(self, capsys):
        code, out, _ = run_cli(
            "run", SAMPLES / "promote.p", "--kb", SAMPLES / "chain.kb",
            "--trace", "--format", "records", capsys=capsys,
        )
        assert code == 0
        recs = records_of(out)
        assert recs[0]["outcome"] == "terminated"
        assert recs[0]["assertions"] == ["a:A@U", "a:B@U", "a:C@U"]
        rules = [r["rule"] for r in recs if r["command"] == "trace"]
        assert rules == ["if-true", "add", "if-true", "add"]

    def test_state_dump_and_reload_pipeline(self, capsys, tmp_path):
        dump = tmp_path / "after.state"
        code, _, _ = run_cli(
            "run", SAMPLES / "promote.p", "--kb", SAMPLES / "chain.kb",
            "--dump", dump, capsys=capsys,
        )
        assert code == 0
        code, out, _ = run_cli(
            "saturate", SAMPLES / "chain.kb", "--state", dump,
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        assert records_of(out)[0]["assertions"] == ["a:A@U", "a:B@U", "a:C@U"]


class TestOracleCommand:
    def test_session_and_final_state(self, capsys):
        code, out, _ = run_cli(
            "apply-oracle", SAMPLES / "chain.kb", "--script", SAMPLES / "probe_session.jsonl",
            "--payload", "scan-1", "--payload", "scan-2",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        recs = records_of(out)
        assert recs[0]["added"] == ["a:A@U"]
        assert recs[-1]["command"] == "oracle-final"
        assert recs[-1]["assertions"] == ["a:A@U", "a:B@U"]

    def test_record_then_replay_bytes(self, capsys, tmp_path):
        log = tmp_path / "session.jsonl"
        code, first, _ = run_cli(
            "apply-oracle", SAMPLES / "chain.kb", "--script", SAMPLES / "probe_session.jsonl",
            "--payload", "scan-1", "--payload", "scan-3", "--record", log,
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        code, second, _ = run_cli(
            "apply-oracle", SAMPLES / "chain.kb", "--replay", log,
            "--payload", "scan-1", "--payload", "scan-3",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        assert first == second

    def test_replay_divergence_is_a_runtime_error(self, capsys, tmp_path):
        log = tmp_path / "session.jsonl"
        run_cli(
            "apply-oracle", SAMPLES / "chain.kb", "--script", SAMPLES / "probe_session.jsonl",
            "--payload", "scan-1", "--record", log, capsys=capsys,
        )
        code, _, err = run_cli(
            "apply-oracle", SAMPLES / "chain.kb", "--replay", log,
            "--payload", "scan-2", capsys=capsys,
        )
        assert code == 1
        assert "position 0" in err

    def test_unknown_payload_is_a_runtime_error(self, capsys):
        code, _, err = run_cli(
            "apply-oracle", SAMPLES / "chain.kb", "--script", SAMPLES / "probe_session.jsonl",
            "--payload", "bogus", capsys=capsys,
        )
        assert code == 1
        assert "no entry" in err


class TestSheafCommands:
    def test_glue_union(self, capsys):
        code, out, _ = run_cli(
            "glue", SAMPLES / "sensing.kb", "--target", "Scene",
            "--section", "Cam: scene:Obstacle", "--section", "Lidar: scene:Obstacle",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["verdict"] == "glued"
        assert rec["section"]["facts"] == ["scene:Obstacle"]

    def test_glue_incompatible_when_local_fact_cannot_lift(self, capsys):
        code, out, _ = run_cli(
            "glue", SAMPLES / "sensing.kb", "--target", "Scene",
            "--section", "Cam: scene:Obstacle, cam1:Glare",
            "--section", "Lidar: scene:Obstacle",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["verdict"] == "incompatible"
        assert any("cam1:Glare" in c["facts"] for c in rec["conflicts"])

    def test_stable_fails_on_refine_fixture(self, capsys):
        code, out, _ = run_cli(
            "stable", SAMPLES / "refine.kb", "--context", "Cam",
            "--section", "scene:Obstacle", "--format", "records", capsys=capsys,
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["stable"] is False
        assert rec["failing_cover"] == {"target": "Cam", "members": ["Core"]}

    def test_global_sections_include_the_obstacle_section(self, capsys):
        code, out, _ = run_cli(
            "global-sections", SAMPLES / "sensing.kb", "--top", "Scene",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        recs = records_of(out)
        assert recs[0]["count"] == 2
        facts = [r["facts"] for r in recs if r["command"] == "section"]
        assert ["scene:Obstacle"] in facts


class TestStabilityCommand:
    def test_constant_stream_is_stable(self, capsys):
        code, out, _ = run_cli(
            "stability", SAMPLES / "sensor_constant.json", "--runs", "4",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["stable"] is True
        assert rec["outcome"] == ["scene:Obstacle"]

    def test_alternating_stream_is_unstable(self, capsys):
        code, out, _ = run_cli(
            "stability", SAMPLES / "sensor_alternating.json", "--runs", "4",
            "--format", "records", capsys=capsys,
        )
        assert code == 0
        rec = records_of(out)[0]
        assert rec["stable"] is False
        assert [o["count"] for o in rec["outcomes"]] == [2, 2]


class TestExitCodes:
    def test_missing_file_is_input_error(self, capsys):
        code, _, err = run_cli("check", SAMPLES / "nope.kb", capsys=capsys)
        assert code == 2
        assert "error:" in err

    def test_parse_error_has_position(self, capsys, tmp_path):
        bad = tmp_path / "bad.kb"
        bad.write_text("signature\nconcept A\nconcept B.\n", encoding="utf-8")
        code, _, err = run_cli("check", bad, capsys=capsys)
        assert code == 2
        assert f"{bad}:" in err

    def test_unknown_concept_argument(self, capsys):
        code, _, err = run_cli("sat", SAMPLES / "chain.kb", "Zz", capsys=capsys)
        assert code == 2
        assert "unknown concept name" in err

    def test_reasoner_budget_is_a_runtime_error(self, capsys):
        code, _, err = run_cli(
            "subsumes", SAMPLES / "chain.kb", "A", "C", "--budget", "1", capsys=capsys
        )
        assert code == 1
        assert "budget" in err

    def test_bad_flags_exit_two(self, capsys):
        assert main(["sat"]) == 2
        capsys.readouterr()

    def test_records_output_is_byte_stable(self, capsys):
        outs = []
        for _ in range(2):
            _, out, _ = run_cli(
                "global-sections", SAMPLES / "sensing.kb", "--top", "Scene",
                "--format", "records", capsys=capsys,
            )
            outs.append(out)
        assert outs[0] == outs[1]


class TestConsoleEntry:
    def test_subprocess_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "ctxdl.cli", "check", str(SAMPLES / "sensing.kb")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.startswith("ok:")
