"""Command-line interface: records, exit codes, generators and the bench."""

import json
import os
import sys

import pytest

from xplain.cli import main
from xplain.cnfsat import write_dimacs, CnfFormula

from conftest import DEMO_FBDD, DEMO_NNF


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    records = [json.loads(line) for line in captured.out.splitlines() if line.strip()]
    return code, records, captured.err


class TestNecessityCommand:
    def test_yes(self, capsys, demo_nnf_file):
        code, records, _ = run(
            capsys,
            ["necessity", demo_nnf_file, "--instance", "0,1,0,0", "--class", "0", "--feature", "1"],
        )
        assert code == 0
        assert records[0]["answer"] == "yes"
        assert records[0]["query"] == "necessity"

    def test_no(self, capsys, demo_nnf_file):
        code, records, _ = run(
            capsys,
            ["necessity", demo_nnf_file, "--instance", "0,1,0,0", "--class", "0", "--feature", "2"],
        )
        assert code == 1
        assert records[0]["answer"] == "no"

    def test_monotone_model(self, capsys, vote_model_file):
        code, records, _ = run(
            capsys,
            ["necessity", vote_model_file, "--instance", "1,1,1,1", "--feature", "1"],
        )
        assert code == 1
        assert records[0]["answer"] == "no"


class TestRelevancyCommand:
    def test_circuit_yes_with_witness(self, capsys, demo_nnf_file):
        code, records, _ = run(
            capsys,
            ["relevancy", demo_nnf_file, "--instance", "0,1,0,0", "--feature", "3", "--witness"],
        )
        assert code == 0
        record = records[0]
        assert record["answer"] == "yes"
        assert record["witness"] == [1, 3]
        assert "weak_set" in record
        assert record["stats"]["cnf_vars"] == 2 * 13 + 4

    def test_monotone_no(self, capsys, vote_model_file):
        code, records, _ = run(
            capsys,
            ["relevancy", vote_model_file, "--instance", "1,1,1,1", "--feature", "4"],
        )
        assert code == 1
        assert records[0]["answer"] == "no"
        assert records[0]["witness"] is None

    def test_monotone_yes_default_policy(self, capsys, vote_model_file):
        code, records, _ = run(
            capsys,
            ["relevancy", vote_model_file, "--instance", "1,1,1,1", "--feature", "1"],
        )
        assert code == 0
        assert records[0]["witness"] == [1, 2]

    def test_witness_present_iff_yes(self, capsys, demo_nnf_file):
        for feature, expect_witness in ((3, True), (2, False)):
            _, records, _ = run(
                capsys,
                ["relevancy", demo_nnf_file, "--instance", "0,1,0,0", "--feature", str(feature)],
            )
            assert (records[0]["witness"] is not None) == expect_witness

    def test_unknown_exit_code(self, capsys, vote_model_file):
        code, records, _ = run(
            capsys,
            [
                "relevancy", vote_model_file,
                "--instance", "1,1,1,1", "--feature", "4", "--budget", "1",
            ],
        )
        assert code == 3
        assert records[0]["answer"] == "unknown"

    def test_external_solver(self, capsys, demo_nnf_file, dpll_command):
        code, records, _ = run(
            capsys,
            [
                "relevancy", demo_nnf_file,
                "--instance", "0,1,0,0", "--feature", "2", "--solver", dpll_command,
            ],
        )
        assert code == 1
        assert records[0]["answer"] == "no"

    def test_class_one_without_companion_errors(self, capsys, demo_nnf_file):
        code, _, err = run(
            capsys,
            ["relevancy", demo_nnf_file, "--instance", "1,1,0,0", "--feature", "1"],
        )
        assert code == 2
        assert "complement" in err

    def test_class_one_with_companion(self, capsys, tmp_path, demo_nnf_file, demo_fbdd):
        from xplain.circuit import format_nnf, negate

        companion = tmp_path / "neg.nnf"
        companion.write_text(format_nnf(negate(demo_fbdd)))
        code, records, _ = run(
            capsys,
            [
                "relevancy", demo_nnf_file,
                "--instance", "1,1,0,0", "--class", "1",
                "--feature", "1", "--negation", str(companion),
            ],
        )
        assert code == 0
        assert 1 in records[0]["witness"]

    def test_shrink_flag(self, capsys, vote_model_file):
        code, records, _ = run(
            capsys,
            ["relevancy", vote_model_file, "--instance", "1,1,1,1", "--feature", "4", "--shrink"],
        )
        assert code == 1


class TestAxpCommand:
    def test_default_seed_is_full_set(self, capsys, demo_nnf_file):
        code, records, _ = run(capsys, ["axp", demo_nnf_file, "--instance", "0,1,0,0"])
        assert code == 0
        assert records[0]["witness"] in ([1, 3], [1, 4])
        assert records[0]["witness"] == [1, 4]  # ascending deletion from the full set

    def test_seed_set(self, capsys, demo_nnf_file):
        code, records, _ = run(
            capsys,
            ["axp", demo_nnf_file, "--instance", "0,1,0,0", "--seed-set", "1,2,3"],
        )
        assert code == 0
        assert records[0]["witness"] == [1, 3]

    def test_non_weak_seed_errors(self, capsys, demo_nnf_file):
        code, _, err = run(
            capsys,
            ["axp", demo_nnf_file, "--instance", "0,1,0,0", "--seed-set", "2"],
        )
        assert code == 2
        assert "weak" in err

    def test_monotone(self, capsys, vote_model_file):
        # Ascending deletion from the full set drops feature 1 first
        # ({2, 3, 4} still suffices), then settles on {2, 3}.
        code, records, _ = run(capsys, ["axp", vote_model_file, "--instance", "1,1,1,1"])
        assert code == 0
        assert records[0]["witness"] == [2, 3]


class TestEnumerateCommand:
    def test_demo(self, capsys, demo_nnf_file):
        code, records, _ = run(capsys, ["enumerate", demo_nnf_file, "--instance", "0,1,0,0"])
        assert code == 0
        record = records[0]
        assert record["axps"] == [[1, 3], [1, 4]]
        assert record["relevant"] == [1, 3, 4]
        assert record["necessary"] == [1]

    def test_vote(self, capsys, vote_model_file):
        code, records, _ = run(capsys, ["enumerate", vote_model_file, "--instance", "1,1,1,1"])
        assert code == 0
        assert records[0]["axps"] == [[1, 2], [1, 3], [2, 3]]

    def test_guard(self, capsys, tmp_path):
        from xplain.circuit import format_nnf
        from xplain.testgen import random_circuit_sized

        big = random_circuit_sized(0, 24, 60)
        path = tmp_path / "big.nnf"
        path.write_text(format_nnf(big))
        values = ",".join("0" for _ in range(24))
        code, _, err = run(capsys, ["enumerate", str(path), "--instance", values])
        assert code == 2
        assert "guard" in err


class TestErrorPaths:
    def test_missing_file(self, capsys):
        code, _, err = run(capsys, ["necessity", "/no/such/file", "--instance", "0", "--feature", "1"])
        assert code == 2
        assert err

    def test_class_mismatch(self, capsys, demo_nnf_file):
        code, _, err = run(
            capsys,
            ["necessity", demo_nnf_file, "--instance", "0,1,0,0", "--class", "1", "--feature", "1"],
        )
        assert code == 2
        assert "differs" in err

    def test_malformed_model(self, capsys, tmp_path):
        bad = tmp_path / "bad.nnf"
        bad.write_text("nnf 2 0 1\nL 1\nL 9\n")
        code, _, err = run(capsys, ["necessity", str(bad), "--instance", "0", "--feature", "1"])
        assert code == 2
        assert "line 3" in err

    def test_stdout_stays_machine_readable_on_error(self, capsys, demo_nnf_file):
        code, records, err = run(
            capsys,
            ["relevancy", demo_nnf_file, "--instance", "1,1,0,0", "--feature", "1"],
        )
        assert code == 2
        assert records == []  # diagnostics only on stderr
        assert err


class TestGenCommand:
    def test_mono_reduction(self, capsys, tmp_path):
        cnf = tmp_path / "phi.cnf"
        cnf.write_text(write_dimacs(CnfFormula(1, [[1], [-1]])))
        out_dir = tmp_path / "out"
        code, _, _ = run(capsys, ["gen", "--kind", "mono-cnf", "--cnf", str(cnf), "--out", str(out_dir)])
        assert code == 0
        manifest = [json.loads(line) for line in (out_dir / "manifest.jsonl").read_text().splitlines()]
        entry = manifest[0]
        assert entry["expected"] == {"relevant": False}
        # The generated model runs through the query commands end to end.
        code, records, _ = run(
            capsys,
            [
                "relevancy", entry["files"]["model"],
                "--instance", ",".join(str(int(v)) for v in entry["instance"]),
                "--feature", str(entry["target"]),
            ],
        )
        assert code == 1
        assert records[0]["answer"] == "no"

    def test_fbdd_reduction(self, capsys, tmp_path):
        cnf = tmp_path / "psi.cnf"
        cnf.write_text(write_dimacs(CnfFormula(2, [[1, 2], [-1, -2]])))
        out_dir = tmp_path / "out"
        code, _, _ = run(capsys, ["gen", "--kind", "fbdd-cnf", "--cnf", str(cnf), "--out", str(out_dir)])
        assert code == 0
        entry = json.loads((out_dir / "manifest.jsonl").read_text().splitlines()[0])
        assert entry["expected"] == {"relevant": True}
        code, records, _ = run(
            capsys,
            [
                "relevancy", entry["files"]["model"],
                "--instance", ",".join(str(int(v)) for v in entry["instance"]),
                "--class", str(entry["class"]),
                "--feature", str(entry["target"]),
            ],
        )
        assert code == 0

    def test_random_corpora(self, capsys, tmp_path):
        out_dir = tmp_path / "corpus"
        code, _, _ = run(
            capsys,
            ["gen", "--kind", "random-circuit", "--count", "2", "--features", "6", "--seed", "3", "--out", str(out_dir)],
        )
        assert code == 0
        code, _, _ = run(
            capsys,
            ["gen", "--kind", "random-monotone", "--count", "2", "--features", "5", "--seed", "3", "--out", str(out_dir)],
        )
        assert code == 0
        entries = [json.loads(line) for line in (out_dir / "manifest.jsonl").read_text().splitlines()]
        assert len(entries) == 2  # each run rewrites the manifest for its artifacts
        names = sorted(os.listdir(out_dir))
        assert any(n.endswith(".nnf") for n in names)
        assert any(n.endswith(".mono") for n in names)

    def test_expected_answers_pinned_for_small_models(self, capsys, tmp_path):
        out_dir = tmp_path / "pin"
        run(capsys, ["gen", "--kind", "random-circuit", "--count", "3", "--features", "5", "--seed", "9", "--out", str(out_dir)])
        entries = [json.loads(line) for line in (out_dir / "manifest.jsonl").read_text().splitlines()]
        for entry in entries:
            assert entry["expected"] is not None
            expected_relevant = entry["expected"]["relevant"]
            for feature in expected_relevant:
                code, records, _ = run(
                    capsys,
                    [
                        "relevancy", entry["files"]["model"],
                        "--instance", ",".join(str(int(v)) for v in entry["instance"]),
                        "--class", str(entry["class"]),
                        "--feature", str(feature),
                    ],
                )
                assert code == 0, (entry, feature)


class TestBenchCommand:
    @pytest.fixture()
    def corpus(self, capsys, tmp_path):
        out_dir = tmp_path / "corpus"
        run(capsys, ["gen", "--kind", "random-circuit", "--count", "2", "--features", "6", "--seed", "1", "--out", str(out_dir)])
        run(capsys, ["gen", "--kind", "random-monotone", "--count", "1", "--features", "5", "--seed", "1", "--out", str(out_dir)])
        return out_dir

    def test_records_and_summary(self, capsys, corpus):
        code, records, _ = run(
            capsys, ["bench", "--models", str(corpus), "--queries", "3", "--seed", "2"]
        )
        assert code == 0
        summary = records[-1]
        assert "summary" in summary
        queries = records[:-1]
        assert len(queries) == 9
        for record in queries:
            assert record["answer"] in ("yes", "no")
            assert (record["witness"] is not None) == (record["answer"] == "yes")
            stats = record["stats"]
            assert stats["sat_calls"] >= 1
            if record["model"].endswith(".mono"):
                assert stats["predict_calls"] <= 4 * stats["sat_calls"] + 2 * 5

    def test_parallel_jobs_match_serial(self, capsys, corpus):
        _, serial, _ = run(capsys, ["bench", "--models", str(corpus), "--queries", "2", "--seed", "5"])
        _, parallel, _ = run(
            capsys, ["bench", "--models", str(corpus), "--queries", "2", "--seed", "5", "--jobs", "2"]
        )

        def strip_wall(records):
            out = []
            for r in records[:-1]:
                stats = {k: v for k, v in r["stats"].items() if k != "wall_ms"}
                out.append({**{k: v for k, v in r.items() if k != "stats"}, "stats": stats})
            return out

        assert strip_wall(serial) == strip_wall(parallel)

    def test_report_directory(self, capsys, corpus, tmp_path):
        report_dir = tmp_path / "report"
        code, _, err = run(
            capsys,
            [
                "bench", "--models", str(corpus),
                "--queries", "2", "--seed", "3", "--report-dir", str(report_dir),
            ],
        )
        assert code == 0
        produced = sorted(os.listdir(report_dir))
        assert "summary.csv" in produced
        assert "runtime_hist.png" in produced
        assert "query_calls.png" in produced
        header = (report_dir / "summary.csv").read_text().splitlines()[0]
        assert header.startswith("model,queries,pct_yes")
        assert (report_dir / "runtime_hist.png").stat().st_size > 0


class TestRecordSchema:
    def test_round_trips_and_field_names(self, capsys, demo_nnf_file):
        _, records, _ = run(
            capsys,
            ["relevancy", demo_nnf_file, "--instance", "0,1,0,0", "--feature", "3"],
        )
        record = records[0]
        assert set(record) >= {"query", "model", "instance", "class", "feature", "answer", "witness", "stats"}
        assert json.loads(json.dumps(record)) == record
        stats = record["stats"]
        for key in ("sat_calls", "predict_calls", "cnf_vars", "cnf_clauses", "wall_ms"):
            assert stats[key] >= 0
