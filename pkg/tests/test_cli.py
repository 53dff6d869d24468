import json

import pytest

from simplexdec.cli import main


@pytest.fixture
def logits(tmp_path):
    path = tmp_path / "logits.jsonl"
    assert main(["gen", "--family", "peaked", "--n", "16", "--rows", "4",
                 "--seed", "7", "--out", str(path)]) == 0
    return path


def run_ok(args):
    assert main(args) == 0


class TestGen:
    def test_binary_and_jsonl_agree(self, tmp_path):
        a = tmp_path / "l.jsonl"
        b = tmp_path / "l.bin"
        run_ok(["gen", "--n", "8", "--rows", "3", "--seed", "1", "--out", str(a)])
        run_ok(["gen", "--n", "8", "--rows", "3", "--seed", "1", "--out", str(b),
                "--format", "binary"])
        from simplexdec import read_logits

        import numpy as np
        np.testing.assert_array_equal(
            read_logits(str(a), "jsonl").values, read_logits(str(b), "binary").values
        )

    def test_out_required(self):
        assert main(["gen", "--n", "8", "--rows", "3"]) == 1


class TestDecode:
    def test_byte_identical_reruns(self, tmp_path, logits):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["decode", "--input", str(logits), "--decoder", "softmax",
                "--lambda", "0.8", "--seed", "11", "--out"]
        run_ok(args + [str(out1)])
        run_ok(args + [str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_format_equivalence(self, tmp_path, logits):
        bin_path = tmp_path / "logits.bin"
        run_ok(["gen", "--family", "peaked", "--n", "16", "--rows", "4", "--seed", "7",
                "--out", str(bin_path), "--format", "binary"])
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_ok(["decode", "--input", str(logits), "--decoder", "sparsemax",
                "--lambda", "2.0", "--seed", "5", "--out", str(out_a)])
        run_ok(["decode", "--input", str(bin_path), "--format", "binary",
                "--decoder", "sparsemax", "--lambda", "2.0", "--seed", "5",
                "--out", str(out_b)])
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_emit_probs_jsonl(self, tmp_path, logits):
        out = tmp_path / "r.jsonl"
        run_ok(["decode", "--input", str(logits), "--decoder", "greedy",
                "--report-format", "jsonl", "--emit-probs", "--out", str(out)])
        rec = json.loads(out.read_text().splitlines()[0])
        assert "probs" in rec and len(rec["probs"]) == 16
        assert sum(rec["probs"]) == 1.0

    def test_config_file_with_flag_override(self, tmp_path, logits):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"decoder": "topk", "k": 3, "lambda": 0.5, "seed": 2}))
        out_cfg = tmp_path / "from_config.csv"
        run_ok(["decode", "--input", str(logits), "--config", str(cfg), "--out", str(out_cfg)])
        assert ",topk," in out_cfg.read_text().splitlines()[1]

        out_override = tmp_path / "override.csv"
        run_ok(["decode", "--input", str(logits), "--config", str(cfg),
                "--decoder", "greedy", "--out", str(out_override)])
        assert ",greedy," in out_override.read_text().splitlines()[1]

    def test_missing_input_is_usage_error(self):
        assert main(["decode", "--decoder", "softmax"]) == 1

    def test_bad_flag_value_is_usage_error(self, logits):
        assert main(["decode", "--input", str(logits), "--decoder", "softmax",
                     "--lambda", "0"]) == 1

    def test_data_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"NOPE" + b"\x00" * 12)
        assert main(["decode", "--input", str(bad), "--format", "binary",
                     "--decoder", "softmax"]) == 2

    def test_unknown_flag(self, logits):
        assert main(["decode", "--input", str(logits), "--frobnicate"]) == 1


class TestSweep:
    def test_byte_identical_reruns(self, tmp_path, logits):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--input", str(logits), "--decoder", "softmax,sparsemax",
                "--lambda", "0.5,1.0", "--trials", "200", "--seed", "13", "--out"]
        run_ok(args + [str(out1)])
        run_ok(args + [str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_grid_size(self, tmp_path, logits):
        out = tmp_path / "s.csv"
        run_ok(["sweep", "--input", str(logits), "--decoder", "bok", "--lambda", "0.5",
                "--beta-bar", "0,0.5,1.0", "--steps", "50", "--out", str(out)])
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 4  # header + one row per beta_bar

    def test_step_sweep_rows(self, tmp_path, logits):
        out = tmp_path / "s.csv"
        run_ok(["sweep", "--input", str(logits), "--decoder", "bok",
                "--lambda", "0.2", "--beta-bar", "0.002",
                "--steps", "2,5,10,15,20", "--out", str(out)])
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 6


class TestVerify:
    def test_closed_form_passes(self, logits):
        assert main(["verify", "--input", str(logits), "--decoder", "softmax",
                     "--lambda", "1.0"]) == 0

    def test_violation_exit_code(self, logits):
        # One mirror step nowhere near the optimum: certificate must fail.
        assert main(["verify", "--input", str(logits), "--decoder", "bok",
                     "--lambda", "0.2", "--beta-bar", "0.004", "--steps", "1"]) == 3

    def test_tight_tolerance_trips(self, logits):
        assert main(["verify", "--input", str(logits), "--decoder", "softmax",
                     "--lambda", "1.0", "--cert-tol", "1e-18"]) == 3


class TestCoverageSim:
    def test_runs_all_families(self, tmp_path):
        for family in ("peaked", "flat", "heavy_tail"):
            out = tmp_path / f"{family}.csv"
            run_ok(["coverage-sim", "--family", family, "--n", "24", "--rows", "3",
                    "--decoder", "softmax", "--lambda", "1.0", "--K", "8",
                    "--trials", "300", "--seed", "3", "--out", str(out)])
            lines = out.read_text().strip().splitlines()
            assert len(lines) == 4
            header = lines[0].split(",")
            row = lines[1].split(",")
            assert row[header.index("coverage_mc")] != ""
            assert row[header.index("coverage_analytic")] != ""
