import json
import math

import pytest

from framesync import bsc_threshold_closed_form, composite_binary_threshold_closed_form
from framesync.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestThreshold:
    def test_bsc(self, capsys):
        code, out, _ = run_cli(capsys, "threshold", "--bsc", "0.1")
        assert code == 0
        payload = json.loads(out)
        assert payload["alpha_nats"] == pytest.approx(
            bsc_threshold_closed_form(0.1), abs=1e-12
        )
        assert payload["argmax_symbol"] == 1

    def test_identity_file_reports_infinite(self, capsys, tmp_path):
        path = tmp_path / "identity.mat"
        path.write_text("2 2\n1 0\n0 1\n")
        code, out, _ = run_cli(capsys, "threshold", "--file", str(path))
        assert code == 0
        assert json.loads(out)["alpha_nats"] == "infinite"

    def test_onoff_bsc_matches_closed_form(self, capsys):
        code, out, _ = run_cli(capsys, "threshold", "--onoff-bsc", "0.5", "0.1")
        assert code == 0
        assert json.loads(out)["alpha_nats"] == pytest.approx(
            composite_binary_threshold_closed_form(0.5, 0.1), abs=1e-12
        )

    def test_keyed_onoff_form_accepted(self, capsys):
        code, out, _ = run_cli(capsys, "threshold", "--onoff-bsc", "p=0.5", "eps=0.1")
        assert code == 0

    def test_bits_flag(self, capsys):
        code, out, _ = run_cli(capsys, "threshold", "--bsc", "0.1", "--bits")
        payload = json.loads(out)
        assert payload["alpha_bits"] == pytest.approx(
            bsc_threshold_closed_form(0.1) / math.log(2.0), abs=1e-12
        )

    def test_validation_failure_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "threshold", "--bsc", "1.5")
        assert code == 2
        assert "error" in err

    def test_inline(self, capsys):
        code, out, _ = run_cli(capsys, "threshold", "--inline", "0.9,0.1;0.2,0.8")
        assert code == 0
        assert json.loads(out)["argmax_symbol"] == 1


class TestLemma1Grid:
    def test_small_grid(self, capsys):
        code, out, _ = run_cli(
            capsys, "lemma1-grid", "--p-list", "0.5,1.0", "--eps-list", "0.1,0.2"
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "p,eps,alpha_q,p_alpha_qn,slack,holds"
        assert len(lines) == 5
        assert all(line.endswith("true") for line in lines[1:])

    def test_p_one_rows_have_zero_slack(self, capsys):
        code, out, _ = run_cli(
            capsys, "lemma1-grid", "--p-list", "1.0", "--eps-list", "0.1"
        )
        slack = float(out.strip().splitlines()[1].split(",")[4])
        assert abs(slack) < 1e-12


class TestRayleighSweep:
    def test_small_sweep(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "rayleigh-sweep",
            "--snr-list", "1,10",
            "--sigma-h-list", "1",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "snr,sigma_h,alpha_q,alpha_qn,ratio"
        ratios = [float(line.split(",")[4]) for line in lines[1:]]
        assert all(r > 0 for r in ratios)
        # alpha_q column is the absolute threshold, increasing with SNR
        alphas = [float(line.split(",")[2]) for line in lines[1:]]
        assert alphas[1] > alphas[0]


class TestSequence:
    def test_nearest_length(self, capsys):
        code, out, _ = run_cli(capsys, "sequence", "--n", "100", "--k", "4")
        assert code == 0
        payload = json.loads(out)
        assert payload["n"] == 63
        assert payload["prefix_len"] == 15
        assert payload["min_shift_distance"] > 0

    def test_exact_layout(self, capsys):
        code, out, _ = run_cli(capsys, "sequence", "--n", "21", "--k", "3")
        payload = json.loads(out)
        assert payload["prefix_len"] == 7
        assert payload["tail_len"] == 14
        assert len(payload["word"]) == 21

    def test_too_short_errors(self, capsys):
        code, _, err = run_cli(capsys, "sequence", "--n", "5", "--k", "3")
        assert code == 2
        assert "error" in err


class TestSimulate:
    def test_single_config_runs(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "mode = single\nchannel = bsc:0.0\nn = 21\nk = 3\nmu = 0.01\n"
            "a = 5\ntrials = 50\nseed = 3\n"
        )
        code, out, _ = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 0
        payload = json.loads(out)
        assert payload["report"]["p_err"] == 0.0
        assert payload["config"]["channel"] == "bsc:0.0"

    def test_zero_trials_is_validation_error(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "mode = single\nchannel = bsc:0.1\nn = 21\nk = 3\na = 5\ntrials = 0\n"
        )
        code, _, err = run_cli(capsys, "simulate", "--config", str(cfg))
        assert code == 2

    def test_preset_with_overrides_and_replay(self, capsys, tmp_path):
        out_path = tmp_path / "report.json"
        code, _, _ = run_cli(
            capsys,
            "simulate", "--preset", "single_bsc",
            "--set", "trials=60", "--set", "a=200",
            "--set", "n=21", "--set", "k=3", "--set", "mu=0.08",
            "--out", str(out_path),
        )
        assert code == 0
        first = out_path.read_text()
        assert json.loads(first)["report"]["trials"] == 60
        # byte-identical replay through a second file
        out2 = tmp_path / "replay.json"
        code, _, _ = run_cli(
            capsys, "simulate", "--replay", str(out_path), "--out", str(out2)
        )
        assert code == 0
        assert out2.read_text() == first

    def test_scaling_csv_replay(self, capsys, tmp_path):
        out_path = tmp_path / "scaling.csv"
        args = [
            "simulate", "--preset", "bsc_scaling",
            "--set", "trials=80", "--set", "n_list=21,45",
            "--set", "k=3", "--set", "beta=0.25",
            "--out", str(out_path),
        ]
        code, _, _ = run_cli(capsys, *args)
        assert code == 0
        first = out_path.read_text()
        assert "n,a,alpha,p_err" in first
        out2 = tmp_path / "scaling2.csv"
        code, _, _ = run_cli(
            capsys, "simulate", "--replay", str(out_path), "--out", str(out2)
        )
        assert code == 0
        assert out2.read_text() == first

    def test_unknown_preset(self, capsys):
        code, _, err = run_cli(capsys, "simulate", "--preset", "nope")
        assert code == 2

    def test_midrun_failure_flushes_partial_rows(self, capsys, tmp_path):
        # second row needs an uncertifiable far-window skip and must fail,
        # but the first row's result still lands in the file with exit 3
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "mode = bsc-scaling\neps = 0.4\nk = 2\nbeta = 0.99\n"
            "n_list = 6,254\nmu = 0.4\nnorm = linf\ntrials = 50\nseed = 1\n"
        )
        out = tmp_path / "o.csv"
        code, _, err = run_cli(
            capsys, "simulate", "--config", str(cfg), "--out", str(out)
        )
        assert code == 3
        assert "partial results flushed" in err
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert len(rows) == 2  # header plus the completed first row
        assert rows[1].startswith("6,")


class TestDeterminism:
    def test_byte_identical_reruns_any_workers(self, capsys, tmp_path):
        files = []
        for name, workers in (("a.csv", "1"), ("b.csv", "2"), ("c.csv", "1")):
            path = tmp_path / name
            code, _, _ = run_cli(
                capsys,
                "simulate", "--preset", "bsc_scaling",
                "--set", "trials=60", "--set", "n_list=21,45",
                "--set", "k=3", "--set", "beta=0.25",
                "--set", f"workers={workers}",
                "--out", str(path),
            )
            assert code == 0
            files.append(path.read_bytes())
        # worker count must not leak into the file
        assert files[0] == files[1] == files[2]
