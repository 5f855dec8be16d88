import math

import numpy as np
import pytest

from iftem import bench, codec, signals
from iftem.cli import ENV_OUTPUT_DIR, main

OMEGA = 2 * math.pi * 60


def _metrics_from_stdout(text):
    out = {}
    for line in text.splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key] = value
    return out


class TestEncodeDecode:
    def test_roundtrip(self, tmp_path, capsys):
        stream = tmp_path / "stream.bin"
        icsv = tmp_path / "intervals.csv"
        rc = main(["encode", "--out", str(stream), "--scheme", "ccif",
                   "--bits", "8", "--duration", "0.13", "--seed", "3",
                   "--intervals-csv", str(icsv)])
        assert rc == 0
        assert stream.read_bytes()[:4] == b"IFT1"
        assert icsv.exists()
        out = capsys.readouterr().out
        assert "scheme=ccif" in out and "total=" in out

        decoded_csv = tmp_path / "decoded.csv"
        rc = main(["decode", str(stream), "--out", str(decoded_csv)])
        assert rc == 0
        lines = decoded_csv.read_text().strip().splitlines()
        assert lines[0] == "interval"
        assert len(lines) > 50

    def test_decode_values_match_library(self, tmp_path):
        stream = tmp_path / "stream.bin"
        main(["encode", "--out", str(stream), "--scheme", "dcif",
              "--bits", "8", "--duration", "0.13"])
        decoded_csv = tmp_path / "decoded.csv"
        main(["decode", str(stream), "--out", str(decoded_csv)])
        from_file = [float(x) for x in
                     decoded_csv.read_text().strip().splitlines()[1:]]
        direct = codec.decode_stream(codec.read_stream(stream))
        np.testing.assert_array_equal(from_file, direct)

    def test_reconstruction_with_ground_truth(self, tmp_path, capsys):
        sig = signals.generate(OMEGA, 0.8, 0.13, seed=3)
        sig_csv = tmp_path / "signal.csv"
        signals.save_signal(sig, sig_csv)
        stream = tmp_path / "stream.bin"
        rc = main(["encode", "--signal", str(sig_csv), "--out", str(stream),
                   "--scheme", "ccif", "--bits", "8"])
        assert rc == 0
        rec_csv = tmp_path / "rec.csv"
        rc = main(["decode", str(stream), "--reconstruct", str(rec_csv),
                   "--omega", "60", "--signal", str(sig_csv)])
        assert rc == 0
        assert rec_csv.read_text().startswith("time,value")
        out = capsys.readouterr().out
        mse_line = [l for l in out.splitlines() if l.startswith("mse_db=")]
        assert mse_line and float(mse_line[0].split("=")[1]) < -20.0

    def test_self_delimiting_flag_lands_in_stream(self, tmp_path):
        stream = tmp_path / "stream.bin"
        main(["encode", "--out", str(stream), "--scheme", "ccif",
              "--bits", "8", "--duration", "0.13",
              "--accounting", "self-delimiting"])
        assert codec.read_stream(stream).header.self_delimiting

    def test_alpha_bias_mode(self, tmp_path):
        stream = tmp_path / "stream.bin"
        rc = main(["encode", "--out", str(stream), "--bias-mode", "alpha",
                   "--alpha", "6", "--bits", "8", "--duration", "0.13"])
        assert rc == 0

    def test_reconstruct_requires_omega(self, tmp_path, capsys):
        stream = tmp_path / "stream.bin"
        main(["encode", "--out", str(stream), "--bits", "8",
              "--duration", "0.13"])
        rc = main(["decode", str(stream),
                   "--reconstruct", str(tmp_path / "rec.csv")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_decode_missing_file(self, tmp_path, capsys):
        rc = main(["decode", str(tmp_path / "nope.bin")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_decode_garbage(self, tmp_path, capsys):
        bad = tmp_path / "bad.bin"
        bad.write_bytes(b"not a stream at all, nowhere near")
        rc = main(["decode", str(bad)])
        assert rc == 1


class TestTrial:
    def test_prints_all_metric_fields(self, capsys):
        rc = main(["trial", "--scheme", "ccif", "--bits", "8",
                   "--duration", "0.13", "--seed", "0"])
        assert rc == 0
        metrics = _metrics_from_stdout(capsys.readouterr().out)
        for name in bench.METRIC_FIELDS:
            assert name in metrics
        assert float(metrics["mse_db"]) < -20.0
        assert metrics["scheme"] == "ccif"

    def test_save_writes_row_and_config(self, tmp_path, capsys):
        rc = main(["trial", "--bits", "8", "--duration", "0.13",
                   "--save", "--outdir", str(tmp_path), "--prefix", "t0"])
        assert rc == 0
        rows = bench.load_rows(tmp_path / "t0.csv")
        assert len(rows) == 1 and rows[0]["kind"] == "trial"
        config = (tmp_path / "t0_config.txt").read_text()
        assert "bits=8" in config
        assert "omega_unit=rad" in config  # resolved, not raw

    def test_omega_unit_rad(self, capsys):
        rad = 60.0 * (2 * math.pi)
        main(["trial", "--bits", "8", "--duration", "0.13",
              "--omega", "60", "--omega-unit", "hz"])
        hz_out = _metrics_from_stdout(capsys.readouterr().out)
        main(["trial", "--bits", "8", "--duration", "0.13",
              "--omega", repr(rad), "--omega-unit", "rad"])
        rad_out = _metrics_from_stdout(capsys.readouterr().out)
        assert float(hz_out["omega"]) == float(rad_out["omega"])
        assert hz_out["mse_db"] == rad_out["mse_db"]

    def test_env_output_dir(self, tmp_path, monkeypatch, capsys):
        envdir = tmp_path / "from_env"
        monkeypatch.setenv(ENV_OUTPUT_DIR, str(envdir))
        rc = main(["trial", "--bits", "8", "--duration", "0.13", "--save"])
        assert rc == 0
        assert (envdir / "trial.csv").exists()
        assert (envdir / "trial_config.txt").exists()

    def test_bits_out_of_range(self, capsys):
        assert main(["trial", "--bits", "20", "--duration", "0.13"]) == 1
        assert "error:" in capsys.readouterr().err


class TestConfigFile:
    def test_file_applies_and_flags_win(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment line\nscheme=ccif\nbits=12\nseed=5\n")
        rc = main(["trial", "--config", str(cfg), "--bits", "8",
                   "--duration", "0.13"])
        assert rc == 0
        metrics = _metrics_from_stdout(capsys.readouterr().out)
        assert metrics["scheme"] == "ccif"  # from file
        assert metrics["bits"] == "8"  # flag beats file
        assert metrics["seed"] == "5"  # from file

    def test_none_value(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("duration=none\n")
        rc = main(["trial", "--config", str(cfg), "--bits", "8"])
        assert rc == 0
        metrics = _metrics_from_stdout(capsys.readouterr().out)
        assert float(metrics["duration"]) == 0.13  # per-band default kicked in

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("frobnicate=1\n")
        assert main(["trial", "--config", str(cfg),
                     "--duration", "0.13"]) == 1
        assert "unknown option" in capsys.readouterr().err

    def test_malformed_line_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("this is not a key value pair\n")
        assert main(["trial", "--config", str(cfg),
                     "--duration", "0.13"]) == 1


class TestSweep:
    def test_tiny_sweep_outputs(self, tmp_path, capsys):
        rc = main(["sweep", "--omegas", "60", "--schemes", "ccif",
                   "--bits", "8", "--seeds", "1", "--duration", "0.13",
                   "--outdir", str(tmp_path), "--prefix", "tiny"])
        assert rc == 0
        for name in ("tiny.csv", "tiny.py", "tiny_mse.png",
                     "tiny_overhead.png", "tiny_config.txt"):
            assert (tmp_path / name).exists(), name
        rows = bench.load_rows(tmp_path / "tiny.csv")
        kinds = [r["kind"] for r in rows]
        assert kinds == ["trial", "mean", "std"]
        config = (tmp_path / "tiny_config.txt").read_text()
        assert "omega_unit=rad" in config

    def test_bit_range_syntax(self, tmp_path):
        rc = main(["sweep", "--omegas", "60", "--schemes", "iftem",
                   "--bits", "7:8", "--seeds", "1", "--duration", "0.13",
                   "--outdir", str(tmp_path), "--prefix", "r"])
        assert rc == 0
        rows = bench.load_rows(tmp_path / "r.csv")
        bits = sorted({r["bits"] for r in rows if r["kind"] == "trial"})
        assert bits == [7, 8]

    def test_failing_trial_exits_nonzero(self, tmp_path, capsys):
        rc = main(["sweep", "--omegas", "60", "--schemes", "iftem",
                   "--bits", "8", "--seeds", "1", "--duration", "0.13",
                   "--bias", "1.0", "--outdir", str(tmp_path),
                   "--prefix", "bad"])
        assert rc == 1
        assert "failed:" in capsys.readouterr().err
        assert (tmp_path / "bad.csv").exists()  # outputs written regardless

    def test_unknown_scheme(self, tmp_path, capsys):
        rc = main(["sweep", "--schemes", "bogus", "--seeds", "1",
                   "--outdir", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestTable:
    def test_tiny_table_outputs(self, tmp_path, capsys):
        rc = main(["table1", "--cif-bits", "8", "--seeds", "1",
                   "--schemes", "dcif", "--outdir", str(tmp_path),
                   "--prefix", "tab", "--no-check"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "cif" in out and "mse_if" in out
        rows = bench.load_rows(tmp_path / "tab.csv")
        assert rows[0]["cif_bits"] == 8 and rows[0]["if_bits"] == 10
        assert (tmp_path / "tab_config.txt").exists()

    def test_rejects_baseline_scheme(self, tmp_path, capsys):
        rc = main(["table1", "--cif-bits", "8", "--seeds", "1",
                   "--schemes", "iftem", "--outdir", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err
