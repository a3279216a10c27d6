import json
import subprocess
import sys

import numpy as np
import pytest

from shapedpolar.cli import main as cli_main
from shapedpolar.sim import (
    BLER_HEADER,
    CALIBRATE_HEADER,
    DesignInfeasibleError,
    ExperimentConfig,
    ResultRecord,
    _rescale_allocation,
    interpolate_crossing_db,
    operating_snr_db,
    run_bler,
    run_calibrate,
    run_rates,
    simulate_bler_point,
    wilson_interval,
)
from shapedpolar.transceiver import SchemeDesign, preset

TINY = SchemeDesign(scheme="umlc", m=2, n_c=64, p=0.5, s=0, k=(10, 30),
                    z=(4, 4), crc_polys=(0x3, 0x3))


class TestWilson:
    def test_contains_point_estimate(self):
        lo, hi = wilson_interval(10, 100)
        assert lo < 0.1 < hi

    def test_zero_errors(self):
        lo, hi = wilson_interval(0, 1000)
        assert lo < 1e-12 and 0 < hi < 0.01

    def test_monotone_width_in_trials(self):
        widths = []
        for n in (2000, 8000, 32000):
            lo, hi = wilson_interval(int(0.05 * n), n)
            widths.append(hi - lo)
        # width shrinks like 1/sqrt(n): each 4x budget halves it
        assert abs(widths[0] / widths[1] - 2.0) < 0.3
        assert abs(widths[1] / widths[2] - 2.0) < 0.3

    def test_invalid(self):
        with pytest.raises(ValueError):
            wilson_interval(0, 0)


class TestGoldenHeaders:
    def test_headers_are_stable(self):
        assert BLER_HEADER == ("scheme", "snr_db", "blocks", "errors", "bler",
                               "wilson_lo", "wilson_hi")
        assert CALIBRATE_HEADER == ("p", "s", "ones_fraction", "stderr", "s_star")
        from shapedpolar.sim import _rates_header
        assert _rates_header(4) == ("curve", "snr_db", "rate", "rate_stderr",
                                    "param", "I_1", "I_2", "I_3", "I_4")


class TestExperimentConfig:
    def test_grid_must_increase(self):
        with pytest.raises(ValueError):
            ExperimentConfig(command="bler", snr_db_grid=(10.0, 9.0))

    def test_counts_positive(self):
        with pytest.raises(ValueError):
            ExperimentConfig(command="bler", blocks=0)

    def test_unknown_command(self):
        with pytest.raises(ValueError):
            ExperimentConfig(command="plot")

    def test_hash_changes_with_params(self):
        a = ExperimentConfig(command="bler", scheme=TINY, snr_db_grid=(10.0,))
        b = ExperimentConfig(command="bler", scheme=TINY, snr_db_grid=(11.0,))
        assert a.config_hash() != b.config_hash()
        assert a.config_hash() == ExperimentConfig(
            command="bler", scheme=TINY, snr_db_grid=(10.0,)).config_hash()


class TestBlerEngine:
    def test_zero_noise_gives_zero_bler(self):
        row = simulate_bler_point(TINY, 10.0, blocks=512, target_errors=1000,
                                  seed=3, zero_noise=True)
        assert row["errors"] == 0 and row["bler"] == 0.0

    def test_reproducible_and_worker_invariant(self):
        a = simulate_bler_point(TINY, 11.0, blocks=2048, target_errors=10 ** 9,
                                seed=5, batch_size=256)
        b = simulate_bler_point(TINY, 11.0, blocks=2048, target_errors=10 ** 9,
                                seed=5, batch_size=256)
        assert a == b
        c = simulate_bler_point(TINY, 11.0, blocks=2048, target_errors=10 ** 9,
                                seed=5, batch_size=256, workers=2)
        assert c == a

    def test_error_target_stops_early(self):
        row = simulate_bler_point(TINY, 5.0, blocks=10 ** 6, target_errors=50,
                                  seed=6, batch_size=128)
        assert row["blocks"] < 10 ** 6
        assert row["errors"] >= 50

    def test_run_bler_floor_stops_sweep(self, tmp_path):
        cfg = ExperimentConfig(command="bler", scheme=TINY,
                               snr_db_grid=(22.0, 24.0, 26.0), blocks=1024,
                               target_errors=10 ** 9, bler_floor=1.0, seed=7,
                               out=str(tmp_path / "b.csv"))
        rec = run_bler(cfg)
        assert len(rec.rows) == 1
        assert rec.meta["stopped_below_floor"]

    def test_csv_and_sidecar(self, tmp_path):
        out = tmp_path / "bler.csv"
        cfg = ExperimentConfig(command="bler", scheme=TINY, snr_db_grid=(12.0,),
                               blocks=512, target_errors=10 ** 9, seed=8,
                               out=str(out))
        rec = run_bler(cfg)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == ",".join(BLER_HEADER)
        assert len(lines) == 2
        meta = json.loads((tmp_path / "bler.meta.json").read_text())
        assert meta["config_hash"] == rec.config_hash
        assert meta["seed"] == 8

    def test_rerun_identical_metrics(self, tmp_path):
        cfg = ExperimentConfig(command="bler", scheme=TINY, snr_db_grid=(11.5,),
                               blocks=1024, target_errors=10 ** 9, seed=9)
        assert run_bler(cfg).rows == run_bler(cfg).rows


class TestCrossingHelpers:
    ROWS = [
        {"snr_db": 10.0, "bler": 0.12, "errors": 120},
        {"snr_db": 11.0, "bler": 0.011, "errors": 110},
        {"snr_db": 12.0, "bler": 0.0009, "errors": 90},
    ]

    def test_operating_snr(self):
        assert operating_snr_db(self.ROWS, 1e-3) == 12.0
        assert operating_snr_db(self.ROWS, 1e-5) is None

    def test_interpolated_crossing(self):
        db = interpolate_crossing_db(self.ROWS, 1e-2)
        assert 11.0 < db < 12.0
        # log-linear: exact midpoint check
        import math
        f = (math.log10(1e-2) - math.log10(0.011)) / (math.log10(0.0009) - math.log10(0.011))
        assert abs(db - (11.0 + f)) < 1e-12


class TestCalibrateAndRates:
    def test_calibrate_csv(self, tmp_path):
        out = tmp_path / "cal.csv"
        cfg = ExperimentConfig(command="calibrate", p_grid=(0.6,), n_c=64,
                               trials=1000, seed=10, out=str(out))
        rec = run_calibrate(cfg)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == ",".join(CALIBRATE_HEADER)
        s_stars = {row["s_star"] for row in rec.rows}
        assert len(s_stars) == 1

    def test_rates_rows(self):
        cfg = ExperimentConfig(command="rates", snr_db_grid=(12.0,),
                               samples=5000, curves=("mlc:uniform",), seed=11)
        rec = run_rates(cfg)
        assert len(rec.rows) == 1
        row = rec.rows[0]
        assert row["curve"] == "mlc:uniform"
        assert 0 < row["rate"] < 4
        assert set(f"I_{i}" for i in range(1, 5)) <= set(row)


class TestRescale:
    def test_exact_total(self):
        ks = _rescale_allocation((20, 100, 190, 180), 512)
        assert sum(ks) == 512
        assert all(abs(a - b) <= 9 for a, b in zip(ks, (20, 100, 190, 180)))

    def test_no_op_when_matching(self):
        assert _rescale_allocation((14, 92, 185, 221), 512) == (14, 92, 185, 221)

    def test_all_zero_rejected(self):
        with pytest.raises(DesignInfeasibleError):
            _rescale_allocation((0, 0, 0, 0), 512)


class TestCli:
    def test_bler_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "o.csv"
        code = cli_main(["bler", "--preset", "umlc", "--snr-db", "20:1:20",
                         "--blocks", "512", "--target-errors", "1000000000",
                         "--zero-noise", "--seed", "1", "--out", str(out)])
        assert code == 0
        assert out.exists()
        captured = capsys.readouterr()
        assert "bler=0" in captured.out

    def test_config_error_exit_code(self, capsys):
        assert cli_main(["bler", "--snr-db", "10:1:12"]) == 2  # no scheme
        assert cli_main(["bler", "--preset", "umlc", "--snr-db", "12:1:10"]) == 2
        capsys.readouterr()

    def test_bad_config_file_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("scheme = umlc\nnot a config\n")
        assert cli_main(["bler", "--config", str(bad), "--snr-db", "10:1:11"]) == 2
        err = capsys.readouterr().err
        assert "line 2" in err

    def test_infeasible_design_exit_code(self, capsys):
        code = cli_main(["design", "--preset", "umlc", "--snr-db=-3:1:-3",
                         "--pe", "1e-3", "--blocks", "512", "--samples", "2000",
                         "--seed", "2"])
        assert code == 3
        assert "infeasible" in capsys.readouterr().err

    def test_calibrate_runs(self, tmp_path):
        out = tmp_path / "c.csv"
        code = cli_main(["calibrate", "--p-grid", "0.6", "--n-c", "64",
                         "--trials", "1000", "--out", str(out)])
        assert code == 0
        assert out.read_text().startswith(",".join(CALIBRATE_HEADER))

    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "shapedpolar.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "bler" in proc.stdout


class TestResultRecord:
    def test_write_csv_format(self, tmp_path):
        rec = ResultRecord("x", "abc", 0, 1.0,
                           [{"a": 1, "b": 0.5}], ("a", "b"))
        path = tmp_path / "r.csv"
        rec.write_csv(path)
        assert path.read_text() == "a,b\n1,0.5\n"
