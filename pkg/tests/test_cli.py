import csv
import json

import pytest
from click.testing import CliRunner

from nkpc.cli import main

CONFIG = """
[data]
synth_seed = 7
synth_n = 120

[race]
specs = ["backward"]
horizons = [1, 2]
test_quarters = 12
trend_method = "HP"

[[models]]
id = "ols"
kind = "ols"

[[models]]
id = "rw"
kind = "rw"

[conformal]
kappa = 8
alpha = 0.5

[explain]
model = "ols"
spec = "backward"
horizon = 1
method = "sampled"
samples = 100
background_cap = 40
importance_repeats = 2
grid_resolution = 5
pdp_features = ["inflation.L1", "output_gap.L1"]
pdp2_pairs = [["inflation.L1", "output_gap.L1"]]

[run]
seed = 0
"""


def invoke(*args):
    return CliRunner().invoke(main, list(args))


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    """One full pipeline (backtest -> conformal -> explain -> report) shared
    across the read-only assertions below."""
    root = tmp_path_factory.mktemp("run")
    cfg = root / "run.toml"
    cfg.write_text(CONFIG)
    out = root / "out"
    for cmd in ("backtest", "conformal", "explain", "report"):
        res = invoke(cmd, "--config", str(cfg), "--out", str(out))
        assert res.exit_code == 0, f"{cmd} failed: {res.output}{res.stderr}"
    return cfg, out


class TestSynth:
    def test_same_seed_identical_files(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert invoke("synth", "--seed", "5", "--n", "80", "--out", str(a)).exit_code == 0
        assert invoke("synth", "--seed", "5", "--n", "80", "--out", str(b)).exit_code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        invoke("synth", "--seed", "1", "--out", str(a))
        invoke("synth", "--seed", "2", "--out", str(b))
        assert a.read_bytes() != b.read_bytes()


class TestBacktest:
    def test_outputs_exist_and_parse(self, run_dir):
        _, out = run_dir
        with open(out / "ledger.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        # 12 + 11 origins for ols, same again for rw
        assert len(rows) == 2 * (12 + 11)
        for name in ("ledger.json", "failures.json", "metrics.json",
                     "mcb.json", "gr.json"):
            json.loads((out / name).read_text())
        assert (out / "metrics.csv").exists()
        assert (out / "gr_rolling.csv").exists()

    def test_mcb_and_gr_populated(self, run_dir):
        _, out = run_dir
        mcb = json.loads((out / "mcb.json").read_text())
        assert mcb["rows"] == ["backward/h1", "backward/h2"]
        assert set(mcb["mean_ranks"]) == {"ols", "rw"}
        gr = json.loads((out / "gr.json").read_text())
        assert gr["baseline"] == "rw"
        assert gr["pairs"] and gr["pairs"][0]["model"] == "ols"

    def test_rerun_is_byte_identical(self, run_dir, tmp_path):
        cfg, out = run_dir
        out2 = tmp_path / "out2"
        assert invoke("backtest", "--config", str(cfg),
                      "--out", str(out2)).exit_code == 0
        for name in ("ledger.csv", "metrics.csv", "gr_rolling.csv"):
            assert (out / name).read_bytes() == (out2 / name).read_bytes()

    def test_threads_do_not_change_ledger(self, run_dir, tmp_path):
        cfg, out = run_dir
        out2 = tmp_path / "out_t4"
        assert invoke("backtest", "--config", str(cfg), "--out", str(out2),
                      "--threads", "4").exit_code == 0
        assert (out / "ledger.csv").read_bytes() == (out2 / "ledger.csv").read_bytes()


class TestConformalCommand:
    def test_requires_ledger(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(CONFIG)
        res = invoke("conformal", "--config", str(cfg),
                     "--out", str(tmp_path / "empty"))
        assert res.exit_code == 2
        err = json.loads(res.stderr.strip())
        assert "ledger" in err["message"]

    def test_outputs(self, run_dir):
        _, out = run_dir
        with open(out / "intervals.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert {r["model"] for r in rows} == {"ols", "rw"}
        assert all(float(r["lower"]) <= float(r["upper"]) for r in rows)
        summary = json.loads((out / "conformal_summary.json").read_text())
        assert summary["alpha"] == 0.5
        assert len(summary["slices"]) == 4  # (ols, rw) x (h1, h2)


class TestExplainCommand:
    def test_outputs(self, run_dir):
        _, out = run_dir
        with open(out / "importance.csv", newline="") as fh:
            imp = list(csv.DictReader(fh))
        assert len(imp) == 20  # backward design width
        with open(out / "pdp.csv", newline="") as fh:
            pdp_rows = list(csv.DictReader(fh))
        assert {r["feature"] for r in pdp_rows} == {"inflation.L1", "output_gap.L1"}
        assert (out / "ice.csv").exists() and (out / "pdp2.csv").exists()
        with open(out / "attributions.csv", newline="") as fh:
            attrs = list(csv.DictReader(fh))
        assert attrs and attrs[0]["method"] == "sampled"
        with open(out / "shapley_regression.csv", newline="") as fh:
            reg = list(csv.DictReader(fh))
        assert reg[-1]["feature"] == "intercept"
        json.loads((out / "shapley_summary.json").read_text())

    def test_unknown_model_is_config_error(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(CONFIG.replace('model = "ols"', 'model = "zzz"'))
        res = invoke("explain", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2
        assert "zzz" in json.loads(res.stderr.strip())["message"]


class TestReportCommand:
    def test_full_run_summary(self, run_dir):
        _, out = run_dir
        summary = json.loads((out / "summary.json").read_text())
        ok = [c for c in summary["cells"] if c["status"] == "ok"]
        assert len(ok) == 4  # ols x (h1,h2) + rw baseline x (h1,h2)
        assert "mcb" in summary and "conformal_summary" in summary
        text = (out / "summary.txt").read_text()
        assert "rmse=" in text
        for name in ("plot_forecast_vs_actual.csv", "plot_beeswarm.csv",
                     "plot_interval_bands.csv"):
            assert (out / name).exists()

    def test_partial_run_warns_but_exits_zero(self, tmp_path):
        cfg = tmp_path / "run.toml"
        cfg.write_text(CONFIG)
        res = invoke("report", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert res.exit_code == 0
        assert "warning" in res.stderr
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary["warnings"]


class TestErrorHandling:
    def test_missing_config_flag(self):
        res = invoke("backtest")
        assert res.exit_code == 2
        assert "--config" in json.loads(res.stderr.strip())["message"]

    def test_unknown_config_key_names_it(self, tmp_path):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(CONFIG + "\n[race.extras]\nfoo = 1\n")
        res = invoke("backtest", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2
        err = json.loads(res.stderr.strip())
        assert err["error"] == "ConfigError"
        assert "extras" in err["message"]

    def test_missing_config_file(self, tmp_path):
        res = invoke("backtest", "--config", str(tmp_path / "nope.toml"))
        assert res.exit_code == 2

    def test_missing_data_file(self, tmp_path):
        cfg = tmp_path / "run.toml"
        # point the config at a data file that does not exist
        cfg.write_text(CONFIG.replace(
            "[data]", f'[data]\npath = "{tmp_path / "nope.csv"}"'))
        res = invoke("backtest", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2

    def test_malformed_data_csv(self, tmp_path):
        data = tmp_path / "bad.csv"
        data.write_text("quarter,inflation\nnot-a-quarter,1.0\n")
        cfg = tmp_path / "run.toml"
        cfg.write_text(CONFIG.replace("[data]", f'[data]\npath = "{data}"'))
        res = invoke("backtest", "--config", str(cfg), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2
        assert json.loads(res.stderr.strip())["error"] in (
            "ParseError", "MissingColumn")
