import csv
import io
import json
import math

import numpy as np
import pytest
import yaml
from scipy import stats

from antihmc import experiment as ex
from antihmc.rng import child_seed


def tiny_config(**kw):
    raw = {
        "dataset": {"kind": "synthetic", "name": "tiny", "synthetic": {"n": 80, "seed": 3, "params": {"weights": [0.2, 1.0, -1.0]}}},
        "model": {"kind": "blr"},
        "algorithms": ["hmc", "a-hmc"],
        "sampler": {"n_samples": 64, "n_burnin": 16, "trajectory_length": 5},
        "overrides": {"rmhmc": {"trajectory_length": 2}},
        "n_repeats": 2,
        "seed": 5,
    }
    raw.update(kw)
    return ex.config_from_dict(raw)


# -------------------------------------------------------------- synthetic


def test_pure_diffusion_variance():
    r = ex.generate_synthetic("jump_diffusion", {"lambda": 0.0, "sigma": 0.2, "tau": 0.5}, 100_000, seed=1)["returns"]
    assert r.var() == pytest.approx(0.04 * 0.5, rel=0.05)


def test_jumps_add_kurtosis():
    params = {"lambda": 0.1, "sigma": 0.01, "mu_jump": 0.0, "sigma_jump": 0.1}
    r = ex.generate_synthetic("jump_diffusion", params, 100_000, seed=2)["returns"]
    assert stats.kurtosis(r) > 0


def test_jump_diffusion_mean_matches_drift():
    params = {"mu": 0.1, "sigma": 0.2, "lambda": 0.5, "mu_jump": -0.05, "sigma_jump": 0.1}
    r = ex.generate_synthetic("jump_diffusion", params, 100_000, seed=4)["returns"]
    assert r.mean() == pytest.approx(0.1 - 0.02 + 0.5 * -0.05, abs=0.003)


def test_zero_weights_give_balanced_labels():
    out = ex.generate_synthetic("blr", {"weights": [0.0, 0.0, 0.0]}, 10_000, seed=3)
    assert out["y"].mean() == pytest.approx(0.5, abs=0.02)
    assert out["X"].shape == (10_000, 2)


@pytest.mark.parametrize(
    "model, params",
    [
        ("jump_diffusion", {"sigma": 0.0}),
        ("jump_diffusion", {"lambda": -1.0}),
        ("jump_diffusion", {"tau": 0.0}),
        ("jump_diffusion", {"volatility": 1.0}),
        ("jump_diffusion", {"s0": 0.0}),
        ("blr", {"weights": [1.0]}),
        ("blr", {"n_features": 0}),
    ],
)
def test_invalid_synthetic_parameters(model, params):
    with pytest.raises(ValueError):
        ex.generate_synthetic(model, params, 10)


def test_prices_follow_returns():
    out = ex.generate_synthetic("jump_diffusion", {"s0": 50.0}, 30, seed=2)
    assert out["prices"][0] == 50.0
    np.testing.assert_allclose(np.diff(np.log(out["prices"])), out["returns"], atol=1e-12)


def test_runaway_price_path_not_written(tmp_path):
    out = ex.generate_synthetic("jump_diffusion", {"mu": -5.0, "sigma": 0.1}, 500, seed=1)
    with pytest.raises(ValueError, match="floating-point range"):
        ex.write_synthetic(out, tmp_path / "p.csv")


def test_synthetic_is_seeded():
    a = ex.generate_synthetic("jump_diffusion", None, 50, seed=9)["prices"]
    b = ex.generate_synthetic("jump_diffusion", None, 50, seed=9)["prices"]
    np.testing.assert_array_equal(a, b)


def test_write_synthetic_files_load_back(tmp_path):
    from antihmc.data import load_classification_csv, load_price_csv

    jd = ex.generate_synthetic("jump_diffusion", None, 20, seed=1)
    np.testing.assert_array_equal(load_price_csv(ex.write_synthetic(jd, tmp_path / "p.csv")).prices, jd["prices"])
    blr = ex.generate_synthetic("blr", {"n_features": 3}, 20, seed=1)
    back = load_classification_csv(ex.write_synthetic(blr, tmp_path / "c.csv"))
    np.testing.assert_array_equal(back.X, blr["X"])
    np.testing.assert_array_equal(back.y, blr["y"])


# ----------------------------------------------------------------- config


def test_defaults_follow_protocol():
    cfg = tiny_config(sampler={}, algorithms=["hmc", "a-rmhmc"])
    assert ex.sampler_settings(cfg, "hmc")["n_samples"] == 2000
    assert ex.sampler_settings(cfg, "hmc")["n_burnin"] == 500
    assert ex.sampler_settings(cfg, "hmc")["trajectory_length"] == 200
    assert ex.sampler_settings(cfg, "a-rmhmc")["trajectory_length"] == 2  # family override
    jd = ex.config_from_dict({"dataset": {"kind": "returns", "path": "x.csv"}, "model": {"kind": "jump_diffusion"}, "algorithms": ["rmhmc"]})
    s = ex.sampler_settings(jd, "rmhmc")
    assert (s["n_samples"], s["n_burnin"], s["trajectory_length"]) == (500, 100, 6)
    assert jd.n_repeats == 10


def test_algorithm_override_beats_family():
    cfg = tiny_config(overrides={"hmc": {"step_size": 0.5}, "a-hmc": {"step_size": 0.25}})
    assert ex.sampler_settings(cfg, "hmc")["step_size"] == 0.5
    assert ex.sampler_settings(cfg, "a-hmc")["step_size"] == 0.25


@pytest.mark.parametrize(
    "patch, message",
    [
        ({"model": {"kind": "svm"}}, "model.kind"),
        ({"algorithms": ["nuts"]}, "unknown algorithms"),
        ({"algorithms": ["hmc", "hmc"]}, "repeat"),
        ({"sampler": {"n_sample": 10}}, "unknown keys"),
        ({"sampler": {"n_samples": 0}}, "invalid sampler"),
        ({"overrides": {"nuts": {}}}, "unknown algorithm"),
        ({"n_repeats": 0}, "at least 1"),
        ({"format": "xml"}, "format"),
        ({"dataset": {"kind": "returns", "path": "p.csv"}}, "classification"),
        ({"extra": 1}, "unknown config keys"),
    ],
)
def test_config_errors(patch, message):
    with pytest.raises(ex.ConfigError, match=message):
        tiny_config(**patch)


def test_load_config_yaml(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(yaml.safe_dump({"dataset": {"kind": "classification", "path": "d.csv"}, "model": {"kind": "blr"}, "algorithms": ["hmc"]}))
    cfg = ex.load_config(path)
    assert cfg.base_dir == str(tmp_path)
    assert cfg.dataset_name == "d"
    with pytest.raises(ex.ConfigError, match="not found"):
        ex.load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("dataset: [unclosed")
    with pytest.raises(ex.ConfigError, match="parse"):
        ex.load_config(bad)


def test_shipped_configs_validate():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.yaml"))
    assert files
    for path in files:
        ex.load_config(path)


# ----------------------------------------------------------------- running


def test_child_seeds_are_distinct():
    seen = set()
    for alg in ex.ALL_ALGORITHMS:
        for r in range(10):
            seen.add(tuple(child_seed(0, alg, r).generate_state(4)))
    assert len(seen) == 60


def test_run_experiment_report_shape():
    report = ex.run_experiment(tiny_config())
    assert report["n_repeats"] == 2 and report["workers"] == 1
    hmc, anti = report["algorithms"]
    assert [r["repeat"] for r in hmc["runs"]] == [0, 1]
    for entry in report["algorithms"]:
        runs = entry["runs"]
        assert all(r["status"] == "ok" for r in runs)
        assert entry["mean"]["mess"] == sum(r["mess"] for r in runs) / 2
        assert entry["mean"]["acceptance"] == sum(r["acceptance"] for r in runs) / 2
        for r in runs:
            assert r["seconds"] == round(r["seconds"], 3)
            assert r["mess_per_s"] == pytest.approx(r["mess"] / r["seconds"])
    assert "rho" in anti["runs"][0] and anti["runs"][0]["mess"] == pytest.approx(
        2 * anti["runs"][0]["mess_original"] / (1 + anti["runs"][0]["rho"])
    )
    assert hmc["mean"]["rho"] is None


def test_failed_cell_is_recorded_not_raised(monkeypatch):
    real = ex.adapt_then_sample

    def flaky(algorithm, model, cfg, *a, **k):
        if algorithm == "hmc":
            raise FloatingPointError("boom")
        return real(algorithm, model, cfg, *a, **k)

    monkeypatch.setattr(ex, "adapt_then_sample", flaky)
    report = ex.run_experiment(tiny_config(n_repeats=1))
    assert report["algorithms"][0]["runs"][0]["status"] == "failed"
    assert "boom" in report["algorithms"][0]["runs"][0]["error"]
    assert report["algorithms"][1]["runs"][0]["status"] == "ok"
    assert report["algorithms"][0]["mean"]["mess"] is None
    assert ex.has_failures(report)


def test_infinite_mess_is_flagged(monkeypatch):
    monkeypatch.setattr(ex, "antithetic_mess", lambda m, rho: math.inf)
    report = ex.run_experiment(tiny_config(n_repeats=1, algorithms=["a-hmc"]))
    cell = report["algorithms"][0]["runs"][0]
    assert cell["mess"] is None and cell["mess_infinite"]
    assert report["algorithms"][0]["mean"]["mess_infinite"]
    json.loads(ex.report_to_json(report))
    assert ",inf," in ex.report_to_csv(report)


def test_determinism_and_canonical_form():
    cfg = tiny_config()
    a = ex.emit_report(ex.run_experiment(cfg), fmt="json", canonical=True)
    b = ex.emit_report(ex.run_experiment(cfg), fmt="json", canonical=True)
    assert a == b
    assert '"seconds"' not in a and '"workers"' not in a


# ----------------------------------------------------------------- reports


def test_empty_algorithm_list_gives_zero_rows():
    report = ex.run_experiment(tiny_config(algorithms=[]))
    rows = list(csv.reader(io.StringIO(ex.report_to_csv(report))))
    assert rows == [list(ex.CSV_COLUMNS)]


def test_csv_columns_and_rounding():
    report = ex.run_experiment(tiny_config(n_repeats=1))
    rows = list(csv.DictReader(io.StringIO(ex.report_to_csv(report))))
    assert list(rows[0]) == ["dataset", "algorithm", "mESS", "t_seconds", "mESS_per_s", "acceptance", "rho"]
    assert rows[0]["dataset"] == "tiny" and rows[0]["algorithm"] == "hmc"
    assert rows[0]["mESS"].isdigit()
    assert len(rows[0]["mESS_per_s"].split(".")[1]) == 2
    assert rows[0]["rho"] == "" and rows[1]["rho"] != ""


def test_json_round_trip_keeps_15_digits():
    report = ex.run_experiment(tiny_config(n_repeats=1))
    back = json.loads(ex.report_to_json(report))
    for entry, again in zip(report["algorithms"], back["algorithms"]):
        for key in ("mess", "acceptance", "step_size"):
            a, b = entry["runs"][0][key], again["runs"][0][key]
            assert float(f"{a:.15g}") == float(f"{b:.15g}")


def test_emit_report_unwritable(tmp_path):
    report = ex.run_experiment(tiny_config(algorithms=[]))
    with pytest.raises(OSError):
        ex.emit_report(report, tmp_path / "missing" / "r.json")
    with pytest.raises(ValueError):
        ex.emit_report(report, fmt="xml")
