"""Repeated, seeded sampler runs over one dataset, with Table-style reports."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.special import expit

from . import data as data_mod
from .diagnostics import antithetic_mess, multivariate_ess, normalized_ess
from .integrators import FixedPointConfig
from .models import ClassificationData, JumpDiffusion, LogisticRegression, ReturnSeries
from .models.softabs import DEFAULT_SOFTABS_ALPHA
from .rng import child_seed
from .samplers import ALL_ALGORITHMS, ANTITHETIC, CoupledOutput, SamplerConfig, adapt_then_sample

MODEL_KINDS = ("jump_diffusion", "blr")
DATASET_KINDS = ("returns", "classification", "synthetic")
FORMATS = ("json", "csv")

CSV_COLUMNS = ("dataset", "algorithm", "mESS", "t_seconds", "mESS_per_s", "acceptance", "rho")
TIMING_KEYS = frozenset({"seconds", "mess_per_s", "workers"})

# Protocol defaults. Sample counts per model; trajectory length per family.
PROTOCOL = {
    "jump_diffusion": {"n_samples": 500, "n_burnin": 100},
    "blr": {"n_samples": 2000, "n_burnin": 500},
}
TRAJECTORY_LENGTH = {"hmc": 200, "qihmc": 200, "rmhmc": 6}
N_REPEATS = 10
ADAPT_TARGET = 0.8

SYNTH_DEFAULTS = {
    "jump_diffusion": {
        "mu": 0.0005,
        "sigma": 0.01,
        "lambda": 0.05,
        "mu_jump": -0.01,
        "sigma_jump": 0.03,
        "tau": 1.0,
        "s0": 100.0,
    },
    "blr": {"n_features": 5, "weights": None, "weight_scale": 1.0},
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def family(algorithm: str) -> str:
    return ANTITHETIC.get(algorithm, algorithm)


# --------------------------------------------------------------------------
# synthetic data


def simulate_jump_diffusion(n, mu, sigma, lam, mu_jump, sigma_jump, tau=1.0, rng=None):
    """Simulate n log returns of the Merton process on a grid of step tau.

    Each increment is (mu - sigma^2/2) tau + sigma sqrt(tau) Z plus a
    Poisson(lam tau) number of N(mu_jump, sigma_jump^2) jumps.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if sigma_jump < 0:
        raise ValueError(f"sigma_jump must be non-negative, got {sigma_jump}")
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    rng = np.random.default_rng(rng)
    diffusion = (mu - 0.5 * sigma ** 2) * tau + sigma * math.sqrt(tau) * rng.standard_normal(n)
    counts = rng.poisson(lam * tau, size=n)
    # sum of k iid normals is N(k mu_j, k sigma_j^2)
    jumps = counts * mu_jump + np.sqrt(counts) * sigma_jump * rng.standard_normal(n)
    return diffusion + jumps


def simulate_logistic(n, weights, rng=None):
    """Draw standard-normal features and Bernoulli(sigmoid(b + x.w)) labels.

    ``weights[0]`` is the intercept.
    """
    weights = np.asarray(weights, dtype=float)
    rng = np.random.default_rng(rng)
    X = rng.standard_normal((n, weights.size - 1))
    y = (rng.random(n) < expit(weights[0] + X @ weights[1:])).astype(float)
    return X, y


def generate_synthetic(model: str, params=None, n=1000, seed=0):
    """Return a synthetic dataset as a dict of arrays.

    Jump diffusion: ``{"returns": ..., "prices": ...}`` with n log returns
    and the n + 1 prices they generate from ``s0``.
    Logistic regression: ``{"X": ..., "y": ..., "weights": ...}``.
    """
    if model not in SYNTH_DEFAULTS:
        raise ValueError(f"unknown synthetic model {model!r}; expected one of {tuple(SYNTH_DEFAULTS)}")
    p = dict(SYNTH_DEFAULTS[model])
    unknown = set(params or {}) - set(p)
    if unknown:
        raise ValueError(f"unknown {model} parameters: {sorted(unknown)}")
    p.update(params or {})
    rng = np.random.default_rng(seed)
    if model == "jump_diffusion":
        if not float(p["s0"]) > 0:
            raise ValueError(f"s0 must be positive, got {p['s0']}")
        returns = simulate_jump_diffusion(
            int(n), float(p["mu"]), float(p["sigma"]), float(p["lambda"]),
            float(p["mu_jump"]), float(p["sigma_jump"]), float(p["tau"]), rng,
        )
        with np.errstate(over="ignore", under="ignore"):
            prices = float(p["s0"]) * np.exp(np.concatenate([[0.0], np.cumsum(returns)]))
        return {"returns": returns, "prices": prices}
    if p["weights"] is None:
        if int(p["n_features"]) < 1:
            raise ValueError("n_features must be at least 1")
        weights = float(p["weight_scale"]) * rng.standard_normal(int(p["n_features"]) + 1)
    else:
        weights = np.asarray(p["weights"], dtype=float)
        if weights.ndim != 1 or weights.size < 2:
            raise ValueError("weights must list an intercept and at least one coefficient")
    X, y = simulate_logistic(int(n), weights, rng)
    return {"X": X, "y": y, "weights": weights}


def write_synthetic(dataset: dict, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if "prices" in dataset:
            prices = dataset["prices"]
            if not np.all(np.isfinite(prices) & (prices > 0)):
                raise ValueError("simulated price path left floating-point range; shorten it or lower the drift")
            writer.writerow(["price"])
            for v in dataset["prices"]:
                writer.writerow([repr(float(v))])
        else:
            X, y = dataset["X"], dataset["y"]
            writer.writerow([f"x{j + 1}" for j in range(X.shape[1])] + ["label"])
            for row, label in zip(X, y):
                writer.writerow([repr(float(v)) for v in row] + [int(label)])
    return path


# --------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Validated experiment description; see ``README.md`` for the file schema."""

    dataset: dict
    model: dict
    algorithms: list
    sampler: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    n_repeats: int = N_REPEATS
    seed: int = 0
    workers: int = 1
    output: str | None = None
    format: str = "json"
    base_dir: str = "."

    @property
    def model_kind(self) -> str:
        return self.model["kind"]

    @property
    def dataset_name(self) -> str:
        ds = self.dataset
        if ds.get("name"):
            return str(ds["name"])
        if ds["kind"] == "synthetic":
            return f"synthetic-{ds['synthetic'].get('model', self.model_kind)}"
        return Path(ds["path"]).stem


_SAMPLER_KEYS = {
    "n_samples", "n_burnin", "step_size", "trajectory_length", "adapt_target",
    "init_scale", "qihmc_log_scale", "softabs_alpha", "fixed_point_tolerance",
    "fixed_point_max_iterations",
}


def config_from_dict(raw: dict, base_dir=".") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = {"dataset", "model", "algorithms", "sampler", "overrides", "n_repeats", "seed",
             "workers", "output", "format"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    try:
        dataset = dict(raw["dataset"])
        model = dict(raw["model"])
    except (KeyError, TypeError) as exc:
        raise ConfigError("config needs 'dataset' and 'model' sections") from exc
    if model.get("kind") not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {model.get('kind')!r}")
    if model.get("drift_convention", "ito") not in ("ito", "raw"):
        raise ConfigError("model.drift_convention must be 'ito' or 'raw'")
    if dataset.get("kind") not in DATASET_KINDS:
        raise ConfigError(f"dataset.kind must be one of {DATASET_KINDS}, got {dataset.get('kind')!r}")
    expected = {"jump_diffusion": ("returns",), "blr": ("classification",)}[model["kind"]]
    if dataset["kind"] == "synthetic":
        synth = dataset.get("synthetic")
        if not isinstance(synth, dict):
            raise ConfigError("synthetic datasets need a 'synthetic' mapping")
        if synth.get("model", model["kind"]) != model["kind"]:
            raise ConfigError("synthetic.model must match model.kind")
    elif dataset["kind"] not in expected:
        raise ConfigError(f"model {model['kind']!r} needs a {expected[0]!r} dataset")
    elif not dataset.get("path"):
        raise ConfigError("dataset.path is required for file datasets")

    algorithms = list(raw.get("algorithms", []))
    bad = [a for a in algorithms if a not in ALL_ALGORITHMS]
    if bad:
        raise ConfigError(f"unknown algorithms {bad}; choose from {ALL_ALGORITHMS}")
    if len(set(algorithms)) != len(algorithms):
        raise ConfigError("algorithms must not repeat")

    sampler = dict(raw.get("sampler") or {})
    overrides = {k: dict(v) for k, v in (raw.get("overrides") or {}).items()}
    for scope, section in [("sampler", sampler)] + [(f"overrides.{k}", v) for k, v in overrides.items()]:
        extra = set(section) - _SAMPLER_KEYS
        if extra:
            raise ConfigError(f"unknown keys in {scope}: {sorted(extra)}")
    for k in overrides:
        if k not in ALL_ALGORITHMS:
            raise ConfigError(f"override for unknown algorithm {k!r}")

    fmt = raw.get("format", "json")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    try:
        n_repeats = int(raw.get("n_repeats", N_REPEATS))
        seed = int(raw.get("seed", 0))
        workers = int(raw.get("workers", 1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad integer setting: {exc}") from exc
    if n_repeats < 1 or workers < 1:
        raise ConfigError("n_repeats and workers must be at least 1")
    cfg = ExperimentConfig(
        dataset=dataset, model=model, algorithms=algorithms, sampler=sampler,
        overrides=overrides, n_repeats=n_repeats, seed=seed, workers=workers,
        output=raw.get("output"), format=fmt, base_dir=str(base_dir),
    )
    for algorithm in algorithms:
        try:
            sampler_config(cfg, algorithm, seed=0)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid sampler settings for {algorithm}: {exc}") from exc
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def sampler_settings(cfg: ExperimentConfig, algorithm: str) -> dict:
    """Effective sampler settings for one algorithm, defaults filled in."""
    fam = family(algorithm)
    settings = {
        **PROTOCOL[cfg.model_kind],
        "step_size": 0.1,
        "trajectory_length": TRAJECTORY_LENGTH[fam],
        "adapt_target": ADAPT_TARGET,
        "init_scale": 0.1,
        "qihmc_log_scale": 1.0,
        "softabs_alpha": float(cfg.model.get("softabs_alpha", DEFAULT_SOFTABS_ALPHA)),
        "fixed_point_tolerance": 1e-6,
        "fixed_point_max_iterations": 10,
    }
    settings.update(cfg.sampler)
    settings.update(cfg.overrides.get(fam, {}))
    if algorithm != fam:
        settings.update(cfg.overrides.get(algorithm, {}))
    return settings


def sampler_config(cfg: ExperimentConfig, algorithm: str, seed) -> SamplerConfig:
    s = sampler_settings(cfg, algorithm)
    return SamplerConfig(
        n_samples=int(s["n_samples"]),
        n_burnin=int(s["n_burnin"]),
        step_size=float(s["step_size"]),
        trajectory_length=int(s["trajectory_length"]),
        adapt_target=float(s["adapt_target"]),
        adapt_during_burnin=True,
        qihmc_log_scale=float(s["qihmc_log_scale"]),
        softabs_alpha=float(s["softabs_alpha"]),
        fixed_point=FixedPointConfig(
            float(s["fixed_point_tolerance"]), int(s["fixed_point_max_iterations"])
        ),
        init_scale=float(s["init_scale"]),
        seed=seed,
    )


# --------------------------------------------------------------------------
# model construction


def _resolve_path(cfg, path):
    p = Path(path)
    return p if p.is_absolute() else Path(cfg.base_dir) / p


def build_model(cfg: ExperimentConfig):
    """Load or synthesize the dataset and wrap it in the configured model."""
    ds = cfg.dataset
    prior_scale = float(cfg.model.get("prior_scale", 1.0))
    if ds["kind"] == "synthetic":
        synth = ds["synthetic"]
        raw = generate_synthetic(
            cfg.model_kind, synth.get("params"), int(synth.get("n", 1000)), int(synth.get("seed", 0))
        )
        if cfg.model_kind == "jump_diffusion":
            tau = float((synth.get("params") or {}).get("tau", 1.0))
            series = ReturnSeries(raw["returns"], tau=tau)
        else:
            clean = ClassificationData(raw["X"], raw["y"])
    elif ds["kind"] == "returns":
        prices = data_mod.load_price_csv(_resolve_path(cfg, ds["path"]), ds.get("column"))
        series = data_mod.to_log_returns(prices, tau=float(ds.get("tau", 1.0)))
    else:
        clean = data_mod.load_classification_csv(
            _resolve_path(cfg, ds["path"]), ds.get("label_column", -1), ds.get("label_map")
        )
    if cfg.model_kind == "jump_diffusion":
        return JumpDiffusion(
            series, prior_scale=prior_scale, drift=cfg.model.get("drift_convention", "ito")
        )
    data = data_mod.standardize_and_bias(clean, ddof=int(ds.get("standardize_ddof", 0)))
    return LogisticRegression(data, prior_scale=prior_scale)


def dataset_summary(model) -> dict:
    if isinstance(model, JumpDiffusion):
        return {"n_obs": len(model.series), "dim": model.dim, "tau": model.series.tau}
    return {"n_obs": model.data.n, "dim": model.dim}


# --------------------------------------------------------------------------
# running


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def run_cell(model, cfg: ExperimentConfig, algorithm: str, repeat: int) -> dict:
    """One algorithm x repeat cell; failures are captured, not raised."""
    seed = child_seed(cfg.seed, algorithm, repeat)
    cell = {"repeat": repeat, "status": "ok"}
    try:
        out = adapt_then_sample(algorithm, model, sampler_config(cfg, algorithm, seed))
        if isinstance(out, CoupledOutput):
            chain, rho = out.chain_x, out.rho
            m_orig = multivariate_ess(chain.samples).m_ess
            m_ess = antithetic_mess(m_orig, rho)
            cell["mess_original"] = m_orig
            cell["rho"] = _finite_or_none(rho)
            cell["divergences_y"] = out.chain_y.divergences
            cell["acceptance_y"] = out.chain_y.acceptance_rate
        else:
            chain = out
            m_ess = multivariate_ess(chain.samples).m_ess
        # millisecond resolution, floored so mESS/s stays finite
        seconds = max(round(out.seconds, 3), 0.001)
        cell["mess"] = _finite_or_none(m_ess)
        cell["mess_infinite"] = math.isinf(m_ess)
        cell["seconds"] = seconds
        cell["mess_per_s"] = _finite_or_none(normalized_ess(m_ess, seconds))
        cell["acceptance"] = chain.acceptance_rate
        cell["divergences"] = chain.divergences
        cell["step_size"] = chain.step_size
        if chain.fixed_point is not None:
            cell["fixed_point_unconverged"] = chain.fixed_point.unconverged
    except Exception as exc:  # noqa: BLE001 - a failed cell must not abort the run
        cell = {
            "repeat": repeat,
            "status": "failed",
            "error": f"{type(exc).__name__}: {exc}",
            "traceback": traceback.format_exc(limit=5),
        }
    return cell


def _mean(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    return float(sum(vals) / len(vals))


def summarize(runs: list) -> dict:
    """Means over successful repeats, recomputed from the stored cells."""
    ok = [r for r in runs if r["status"] == "ok"]
    summary = {"n_ok": len(ok), "n_failed": len(runs) - len(ok)}
    infinite = any(r.get("mess_infinite") for r in ok)
    for key in ("mess", "seconds", "mess_per_s", "acceptance", "rho", "step_size", "divergences"):
        summary[key] = None if (infinite and key in ("mess", "mess_per_s")) else _mean(r.get(key) for r in ok)
    summary["mess_infinite"] = infinite
    return summary


_WORKER_MODELS = {}


def _pool_task(args):
    cfg_dict, algorithm, repeat = args
    cfg = ExperimentConfig(**cfg_dict)
    # each worker builds the model once per distinct config
    key = json.dumps(cfg_dict, sort_keys=True, default=str)
    if key not in _WORKER_MODELS:
        _WORKER_MODELS.clear()
        _WORKER_MODELS[key] = build_model(cfg)
    return run_cell(_WORKER_MODELS[key], cfg, algorithm, repeat)


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> dict:
    """Run every algorithm x repeat cell and assemble the report."""
    workers = cfg.workers if workers is None else int(workers)
    model = build_model(cfg)
    tasks = [(a, r) for a in cfg.algorithms for r in range(cfg.n_repeats)]
    if workers <= 1 or len(tasks) <= 1:
        cells = [run_cell(model, cfg, a, r) for a, r in tasks]
    else:
        cfg_dict = copy.deepcopy(cfg.__dict__)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_pool_task, [(cfg_dict, a, r) for a, r in tasks]))
    by_alg = {a: [] for a in cfg.algorithms}
    for (a, _), cell in zip(tasks, cells):
        by_alg[a].append(cell)
    report = {
        "dataset": {"name": cfg.dataset_name, "kind": cfg.dataset["kind"], **dataset_summary(model)},
        "model": {
            "kind": cfg.model_kind,
            "prior_scale": float(cfg.model.get("prior_scale", 1.0)),
            **({"drift_convention": cfg.model.get("drift_convention", "ito")}
               if cfg.model_kind == "jump_diffusion" else {}),
        },
        "master_seed": cfg.seed,
        "n_repeats": cfg.n_repeats,
        "workers": workers,
        "algorithms": [
            {
                "algorithm": a,
                "sampler": sampler_settings(cfg, a),
                "runs": by_alg[a],
                "mean": summarize(by_alg[a]),
            }
            for a in cfg.algorithms
        ],
    }
    return report


def has_failures(report: dict) -> bool:
    return any(r["status"] != "ok" for a in report["algorithms"] for r in a["runs"])


# --------------------------------------------------------------------------
# reports


def canonicalize(report):
    """Drop wall-clock-dependent fields so reports compare byte for byte."""
    if isinstance(report, dict):
        return {k: canonicalize(v) for k, v in report.items() if k not in TIMING_KEYS}
    if isinstance(report, list):
        return [canonicalize(v) for v in report]
    return report


def report_to_json(report: dict, canonical=False) -> str:
    body = canonicalize(report) if canonical else report
    return json.dumps(body, indent=2, allow_nan=False) + "\n"


def _fmt(value, digits):
    if value is None:
        return ""
    if digits == 0:
        return str(int(round(value)))
    return f"{value:.{digits}f}"


def report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    name = report["dataset"]["name"]
    for entry in report["algorithms"]:
        mean = entry["mean"]
        mess = "inf" if mean.get("mess_infinite") else _fmt(mean["mess"], 0)
        per_s = "inf" if mean.get("mess_infinite") else _fmt(mean["mess_per_s"], 2)
        writer.writerow([
            name, entry["algorithm"], mess, _fmt(mean["seconds"], 3), per_s,
            _fmt(mean["acceptance"], 4), _fmt(mean["rho"], 4),
        ])
    return buf.getvalue()


def emit_report(report: dict, path=None, fmt="json", canonical=False) -> str:
    """Serialize ``report`` and write it to ``path`` when given."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    text = report_to_json(report, canonical) if fmt == "json" else report_to_csv(report)
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text
