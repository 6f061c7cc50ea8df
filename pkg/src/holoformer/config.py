"""Run configuration: JSON schema, defaults, strict validation.

A run config is a JSON object with optional sections; unknown keys anywhere
are errors (silent typos invalidate experiments).  Every value has a
task-appropriate default, so the CLI works without a config file.  Seeds are
always explicit: a run's datasets derive from the run seed (train = 2*seed,
test = 2*seed + 1), so ablation variants trained under the same seed see
identical data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .model import ModelConfig
from .optim import TrainSettings
from . import synthdata

TASKS = ("classification", "prediction")

MODEL_DEFAULTS = {
    "classification": {
        "d_model": 32, "heads": 2, "layers": 2, "d_ff": 64, "alpha": 1.0,
        "eps": 1e-8, "ln_eps": 1e-5, "lambda_recon": 1.0, "lambda_task": 1.0,
        "lambda_phase": 0.01, "dropout": 0.1, "magnitude_only": False,
        "use_positional": True,
    },
    "prediction": {
        "d_model": 48, "heads": 4, "layers": 2, "d_ff": 96, "alpha": 1.0,
        "eps": 1e-8, "ln_eps": 1e-5, "lambda_recon": 1.0, "lambda_task": 1.0,
        "lambda_phase": 0.0, "dropout": 0.0, "magnitude_only": False,
        "use_positional": True,
    },
}

DATA_DEFAULTS = {
    "classification": {
        "n": 4000, "seq_len": 16, "d": 4, "num_classes": 4,
        "phase_noise": 0.35, "freq_range": [0.05, 0.5], "amp_sigma": 0.3,
        "sep_scale": 2.0, "corrupt_prob": 0.2, "corrupt_boost": 2.0,
        "test_n": 1000,
    },
    "prediction": {
        "n": 2000, "t_in": 12, "t_out": 12, "d": 1, "n_phasors": 1,
        "doppler_range": [0.1, 1.0], "speed_scale": 1.0,
        "amp_range": [0.5, 1.5], "test_n": 500,
    },
}

OPTIM_DEFAULTS = {
    "classification": {
        "epochs": 30, "batch_size": 16, "lr": 1e-3, "beta1": 0.9,
        "beta2": 0.999, "eps_opt": 1e-8, "weight_decay": 1e-5,
        "schedule": "step", "step_size": 5, "gamma": 0.8,
        "patience": 5, "factor": 0.5,
    },
    "prediction": {
        "epochs": 40, "batch_size": 8, "lr": 1e-3, "beta1": 0.9,
        "beta2": 0.999, "eps_opt": 1e-8, "weight_decay": 0.0,
        "schedule": "plateau", "step_size": 5, "gamma": 0.8,
        "patience": 5, "factor": 0.5,
    },
}

ROBUSTNESS_DEFAULTS = {"noise": "sigma",
                       "grids": {"sigma": [0.0, 0.1, 0.2, 0.4],
                                 "tau": [0.0, 0.02, 0.05, 0.10]}}

VERIFY_DEFAULTS = {"trials_scale": 1.0}
GRADCHECK_DEFAULTS = {"n_seeds": 5, "tol": 1e-5, "h": 1e-5}
BENCH_DEFAULTS = {"t_grid": [64, 128, 256], "d_k": 64, "repeats": 7}


def _merge(section: str, defaults: dict, given: dict | None) -> dict:
    given = given or {}
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigurationError(
            f"unknown keys in '{section}': {sorted(unknown)}; "
            f"allowed: {sorted(defaults)}"
        )
    merged = dict(defaults)
    merged.update(given)
    return merged


@dataclass
class RunConfig:
    """Validated union of every section a command might need."""

    task: str = "classification"
    seed: int = 0
    out_dir: str = "runs/default"
    ablate: tuple = ()
    model: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    optim: dict = field(default_factory=dict)
    robustness: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    gradcheck: dict = field(default_factory=dict)
    benchmark: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        allowed = {"task", "seed", "out_dir", "ablate", "model", "data",
                   "optim", "robustness", "verify", "gradcheck", "benchmark"}
        unknown = set(raw) - allowed
        if unknown:
            raise ConfigurationError(
                f"unknown top-level config keys: {sorted(unknown)}; "
                f"allowed: {sorted(allowed)}"
            )
        task = raw.get("task", "classification")
        if task not in TASKS:
            raise ConfigurationError(f"task must be one of {TASKS}, got {task!r}")
        ablate = raw.get("ablate", [])
        if isinstance(ablate, str):
            ablate = [ablate]
        for name in ablate:
            if name not in ("phase_decay", "coherent_sum", "reconstruction"):
                raise ConfigurationError(f"unknown ablation {name!r}")
        rob_raw = dict(raw.get("robustness", {}))
        rob_grid = rob_raw.pop("grid", None)
        rob = _merge("robustness", {"noise": ROBUSTNESS_DEFAULTS["noise"]}, rob_raw)
        rob["grid"] = rob_grid
        return cls(
            task=task,
            seed=int(raw.get("seed", 0)),
            out_dir=str(raw.get("out_dir", "runs/default")),
            ablate=tuple(ablate),
            model=_merge("model", MODEL_DEFAULTS[task], raw.get("model")),
            data=_merge("data", DATA_DEFAULTS[task], raw.get("data")),
            optim=_merge("optim", OPTIM_DEFAULTS[task], raw.get("optim")),
            robustness=rob,
            verify=_merge("verify", VERIFY_DEFAULTS, raw.get("verify")),
            gradcheck=_merge("gradcheck", GRADCHECK_DEFAULTS, raw.get("gradcheck")),
            benchmark=_merge("benchmark", BENCH_DEFAULTS, raw.get("benchmark")),
        )

    @classmethod
    def load(cls, path: str | None, overrides: dict | None = None) -> "RunConfig":
        raw = {}
        if path is not None:
            try:
                raw = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(raw, dict):
                raise ConfigurationError(f"config {path} must hold a JSON object")
        for key, val in (overrides or {}).items():
            if val is not None:
                raw[key] = val
        return cls.from_dict(raw)

    # -- derived objects ------------------------------------------------
    def model_config(self) -> ModelConfig:
        d = self.data
        if self.task == "classification":
            shape = {"seq_len": d["seq_len"], "d_in": d["d"],
                     "task_kind": "classification", "num_classes": d["num_classes"]}
        else:
            shape = {"seq_len": d["t_in"], "d_in": d["d"],
                     "task_kind": "regression", "d_out": d["d"],
                     "horizon": d["t_out"]}
        cfg = ModelConfig(**shape, **self.model)
        if self.ablate:
            cfg = cfg.with_ablations(self.ablate)
        return cfg

    def train_settings(self) -> TrainSettings:
        return TrainSettings(seed=self.seed, **self.optim)

    def make_dataset(self, split: str) -> synthdata.Dataset:
        if split not in ("train", "test"):
            raise ConfigurationError(f"unknown split {split!r}")
        seed = 2 * self.seed + (0 if split == "train" else 1)
        d = self.data
        if self.task == "classification":
            n = d["n"] if split == "train" else d["test_n"]
            return synthdata.gen_phase_classification(
                n=n, seq_len=d["seq_len"], d=d["d"],
                num_classes=d["num_classes"], seed=seed,
                phase_noise=d["phase_noise"],
                freq_range=tuple(d["freq_range"]), amp_sigma=d["amp_sigma"],
                sep_scale=d["sep_scale"], corrupt_prob=d["corrupt_prob"],
                corrupt_boost=d["corrupt_boost"])
        n = d["n"] if split == "train" else d["test_n"]
        return synthdata.gen_phasor_prediction(
            n=n, t_in=d["t_in"], t_out=d["t_out"], d=d["d"],
            n_phasors=d["n_phasors"], doppler_range=tuple(d["doppler_range"]),
            seed=seed, speed_scale=d["speed_scale"],
            amp_range=tuple(d["amp_range"]))

    def robustness_grid(self) -> tuple:
        axis = self.robustness["noise"]
        if axis not in ("sigma", "tau"):
            raise ConfigurationError(f"noise axis must be sigma or tau, got {axis!r}")
        grid = self.robustness.get("grid")
        if grid is None:
            grid = ROBUSTNESS_DEFAULTS["grids"][axis]
        return axis, [float(g) for g in grid]

    def to_dict(self) -> dict:
        return {
            "task": self.task, "seed": self.seed, "out_dir": self.out_dir,
            "ablate": list(self.ablate), "model": self.model, "data": self.data,
            "optim": self.optim,
            "robustness": self.robustness, "verify": self.verify,
            "gradcheck": self.gradcheck, "benchmark": self.benchmark,
        }
