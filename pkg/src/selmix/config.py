"""Flat key=value run configuration shared by the CLI commands.

Unknown keys are rejected; missing keys take the documented defaults (the
published recipe values where one exists: s=10, omega=40, lambda_max=100,
tau=0.01, alpha=0.95, batch_size=64, cosine schedule).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil

from .data import LTSpec
from .errors import ConfigError
from .metrics import METRIC_KINDS, MetricSpec
from .trainer import TrainerConfig

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}

DEFAULTS: dict[str, object] = {
    "metric": "mean_recall",
    "omega": 40.0,
    "alpha": 0.95,
    "lambda_max": 100.0,
    "tau": 0.01,
    "head_tail_split": -1,      # -1: default split (tail = last ceil(K/10) classes)
    "s": 10.0,
    "beta_min": 0.5,
    "cycles": 50,
    "sgd_steps": 50,
    "batch_size": 64,
    "lr": 0.2,
    "lr_schedule": "cosine",
    "mode": "supervised",
    "seed": 0,
    "mask_negative": True,
    "K": 10,
    "d": 16,
    "n1": 1500,
    "rho": 100.0,
    "within_std": 0.55,
    "cluster_separation": 1.0,
}

_INT_KEYS = {"head_tail_split", "cycles", "sgd_steps", "batch_size", "seed", "K", "d", "n1"}
_FLOAT_KEYS = {
    "omega", "alpha", "lambda_max", "tau", "s", "beta_min", "lr",
    "rho", "within_std", "cluster_separation",
}
_BOOL_KEYS = {"mask_negative"}
_STR_KEYS = {"metric", "lr_schedule", "mode"}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration; see DEFAULTS for the key set."""

    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def metric_spec(self) -> MetricSpec:
        k = self.values["K"]
        split = self.values["head_tail_split"]
        head_set = None
        if split >= 0:
            if not 0 < split < k:
                raise ConfigError(f"head_tail_split must lie in (0, {k})")
            head_set = tuple(range(split))
        return MetricSpec(
            kind=self.values["metric"],
            omega=self.values["omega"],
            alpha=self.values["alpha"],
            lambda_max=self.values["lambda_max"],
            tau=self.values["tau"],
            head_set=head_set,
        )

    def trainer_config(self) -> TrainerConfig:
        return TrainerConfig(
            metric=self.metric_spec(),
            cycles=self.values["cycles"],
            sgd_steps_per_cycle=self.values["sgd_steps"],
            batch_size=self.values["batch_size"],
            lr=self.values["lr"],
            lr_schedule=self.values["lr_schedule"],
            s=self.values["s"],
            beta_min=self.values["beta_min"],
            mode=self.values["mode"],
            seed=self.values["seed"],
            mask_negative=self.values["mask_negative"],
        )

    def lt_spec(self) -> LTSpec:
        return LTSpec(
            K=self.values["K"],
            d=self.values["d"],
            N1=self.values["n1"],
            rho=self.values["rho"],
            cluster_separation=self.values["cluster_separation"],
            within_std=self.values["within_std"],
            seed=self.values["seed"],
        )

    def head_tail_sizes(self) -> tuple[int, int]:
        k = self.values["K"]
        split = self.values["head_tail_split"]
        head = split if split >= 0 else k - ceil(k / 10)
        return head, k - head


def _parse_value(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _BOOL_KEYS:
            if raw.lower() not in _BOOL:
                raise ValueError(raw)
            return _BOOL[raw.lower()]
        return raw
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for key {key!r}") from None


def parse_config_text(text: str) -> RunConfig:
    values = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    if values["metric"] not in METRIC_KINDS:
        raise ConfigError(f"unknown metric {values['metric']!r}")
    if values["lr_schedule"] not in ("constant", "cosine"):
        raise ConfigError("lr_schedule must be 'constant' or 'cosine'")
    if values["mode"] not in ("supervised", "ssl"):
        raise ConfigError("mode must be 'supervised' or 'ssl'")
    return RunConfig(values)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
