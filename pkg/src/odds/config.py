"""Strict JSON experiment configs."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .experiments import EXPERIMENTS

TOP_LEVEL = ("experiment", "params", "seed", "replicates", "output", "format")
FORMATS = ("csv", "jsonl")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict
    seed: int = 0
    replicates: int = 1
    output: str = "-"
    format: str = "csv"

    def canonical(self) -> str:
        """Stable JSON of everything that determines the report body."""
        return json.dumps({"experiment": self.experiment, "params": self.params, "seed": self.seed,
                           "replicates": self.replicates, "format": self.format},
                          sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        data = {k: getattr(self, k) for k in TOP_LEVEL}
        data.update({k: v for k, v in changes.items() if v is not None})
        return build_config(data)


def _load(source: Any) -> dict:
    if isinstance(source, dict):
        return source
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {source}: {exc.strerror}") from None
    else:
        text = source
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data


def _int(name: str, value, lo: int, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer")
    if value < lo or (hi is not None and value > hi):
        raise ConfigError(f"{name} must be in [{lo}, {hi}]" if hi is not None else f"{name} must be ≥ {lo}")
    return value


def build_config(data: dict) -> ExperimentConfig:
    for key in data:
        if key not in TOP_LEVEL:
            raise ConfigError(f"unknown key {key!r}")
    if "experiment" not in data:
        raise ConfigError("missing key 'experiment'")
    name = data["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)} (got {name!r})")
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be a JSON object")
    try:
        params = EXPERIMENTS[name].validate(params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    seed = _int("seed", data.get("seed", 0), 0, 2**64 - 1)
    replicates = _int("replicates", data.get("replicates", 1), 1)
    output = data.get("output", "-")
    if not isinstance(output, str) or not output:
        raise ConfigError("output must be a nonempty path")
    fmt = data.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
    return ExperimentConfig(name, params, seed, replicates, output, fmt)


def parse_config(source) -> ExperimentConfig:
    """Validate a config given as a path, JSON text or dict; defaults are filled in."""
    return build_config(_load(source))
