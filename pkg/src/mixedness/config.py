"""Experiment configuration: defaults, JSON file form, and CLI-over-file precedence."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .likelihood import DEFAULT_INNER, DEFAULT_OUTER, DEFAULT_PAIRS
from .states import SCHEDULE_KINDS

COMMANDS = ("certify", "sweep", "paninski", "verify", "tails", "simulate")
FORMATS = ("csv", "json", "svg", "jsonl")
STATISTIC_CHOICES = ("all", "diag_norm", "phi", "k_stat")


class UsageError(ValueError):
    """Invalid configuration; maps to exit code 2."""


@dataclass
class ExperimentConfig:
    command: str = "certify"
    d: list[int] = field(default_factory=lambda: [16])
    eps: float = 0.5
    n: int | None = None
    trials: int = 100
    seed: int = 0
    outer: int = DEFAULT_OUTER
    pairs: int = DEFAULT_PAIRS
    inner: int = DEFAULT_INNER
    samples: int = 10_000
    schedule: str = "fixed"
    state: str = "mixed"
    statistic: str = "all"
    multipliers: list[float] = field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    out: str | None = None
    format: str = "csv"
    jobs: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if not self.d or any(int(d) < 1 for d in self.d):
            raise UsageError("--d must list positive integers")
        self.d = [int(d) for d in self.d]
        if not 0 < self.eps <= 1:
            raise UsageError("--eps must lie in (0, 1]")
        if self.n is not None and self.n < 0:
            raise UsageError("--n must be >= 0")
        for name in ("trials", "seed"):
            if getattr(self, name) < 0:
                raise UsageError(f"--{name} must be >= 0")
        for name in ("outer", "pairs", "inner", "jobs"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name} must be >= 1")
        if self.samples < 1000:
            raise UsageError("--samples must be >= 1000")
        if self.schedule not in SCHEDULE_KINDS:
            raise UsageError(f"--schedule must be one of {SCHEDULE_KINDS}")
        if self.statistic not in STATISTIC_CHOICES:
            raise UsageError(f"--statistic must be one of {STATISTIC_CHOICES}")
        if self.format not in FORMATS:
            raise UsageError(f"--format must be one of {FORMATS}")
        if any(m < 0 for m in self.multipliers):
            raise UsageError("multipliers must be >= 0")
        return self

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        return cls(**obj)


def load_config_file(path: str | Path) -> dict:
    """Raw key/value pairs from a JSON config file (I/O errors propagate)."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise UsageError("config file must hold a JSON object")
    return obj


def merge(command: str, file_values: dict, cli_values: dict) -> ExperimentConfig:
    """defaults < config file < explicit CLI flags."""
    values = dict(file_values)
    values.update({k: v for k, v in cli_values.items() if v is not None})
    values["command"] = command
    cfg = ExperimentConfig.from_json(values)
    return cfg.validate()
