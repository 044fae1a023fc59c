"""Run configuration: defaults, JSON file loading, and echo into output metadata."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .sampler import default_workers

FORMATS = ("csv", "json")


@dataclass
class RunConfig:
    seed: int = 0
    workers: int = field(default_factory=default_workers)
    format: str = "csv"
    limit_extended: bool = False
    limit_dps: int = 40

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be positive, got {self.workers}")
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")
        if not -(1 << 63) <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)
