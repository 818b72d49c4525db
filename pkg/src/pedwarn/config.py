"""Run configuration: every tunable of the pipeline in one JSON document."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Union

from .conflict import ConflictConfig
from .ego_state import EgoNoise
from .prediction import PredictionConfig
from .route import RouteConfig
from .scenario import CameraModel
from .tracking import TrackingConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    initial_heading: float = 0.0
    camera: CameraModel = field(default_factory=CameraModel)
    ego: EgoNoise = field(default_factory=EgoNoise)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    prediction: PredictionConfig = field(default_factory=PredictionConfig)
    route: RouteConfig = field(default_factory=RouteConfig)
    conflict: ConflictConfig = field(default_factory=ConflictConfig)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["route"]["destination"] = list(self.route.destination)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return _build(cls, d, "")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def override(self, dotted: str, value: Any) -> None:
        """Set ``section.key`` (or a top-level key) in place."""
        parts = dotted.split(".")
        target = self
        for p in parts[:-1]:
            if not hasattr(target, p) or not is_dataclass(getattr(target, p)):
                raise ConfigError(f"unknown config section {p!r} in {dotted!r}")
            target = getattr(target, p)
        key = parts[-1]
        names = {f.name: f for f in fields(target)}
        if key not in names:
            raise ConfigError(f"unknown config key {dotted!r}")
        current = getattr(target, key)
        if isinstance(current, bool):
            value = value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
        elif isinstance(current, int) and not isinstance(value, bool):
            value = int(value)
        elif isinstance(current, float):
            value = float(value)
        elif isinstance(current, tuple):
            value = tuple(value)
        setattr(target, key, value)


def _build(cls, data: dict, prefix: str):
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object for {prefix or 'config'}")
    kwargs = {}
    known = {f.name: f for f in fields(cls)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config key {prefix + key!r}")
        default = known[key].default_factory() if callable(known[key].default_factory) else known[key].default
        if is_dataclass(default):
            kwargs[key] = _build(type(default), value, f"{prefix}{key}.")
        elif isinstance(default, tuple):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)
