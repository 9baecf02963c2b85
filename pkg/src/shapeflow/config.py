"""Run configuration loaded from a strict JSON file.

Unknown keys anywhere in the document are rejected. Stage seeds derive
from the single global ``seed`` by fixed offsets so a stage rerun in
isolation draws the same random numbers as it did inside the pipeline.
"""

from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Optional

from .calibration import CalibrationParams, CorruptionParams
from .errors import ConfigError
from .propagation import PropagationOptions
from .synth import SceneSpec, rotating_square, translating_disk, two_objects

SYNTH_SEED_OFFSET = 0
CORRUPTION_SEED_OFFSET = 1000


@dataclass(frozen=True)
class SynthConfig:
    kind: Literal["translating-disk", "rotating-square", "two-object"] = "translating-disk"
    width: int = 64
    height: int = 64
    frame_count: int = 8
    center: Optional[tuple[float, float]] = None
    size: Optional[float] = None
    velocity: tuple[float, float] = (2.0, 0.0)
    angular_velocity_deg: float = 5.0
    speckle: int = 8
    edit_scale: Optional[float] = 1.5

    def scene_spec(self, seed: int) -> SceneSpec:
        if self.kind == "translating-disk":
            center = self.center or (self.width / 4.0, self.height / 2.0)
            return translating_disk(
                self.width, self.height, self.frame_count, center, self.size or 6.0,
                self.velocity, seed, self.speckle,
            )
        if self.kind == "rotating-square":
            center = self.center or (self.width / 2.0, self.height / 2.0)
            return rotating_square(
                self.width, self.height, self.frame_count, center, self.size or 12.0,
                math.radians(self.angular_velocity_deg), self.velocity, seed, self.speckle,
            )
        if self.kind == "two-object":
            return two_objects(self.width, self.height, self.frame_count, seed, self.speckle)
        raise ConfigError(f"synth.kind: unknown scene kind {self.kind!r}")


@dataclass(frozen=True)
class MetricsConfig:
    warping_error: bool = True
    epe: bool = True
    mask_iou: bool = True
    flow_source: Literal["input", "pseudo", "calibrated"] = "input"
    occlusion_tau: Optional[float] = None


@dataclass(frozen=True)
class CorruptionConfig:
    stroke_count_range: tuple[int, int] = (1, 4)
    rectangle_count_range: tuple[int, int] = (0, 2)
    stroke_width_range: tuple[float, float] = (4.0, 12.0)
    target_corruption_fraction: tuple[float, float] = (0.1, 0.5)

    def params(self, seed: int) -> CorruptionParams:
        return CorruptionParams(seed, **dataclasses.asdict(self))


@dataclass(frozen=True)
class RunConfig:
    output_root: str
    input_root: str = ""
    seed: int = 0
    propagation: PropagationOptions = field(default_factory=PropagationOptions)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    corruption: CorruptionConfig = field(default_factory=CorruptionConfig)
    calibrate_mode: Literal["gate", "benchmark"] = "gate"
    scfc_iou_threshold: float = 0.7
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    synth: Optional[SynthConfig] = None

    def __post_init__(self):
        if not self.output_root:
            raise ConfigError("output_root must be a non-empty path")
        if not self.input_root and self.synth is None:
            raise ConfigError("input_root must be set unless a synth section generates the input")
        if self.input_root and self.synth is not None:
            raise ConfigError("input_root and synth are mutually exclusive; synthesized input goes to <output_root>/input")
        if self.calibrate_mode not in ("gate", "benchmark"):
            raise ConfigError(f"calibrate_mode must be 'gate' or 'benchmark', got {self.calibrate_mode!r}")
        if not 0.0 <= self.scfc_iou_threshold <= 1.0:
            raise ConfigError("scfc_iou_threshold must lie in [0, 1]")
        if self.metrics.flow_source not in ("input", "pseudo", "calibrated"):
            raise ConfigError(f"metrics.flow_source: unknown value {self.metrics.flow_source!r}")

    @property
    def input_path(self) -> Path:
        if self.input_root:
            return Path(self.input_root)
        return Path(self.output_root) / "input"

    @property
    def synth_seed(self) -> int:
        return self.seed + SYNTH_SEED_OFFSET

    @property
    def corruption_params(self) -> CorruptionParams:
        return self.corruption.params(self.seed + CORRUPTION_SEED_OFFSET)


def _convert(tp, value, where):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, where)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object")
        return build(tp, value, where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)) or len(value) != len(args):
            raise ConfigError(f"{where}: expected a list of {len(args)} values")
        return tuple(_convert(a, v, f"{where}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if origin is Literal:
        if value not in args:
            raise ConfigError(f"{where}: must be one of {list(args)}, got {value!r}")
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    return value


def build(cls, data: dict, where: str = "config"):
    """Instantiate dataclass ``cls`` from ``data``, rejecting unknown keys."""
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls) if f.init]
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _convert(hints[k], v, f"{where}.{k}") for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return build(RunConfig, data)


__all__ = [
    "CorruptionConfig",
    "MetricsConfig",
    "RunConfig",
    "SynthConfig",
    "build",
    "load_config",
]
