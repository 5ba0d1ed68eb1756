"""Pipeline configuration: TOML file with nested sections plus ``--set`` overrides."""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ahp import CRITERIA, STATISTICS, DEFAULT_JUDGMENT, parse_judgment
from .hydro import BURN_DEPTH, MIN_AREA_CELLS, SWI_MAX, SWI_MIN
from .rating import (
    ELEVATION_SCHEME,
    HYDROLITH_SCHEME,
    LANDUSE_SCHEME,
    SLOPE_SCHEME,
    RatingScheme,
)
from .watershed import THRESHOLD_LADDER_HA

INPUT_KEYS = ("dem", "water_mask", "landuse", "hydrolith", "flooded", "dry", "normal_water")


class ConfigError(ValueError):
    pass


@dataclass
class HydroSettings:
    swi_min: float = SWI_MIN
    swi_max: float = SWI_MAX
    min_area_cells: int = MIN_AREA_CELLS
    burn_depth: float = BURN_DEPTH


@dataclass
class RoutingSettings:
    stream_threshold_cells: float = 1000
    pit_fill: bool = True


@dataclass
class DelineationSettings:
    method: str = "mfd"
    area_threshold_ha: float = 66.7


@dataclass
class ConstraintSettings:
    method: str = "maximum"
    criteria: tuple = ("Slope", "DistanceFromStreams")


@dataclass
class RatingSettings:
    slope: Any = "table"  # "table", "recompute" or [[upper, rating], ...]
    elevation: Any = "table"
    landuse: Optional[list] = None  # [[code, rating], ...]
    hydrolith: Optional[list] = None

    def numeric(self, name: str, default: RatingScheme):
        spec = getattr(self, name)
        if spec == "table":
            return default
        if spec == "recompute":
            return None
        return RatingScheme.numeric([(float(ub), r) for ub, r in spec])

    def categorical(self, name: str, default: RatingScheme) -> RatingScheme:
        spec = getattr(self, name)
        if spec is None:
            return default
        return RatingScheme.categorical({int(c): int(r) for c, r in spec})

    def schemes(self):
        return {
            "slope": self.numeric("slope", SLOPE_SCHEME),
            "elevation": self.numeric("elevation", ELEVATION_SCHEME),
            "landuse": self.categorical("landuse", LANDUSE_SCHEME),
            "hydrolith": self.categorical("hydrolith", HYDROLITH_SCHEME),
        }


@dataclass
class MatrixSettings:
    methods: tuple = ("d8", "mfd")
    statistics: tuple = STATISTICS
    d8_thresholds_ha: tuple = THRESHOLD_LADDER_HA
    mfd_thresholds_ha: tuple = (66.7,)


@dataclass
class PipelineConfig:
    inputs: dict
    output_dir: Path
    hydro: HydroSettings = field(default_factory=HydroSettings)
    routing: RoutingSettings = field(default_factory=RoutingSettings)
    delineation: DelineationSettings = field(default_factory=DelineationSettings)
    constraint: ConstraintSettings = field(default_factory=ConstraintSettings)
    judgment: tuple = DEFAULT_JUDGMENT
    rating: RatingSettings = field(default_factory=RatingSettings)
    matrix: MatrixSettings = field(default_factory=MatrixSettings)
    seedless: bool = False

    def validate(self) -> "PipelineConfig":
        missing = [k for k in INPUT_KEYS if not self.inputs.get(k)]
        if missing:
            raise ConfigError(f"missing input paths: {', '.join(missing)}")
        paths = [Path(self.inputs[k]).resolve() for k in INPUT_KEYS]
        if len(set(paths)) != len(paths):
            raise ConfigError("input paths must be distinct")
        for name in self.constraint.criteria:
            if name not in CRITERIA:
                raise ConfigError(f"unknown constrained criterion {name!r}; choose from {', '.join(CRITERIA)}")
        if self.constraint.method not in STATISTICS:
            raise ConfigError(f"constraint.method must be one of {', '.join(STATISTICS)}")
        if self.delineation.method not in ("d8", "mfd"):
            raise ConfigError("delineation.method must be 'd8' or 'mfd'")
        if not self.delineation.area_threshold_ha > 0:
            raise ConfigError("delineation.area_threshold_ha must be positive")
        if not self.hydro.swi_min < self.hydro.swi_max:
            raise ConfigError("hydro.swi_min must be below hydro.swi_max")
        if self.hydro.min_area_cells < 1 or not self.hydro.burn_depth > 0:
            raise ConfigError("hydro.min_area_cells must be >= 1 and hydro.burn_depth > 0")
        if self.routing.stream_threshold_cells < 1:
            raise ConfigError("routing.stream_threshold_cells must be >= 1")
        for m in self.matrix.methods:
            if m not in ("d8", "mfd"):
                raise ConfigError(f"matrix.methods: unknown method {m!r}")
        for s in self.matrix.statistics:
            if s not in STATISTICS:
                raise ConfigError(f"matrix.statistics: unknown statistic {s!r}")
        try:
            mat = parse_judgment(self.judgment)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"judgment.matrix: {exc}") from None
        if mat.shape != (len(CRITERIA), len(CRITERIA)):
            raise ConfigError(f"judgment.matrix must be {len(CRITERIA)}x{len(CRITERIA)}")
        try:
            self.rating.schemes()
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"rating: {exc}") from None
        return self


_SECTIONS = {
    "hydro": HydroSettings,
    "routing": RoutingSettings,
    "delineation": DelineationSettings,
    "constraint": ConstraintSettings,
    "rating": RatingSettings,
    "matrix": MatrixSettings,
}


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    raw = copy.deepcopy(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = raw
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {p!r} is not a section")
        node[parts[-1]] = _parse_value(value.strip())
    return raw


def from_dict(raw: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    raw = dict(raw)
    known = set(_SECTIONS) | {"inputs", "output", "judgment", "seedless"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
    inputs = {}
    for k, v in (raw.get("inputs") or {}).items():
        if k not in INPUT_KEYS:
            raise ConfigError(f"unknown input {k!r}")
        p = Path(v)
        inputs[k] = p if p.is_absolute() else base_dir / p
    out = Path((raw.get("output") or {}).get("dir", "out"))
    kwargs = {}
    for name, cls in _SECTIONS.items():
        section = raw.get(name) or {}
        try:
            obj = cls(**section)
        except TypeError as exc:
            raise ConfigError(f"[{name}]: {exc}") from None
        for attr in ("criteria", "methods", "statistics", "d8_thresholds_ha", "mfd_thresholds_ha"):
            if hasattr(obj, attr):
                setattr(obj, attr, tuple(getattr(obj, attr)))
        kwargs[name] = obj
    judgment = (raw.get("judgment") or {}).get("matrix", DEFAULT_JUDGMENT)
    cfg = PipelineConfig(
        inputs=inputs,
        output_dir=out if out.is_absolute() else base_dir / out,
        judgment=tuple(tuple(r) if not isinstance(r, str) else r for r in judgment),
        seedless=bool(raw.get("seedless", False)),
        **kwargs,
    )
    return cfg


def load_config(path, overrides=None) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    raw = apply_overrides(raw, overrides)
    return from_dict(raw, path.parent).validate()
