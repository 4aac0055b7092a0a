"""Run configuration: every tunable of a run in one JSON file.

Sections mirror the component configs; omitted sections and fields take
their defaults.  Loading validates everything and reports all offending
fields at once.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field, replace

from .adaptation import AdaptationConfig, VelocityAdaptConfig
from .approach import ApproachConfig
from .costmap import GridSpec
from .evaluation import EvalConfig
from .sim import Settings, SimConfig


@dataclass(frozen=True)
class CostmapConfig:
    clearing_radius: float = 0.45
    inscribed_radius: float = 0.4
    decay_rate: float = 3.0

    def __post_init__(self):
        errors = []
        if self.clearing_radius < 0:
            errors.append("clearing_radius must be >= 0")
        if self.inscribed_radius < 0:
            errors.append("inscribed_radius must be >= 0")
        if not self.decay_rate > 0:
            errors.append("decay_rate must be > 0")
        if errors:
            raise ValueError("; ".join(errors))


SECTIONS = {
    "adaptation": AdaptationConfig,
    "velocity": VelocityAdaptConfig,
    "approach": ApproachConfig,
    "evaluation": EvalConfig,
    "grid": GridSpec,
    "sim": SimConfig,
    "costmap": CostmapConfig,
}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  {p}" for p in problems))


@dataclass(frozen=True)
class RunConfig:
    adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    velocity: VelocityAdaptConfig = field(default_factory=VelocityAdaptConfig)
    approach: ApproachConfig = field(default_factory=ApproachConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    grid: GridSpec = field(default_factory=GridSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    costmap: CostmapConfig = field(default_factory=CostmapConfig)

    def settings(self) -> Settings:
        # The approach width check uses the same robot width as the arrangement adaptation.
        return Settings(self.adaptation, self.velocity, replace(self.approach, robot_width=self.adaptation.s_r),
                        self.evaluation, self.sim, self.costmap.clearing_radius, self.costmap.inscribed_radius,
                        self.costmap.decay_rate)

    def to_dict(self) -> dict:
        return {name: dataclasses.asdict(getattr(self, name)) for name in SECTIONS}


def _coerce(value, default):
    """Convert JSON values to the type of the default, rejecting wrong kinds."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError("expected a boolean")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise TypeError("expected an integer")
        return int(value)
    if isinstance(default, float) or default is None:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        if not math.isfinite(value):
            raise TypeError("expected a finite number")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise TypeError(f"expected a list of {len(default)} numbers")
        return tuple(_coerce(v, d) for v, d in zip(value, default))
    return value


def _build_section(name: str, cls, doc) -> tuple[object | None, list[str]]:
    problems = []
    if not isinstance(doc, dict):
        return None, [f"{name}: expected an object"]
    defaults = cls()
    known = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        if key not in known:
            problems.append(f"{name}.{key}: unknown field")
            continue
        try:
            kwargs[key] = _coerce(value, getattr(defaults, key))
        except TypeError as exc:
            problems.append(f"{name}.{key}: {exc}")
    try:
        obj = cls(**kwargs)
    except ValueError as exc:
        return None, problems + [f"{name}: {msg.strip()}" for msg in str(exc).split(";")]
    return (None, problems) if problems else (obj, [])


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError(["top level: expected an object"])
    problems = [f"{key}: unknown section" for key in doc if key not in SECTIONS]
    built = {}
    for name, cls in SECTIONS.items():
        obj, errs = _build_section(name, cls, doc.get(name, {}))
        problems.extend(errs)
        if obj is not None:
            built[name] = obj
    if problems:
        raise ConfigError(problems)
    return RunConfig(**built)


def load_config(path) -> RunConfig:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    return config_from_dict(doc)
