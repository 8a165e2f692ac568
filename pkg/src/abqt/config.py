"""Scenario configuration: JSON file, command-line overrides, validation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .errors import ConfigError
from .protocol import AliceInfo, BellVariant, BobInfo, ChannelSpec, DEFAULT_VARIANTS

FORMATS = ("csv", "json", "markdown")
SURFACE_QUANTITIES = ("F1_AB", "F3_AB", "F4_AB")


def _default_angle_grid():
    return {"start": 0.0, "stop": 2 * math.pi, "num": 61}


@dataclass
class ScenarioConfig:
    alpha: float = 1.0
    theta: float = 0.3
    phi: float = 0.9
    theta1: float = 0.7
    alice_coefficients: Optional[list] = None
    bob_coefficients: Optional[list] = None
    variants: list = field(default_factory=lambda: [v.value for v in DEFAULT_VARIANTS])
    displacement_divisor: float = 2.0
    theta_grid: object = field(default_factory=_default_angle_grid)
    phi_grid: object = field(default_factory=_default_angle_grid)
    surface_alphas: list = field(default_factory=lambda: [0.5, 1.0, 5.0])
    curve_alphas: object = field(default_factory=lambda: {"start": 0.5, "stop": 10.0, "num": 20})
    surface_quantities: list = field(default_factory=lambda: list(SURFACE_QUANTITIES))
    format: str = "csv"
    cutoff: Optional[int] = None
    eps: float = 1e-10
    jobs: int = 1

    # ---- construction ----
    @classmethod
    def from_sources(cls, file_data=None, overrides=None) -> "ScenarioConfig":
        """Defaults, then file fields, then non-None overrides."""
        known = {f.name for f in fields(cls)}
        merged = {}
        for source in (file_data or {}, {k: v for k, v in (overrides or {}).items() if v is not None}):
            for key, value in source.items():
                if key not in known:
                    raise ConfigError(key, "unknown configuration field")
                merged[key] = value
        config = cls(**merged)
        config.validate()
        return config

    @classmethod
    def load(cls, path, overrides=None) -> "ScenarioConfig":
        data = None
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    data = json.load(fh)
            except OSError as exc:
                raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
            if not isinstance(data, dict):
                raise ConfigError("config", "top level must be a JSON object")
        return cls.from_sources(data, overrides)

    # ---- validation ----
    def validate(self):
        for name in ("alpha", "theta", "phi", "theta1", "displacement_divisor", "eps"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(name, f"must be a finite number, got {value!r}")
        if self.alpha <= 0:
            raise ConfigError("alpha", "must be positive")
        if self.displacement_divisor <= 0:
            raise ConfigError("displacement_divisor", "must be positive")
        if self.eps <= 0:
            raise ConfigError("eps", "must be positive")
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {', '.join(FORMATS)}")
        if self.cutoff is not None and (not isinstance(self.cutoff, int) or self.cutoff < 1):
            raise ConfigError("cutoff", "must be a positive integer")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs", "must be a positive integer")
        try:
            variants = [BellVariant(v) for v in self.variants]
        except (ValueError, TypeError):
            raise ConfigError("variants", "entries must be PLUS or SHIFTED") from None
        if len(variants) != 3:
            raise ConfigError("variants", "exactly three entries are required")
        for q in self.surface_quantities:
            if q not in SURFACE_QUANTITIES:
                raise ConfigError("surface_quantities", f"unknown quantity {q!r}")
        for name in ("theta_grid", "phi_grid", "surface_alphas", "curve_alphas"):
            self.grid(name)
        if min(self.grid("surface_alphas")) <= 0 or min(self.grid("curve_alphas")) <= 0:
            raise ConfigError("surface_alphas", "alpha grids must be positive")
        self.alice()
        self.bob()

    def grid(self, name) -> list:
        """A grid field as a list of floats; accepts a list or ``{start, stop, num}``."""
        spec = getattr(self, name)
        if isinstance(spec, dict):
            try:
                start, stop, num = float(spec["start"]), float(spec["stop"]), int(spec["num"])
            except (KeyError, TypeError, ValueError):
                raise ConfigError(name, "range form needs numeric start, stop and num") from None
            if num < 1:
                raise ConfigError(name, "grid must not be empty")
            return [float(x) for x in np.linspace(start, stop, num)]
        if not isinstance(spec, (list, tuple)) or not spec:
            raise ConfigError(name, "grid must be a non-empty list or a {start, stop, num} object")
        try:
            values = [float(x) for x in spec]
        except (TypeError, ValueError):
            raise ConfigError(name, "grid entries must be numbers") from None
        if not all(math.isfinite(v) for v in values):
            raise ConfigError(name, "grid entries must be finite")
        return values

    # ---- protocol objects ----
    @staticmethod
    def _complex_list(name, values, n):
        if not isinstance(values, (list, tuple)) or len(values) != n:
            raise ConfigError(name, f"needs {n} entries")
        out = []
        for v in values:
            if isinstance(v, (list, tuple)) and len(v) == 2:
                out.append(complex(float(v[0]), float(v[1])))
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                out.append(complex(v))
            else:
                raise ConfigError(name, "entries must be numbers or [re, im] pairs")
        if all(c == 0 for c in out):
            raise ConfigError(name, "coefficients cannot all be zero")
        return out

    def alice(self) -> AliceInfo:
        if self.alice_coefficients is not None:
            return AliceInfo(self._complex_list("alice_coefficients", self.alice_coefficients, 4))
        return AliceInfo.from_angles(self.theta, self.phi)

    def bob(self) -> BobInfo:
        if self.bob_coefficients is not None:
            return BobInfo(self._complex_list("bob_coefficients", self.bob_coefficients, 2))
        return BobInfo.from_angle(self.theta1)

    def channel(self, alpha=None) -> ChannelSpec:
        return ChannelSpec(self.alpha if alpha is None else alpha, tuple(self.variants))

    def to_dict(self):
        return asdict(self)
