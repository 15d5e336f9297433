"""Run configuration: JSON or TOML input with line and field diagnostics."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SUITES = ("geometry", "flow", "entropy", "kernel", "concentration", "lgeo", "collapsing",
          "pseudolocality", "gap", "curvature")

DEFAULT_TOLERANCES = {
    "geometry": 1e-10,
    "flow": 1e-10,
    "flow_grid": 1e-9,
    "special_solutions": 1e-8,
    "entropy_constant": 1e-8,
    "carrillo_ni": 1e-6,
    "entropy_scale": 1e-5,
    "bounded_geometry": 0.05,
    "log_sobolev": 1e-8,
    "mass": 1e-5,
    "semigroup": 1e-6,
    "closed_form": 1e-5,
    "reduced_distance": 1e-5,
    "dp_oracle": 1e-4,
    "harnack_gaussian": 1e-8,
    "harnack": 1e-4,
    "volume": 1e-8,
    "spectrum": 1e-12,
    "rigidity_oracle": 1e-9,
    "weighted": 1e-8,
}


def read_mapping(path):
    """Parse a JSON or TOML file (by extension) into a dict.

    Raises
    ------
    ConfigError
        With the file name and line/column of a syntax error.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    suffix = path.suffix.lower()
    if suffix == ".toml":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: TOML syntax error: {exc}") from exc
    elif suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}:{exc.lineno}:{exc.colno}: JSON syntax error: {exc.msg}") from exc
    else:
        raise ConfigError(f"{path}: unsupported config format {suffix!r} (use .json or .toml)")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; identical configs give identical reports."""

    models: tuple = ()              # model specs; empty means the default catalog
    suites: tuple = SUITES
    panels: int = 16
    order: int = 10
    tau_min: float = 1e-2
    tau_max: float = 1e2
    tau_points: int = 20
    window_delta: float = 0.1
    window_D: float = 4.0
    kernel_samples: int = 200
    harnack_samples: int = 50
    r_grid: tuple = (1.0, 2.0, 4.0, 8.0, 16.0)
    delta0: float = 0.1
    curvature_lambda: float = 1.0
    seed: int = 0
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "report.json"
    csv_dir: str = ""

    def __post_init__(self):
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"suites: unknown suite(s) {', '.join(map(repr, unknown))}; "
                              f"valid suites are {', '.join(SUITES)}")
        for name, value in self.tolerances.items():
            if not value > 0:
                raise ConfigError(f"tolerances.{name}: must be > 0 (got {value!r})")
        if not 0 < self.window_delta < 1:
            raise ConfigError(f"window_delta: must lie in (0, 1) (got {self.window_delta!r})")
        if not self.window_D > 0:
            raise ConfigError(f"window_D: must be > 0 (got {self.window_D!r})")
        if not 0 < self.tau_min < self.tau_max:
            raise ConfigError("tau_min/tau_max: need 0 < tau_min < tau_max")
        for name in ("tau_points", "kernel_samples", "harnack_samples", "panels", "order"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name}: must be a positive integer")
        if not self.delta0 > 0:
            raise ConfigError("delta0: must be > 0")
        if not self.curvature_lambda > 0:
            raise ConfigError("curvature_lambda: must be > 0")

    def tolerance(self, name):
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])

    def build_models(self):
        from ..models import default_catalog, model_from_spec

        if not self.models:
            return default_catalog()
        out = []
        for i, spec in enumerate(self.models):
            try:
                spec = dict(spec)
                grid = dict(spec.get("grid", {}))
                grid.setdefault("panels", self.panels)
                grid.setdefault("order", self.order)
                spec["grid"] = grid
                out.append(model_from_spec(spec))
            except (ValueError, TypeError, KeyError) as exc:
                raise ConfigError(f"models[{i}]: {exc}") from exc
        return out

    def to_dict(self):
        data = asdict(self)
        data["models"] = [dict(m) for m in self.models]
        data["suites"] = list(self.suites)
        data["r_grid"] = list(self.r_grid)
        return data

    @classmethod
    def from_mapping(cls, data, source="config"):
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            if key not in known:
                raise ConfigError(f"{source}: unknown field {key!r}; valid fields are "
                                  f"{', '.join(sorted(known))}")
            try:
                kwargs[key] = _coerce(key, value, known[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{source}: field {key!r}: {exc}") from exc
        if "tolerances" in kwargs:
            merged = dict(DEFAULT_TOLERANCES)
            for k in kwargs["tolerances"]:
                if k not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"{source}: tolerances.{k}: unknown tolerance; valid "
                                      f"names are {', '.join(sorted(DEFAULT_TOLERANCES))}")
            merged.update(kwargs["tolerances"])
            kwargs["tolerances"] = merged
        return cls(**kwargs)


def _coerce(key, value, spec):
    default = spec.default
    if key in ("models", "suites", "r_grid"):
        if isinstance(value, (str, bytes)) or not isinstance(value, (list, tuple)):
            raise TypeError("expected a list")
        if key == "r_grid":
            return tuple(float(v) for v in value)
        if key == "suites":
            return tuple(str(v) for v in value)
        for v in value:
            if not isinstance(v, dict):
                raise TypeError("each model must be a table/object with kind, n, k")
        return tuple(value)
    if key == "tolerances":
        if not isinstance(value, dict):
            raise TypeError("expected a table/object")
        return {str(k): float(v) for k, v in value.items()}
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int):
        if isinstance(value, float) and not value.is_integer():
            raise ValueError(f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)


def load_config(path):
    """Read a :class:`RunConfig` from JSON or TOML."""
    return RunConfig.from_mapping(read_mapping(path), str(path))


__all__ = ["DEFAULT_TOLERANCES", "RunConfig", "SUITES", "load_config", "read_mapping"]
