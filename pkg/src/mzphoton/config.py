"""Run configuration: a YAML file plus ``--section.key=value`` overrides.

Schema (every section optional except ``experiment`` and, for scans,
``scan.settings`` and ``scan.accumulation_time``)::

    experiment: fringe_four        # fringe_* | hom_delay | thresholds
    source:    {p11, p22, p33, repetition_interval_ns, coherence_length_um,
                wavelength_nm, distinguishability_x}
    detector:  {efficiency, cascade_fanout, number_resolving, dark_rate}
    scan:      {settings, accumulation_time, seed, setting_kind,
                phase_jitter, plate: {thickness_mm, refractive_index, wavelength_nm}}
    thresholds: {n, eta_i, visibility}
    output:    {csv, json}

``scan.settings`` is a list or ``{start, stop, num, endpoint}``; for
``setting_kind: phase`` the values may also be given as ``{..., unit: pi}``
to mean multiples of pi.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np
import yaml

from .simulator import (
    DEFAULT_SEED,
    SCAN_MODES,
    ConfigurationError,
    DetectorModel,
    PhasePlate,
    ScanConfig,
    SourceModel,
)

EXPERIMENTS = SCAN_MODES + ("thresholds",)


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, origin: str = "<config>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.origin = origin

    def __str__(self) -> str:
        where = f"{self.origin}:{self.line}" if self.line is not None else self.origin
        return f"{where}: {self.message}"


@dataclass(frozen=True)
class ThresholdSpec:
    n: int = 4
    eta_i: float = 0.375
    visibility: Optional[float] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 < self.eta_i <= 1.0:
            raise ValueError("eta_i must lie in (0, 1]")
        if self.visibility is not None and not 0.0 < self.visibility <= 1.0:
            raise ValueError("visibility must lie in (0, 1]")


@dataclass(frozen=True)
class OutputSpec:
    csv: Optional[str] = None
    json: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    source: SourceModel = field(default_factory=SourceModel)
    detector: DetectorModel = field(default_factory=DetectorModel)
    scan: Optional[ScanConfig] = None
    thresholds: ThresholdSpec = field(default_factory=ThresholdSpec)
    output: OutputSpec = field(default_factory=OutputSpec)


_FLOAT, _INT, _BOOL, _STR, _OPT_FLOAT, _OPT_STR = "float", "int", "bool", "str", "float?", "str?"

_SCHEMA = {
    "source": (SourceModel, {k: _FLOAT for k in asdict(SourceModel())}),
    "detector": (
        DetectorModel,
        {"efficiency": _FLOAT, "cascade_fanout": _INT, "number_resolving": _BOOL, "dark_rate": _FLOAT},
    ),
    "thresholds": (ThresholdSpec, {"n": _INT, "eta_i": _FLOAT, "visibility": _OPT_FLOAT}),
    "output": (OutputSpec, {"csv": _OPT_STR, "json": _OPT_STR}),
}
_SCAN_KEYS = {
    "settings": None,
    "accumulation_time": _FLOAT,
    "seed": _INT,
    "mode": _STR,
    "setting_kind": _STR,
    "phase_jitter": _FLOAT,
    "plate": None,
}
_PLATE_KEYS = {"thickness_mm": _FLOAT, "refractive_index": _FLOAT, "wavelength_nm": _FLOAT}


def _line_map(text: str) -> dict[tuple, int]:
    """Map key paths to 1-based source lines."""
    lines: dict[tuple, int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (k.value,)
                lines[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                lines[path + (i,)] = v.start_mark.line + 1
                walk(v, path + (i,))

    root = yaml.compose(text)
    if root is not None:
        walk(root, ())
    return lines


class _Ctx:
    def __init__(self, lines: dict[tuple, int], origin: str, overrides: dict[tuple, str]):
        self.lines = lines
        self.origin = origin
        self.overrides = overrides

    def error(self, path: tuple, message: str) -> ConfigError:
        key = ".".join(str(p) for p in path)
        for i in range(len(path), 0, -1):
            if path[:i] in self.overrides:
                return ConfigError(f"{key}: {message}", None, self.overrides[path[:i]])
            if path[:i] in self.lines:
                return ConfigError(f"{key}: {message}", self.lines[path[:i]], self.origin)
        return ConfigError(f"{key}: {message}" if key else message, None, self.origin)


def _coerce(value: Any, kind: str, path: tuple, ctx: _Ctx):
    if value is None and kind.endswith("?"):
        return None
    base = kind.rstrip("?")
    if base == _FLOAT:
        if isinstance(value, str):
            # YAML 1.1 reads exponent forms without a dot (1e-3) as strings
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ctx.error(path, f"expected a number, got {value!r}")
        return float(value)
    if base == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ctx.error(path, f"expected an integer, got {value!r}")
        return value
    if base == _BOOL:
        if not isinstance(value, bool):
            raise ctx.error(path, f"expected true/false, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ctx.error(path, f"expected a string, got {value!r}")
    return value


def _mapping(value: Any, path: tuple, ctx: _Ctx) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ctx.error(path, "expected a mapping")
    return value


def _section(data: dict, name: str, ctx: _Ctx):
    cls, keys = _SCHEMA[name]
    raw = _mapping(data.get(name), (name,), ctx)
    kwargs = {}
    for k, v in raw.items():
        if k not in keys:
            raise ctx.error((name, k), "unknown key")
        kwargs[k] = _coerce(v, keys[k], (name, k), ctx)
    try:
        return cls(**kwargs)
    except (ConfigurationError, ValueError) as exc:
        raise ctx.error((name,), str(exc)) from None


def _settings(value: Any, ctx: _Ctx) -> tuple[float, ...]:
    path = ("scan", "settings")
    if isinstance(value, list):
        return tuple(_coerce(v, _FLOAT, path + (i,), ctx) for i, v in enumerate(value))
    if isinstance(value, dict):
        allowed = {"start", "stop", "num", "endpoint", "unit"}
        for k in value:
            if k not in allowed:
                raise ctx.error(path + (k,), "unknown key")
        try:
            start = _coerce(value["start"], _FLOAT, path + ("start",), ctx)
            stop = _coerce(value["stop"], _FLOAT, path + ("stop",), ctx)
            num = _coerce(value["num"], _INT, path + ("num",), ctx)
        except KeyError as exc:
            raise ctx.error(path, f"grid needs {exc.args[0]!r}") from None
        endpoint = _coerce(value.get("endpoint", False), _BOOL, path + ("endpoint",), ctx)
        unit = value.get("unit", 1.0)
        scale = math.pi if unit == "pi" else _coerce(unit, _FLOAT, path + ("unit",), ctx)
        if num < 1:
            raise ctx.error(path + ("num",), "must be >= 1")
        return tuple(float(v) for v in scale * np.linspace(start, stop, num, endpoint=endpoint))
    raise ctx.error(path, "expected a list or a {start, stop, num} grid")


def _scan(data: dict, experiment: str, ctx: _Ctx) -> Optional[ScanConfig]:
    raw = _mapping(data.get("scan"), ("scan",), ctx)
    if experiment == "thresholds":
        return None
    for k in raw:
        if k not in _SCAN_KEYS:
            raise ctx.error(("scan", k), "unknown key")
    if "settings" not in raw:
        raise ctx.error(("scan",), "missing 'settings'")
    if "accumulation_time" not in raw:
        raise ctx.error(("scan",), "missing 'accumulation_time'")
    kwargs: dict[str, Any] = {"settings": _settings(raw["settings"], ctx)}
    for k, kind in _SCAN_KEYS.items():
        if kind is not None and k in raw:
            kwargs[k] = _coerce(raw[k], kind, ("scan", k), ctx)
    if kwargs.setdefault("mode", experiment) != experiment:
        raise ctx.error(("scan", "mode"), f"does not match experiment {experiment!r}")
    if raw.get("plate") is not None:
        plate = _mapping(raw["plate"], ("scan", "plate"), ctx)
        pk = {}
        for k, v in plate.items():
            if k not in _PLATE_KEYS:
                raise ctx.error(("scan", "plate", k), "unknown key")
            pk[k] = _coerce(v, _PLATE_KEYS[k], ("scan", "plate", k), ctx)
        try:
            kwargs["plate"] = PhasePlate(**pk)
        except ConfigurationError as exc:
            raise ctx.error(("scan", "plate"), str(exc)) from None
    kwargs.setdefault("seed", DEFAULT_SEED)
    try:
        return ScanConfig(**kwargs)
    except ConfigurationError as exc:
        raise ctx.error(("scan",), str(exc)) from None


def parse_config(data: Any, lines: Optional[dict] = None, origin: str = "<config>", overrides: Optional[dict] = None) -> RunConfig:
    ctx = _Ctx(lines or {}, origin, overrides or {})
    data = _mapping(data, (), ctx)
    allowed = {"experiment", "source", "detector", "scan", "thresholds", "output"}
    for k in data:
        if k not in allowed:
            raise ctx.error((k,), "unknown section")
    experiment = data.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ctx.error(("experiment",), f"must be one of {', '.join(EXPERIMENTS)}; got {experiment!r}")
    return RunConfig(
        experiment=experiment,
        source=_section(data, "source", ctx),
        detector=_section(data, "detector", ctx),
        scan=_scan(data, experiment, ctx),
        thresholds=_section(data, "thresholds", ctx),
        output=_section(data, "output", ctx),
    )


def apply_overrides(data: dict, overrides: list[str]) -> tuple[dict, dict[tuple, str]]:
    """Merge ``section.key=value`` strings into ``data`` (values parsed as YAML)."""
    origins = {}
    for item in overrides:
        text = item[2:] if item.startswith("--") else item
        if "=" not in text:
            raise ConfigError(f"override {item!r} must look like --section.key=value", origin="<overrides>")
        key, value = text.split("=", 1)
        path = tuple(key.split("."))
        node = data
        for p in path[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-mapping", origin="<overrides>")
        try:
            node[path[-1]] = yaml.safe_load(value)
        except yaml.YAMLError as exc:
            raise ConfigError(f"override {item!r}: {exc}", origin="<overrides>") from None
        origins[path] = f"<override {item}>"
    return data, origins


def load_config(path: str, overrides: Optional[list[str]] = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
        lines = _line_map(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(str(getattr(exc, "problem", exc)), mark.line + 1 if mark else None, path) from None
    data = {} if data is None else data
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", 1, path)
    data, origins = apply_overrides(data, overrides or [])
    return parse_config(data, lines, path, origins)


def config_to_dict(config: RunConfig) -> dict:
    """Plain-data echo of a config; ``parse_config`` maps it back to an equal object."""
    out = asdict(config)
    if out["scan"] is not None:
        out["scan"]["settings"] = list(out["scan"]["settings"])
        if out["scan"]["plate"] is None:
            del out["scan"]["plate"]
    return out
