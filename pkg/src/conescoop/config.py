"""Run configuration documents.

A run config is YAML with unit-suffixed keys::

    scenario: matched_110_90
    trials: 10
    base_seed: 20240
    container: {diameter_mm: 110}
    effector: {preset: pp, bottom_diameter_mm: 90}
    granular: {preset: flour, total_mass_g: 10}
    trajectory: {penetration_offset_mm: 1.0}
    capture: {widening_gain: 2.0}
    simulation: {settle_time_s: 0.3}

Every section except ``container`` and ``effector`` is optional.  Errors
carry the source line and the dotted field name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .capture import CoverageModel
from .cone import ConeConfig, ConeDomainError
from .scene import (
    EFFECTOR_SHEETS,
    GRANULAR_PRESETS,
    ContainerSpec,
    GranularSpec,
    SheetSpec,
    granular_preset,
    sheet_preset,
)
from .trajectory import TrajectoryParams


class ConfigError(ValueError):
    """Malformed or inconsistent run config, with location when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None,
                 source: str | None = None):
        self.field = field
        self.line = line
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        loc = f"field '{field}': " if field else ""
        super().__init__(f"{prefix}: {loc}{message}" if prefix else f"{loc}{message}")


@dataclass(frozen=True)
class SimulationParams:
    dt: float | None = None  # s; None picks 95% of the stability bound
    settle_time: float = 0.2  # s of extra settling after the motion ends
    chunk_steps: int = 2000
    max_particles: int = 5000
    speed_limit: float = 2.0e4  # mm/s, particle blow-up threshold
    timeout: float = 900.0  # s of wall time per trial
    sheet_segments: int = 20
    c_aniso: float = 1.0
    trace_every: int = 200  # steps between trace frames


@dataclass(frozen=True)
class RunConfig:
    scenario: str
    container: ContainerSpec
    effector: str
    sheet: SheetSpec
    cone: ConeConfig
    granular: GranularSpec
    trajectory: TrajectoryParams = field(default_factory=TrajectoryParams)
    capture: CoverageModel = field(default_factory=CoverageModel)
    simulation: SimulationParams = field(default_factory=SimulationParams)
    trials: int = 10
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("must be at least 1", "trials")

    @property
    def tool_width(self) -> float:
        """Bottom diameter, or the fixed width of a tool that cannot resize."""
        if self.sheet.fixed_width is not None:
            return self.sheet.fixed_width
        return self.cone.bottom_diameter_d


# ------------------------------------------------------------------ schema
# YAML key -> (dataclass field, scale to internal units)

_DEG = math.pi / 180.0

_TRAJECTORY_KEYS = {
    "penetration_offset_mm": ("penetration_offset_delta", 1.0),
    "sweep_speed_mm_s": ("sweep_speed", 1.0),
    "angular_speed_deg_s": ("angular_speed", _DEG),
    "tool_angle_deg": ("tool_angle", _DEG),
    "attack_margin_deg": ("attack_margin", _DEG),
    "sweep_waypoints": ("sweep_waypoints", None),
    "exit_axis_angle_deg": ("exit_axis_angle", _DEG),
    "clearance_mm": ("clearance", 1.0),
    "retract_gap_mm": ("retract_gap", 1.0),
    "lift_clear_mm": ("lift_clear", 1.0),
    "frame_offset_mm": ("frame_offset", 1.0),
    "max_squeeze": ("max_squeeze", 1.0),
    "plate_gap_mm": ("plate_gap", 1.0),
    "plate_width_mm": ("plate_width", 1.0),
    "plate_wall_mm": ("plate_wall", 1.0),
    "plate_drop_mm": ("plate_drop", 1.0),
    "pour_height_mm": ("pour_height", 1.0),
    "pour_spread_mm": ("pour_spread", 1.0),
    "pour_lip_position": ("pour_lip_position", 1.0),
    "pour_declination_deg": ("pour_declination", _DEG),
    "pour_margin_deg": ("pour_margin", _DEG),
    "pour_speed_deg_s": ("pour_speed", _DEG),
    "dump_hold_s": ("dump_hold", 1.0),
    "shake_amplitude_deg": ("shake_amplitude", _DEG),
    "shake_cycles": ("shake_cycles", None),
}

_CAPTURE_KEYS = {
    "widening_gain": ("widening_gain", 1.0),
    "coverage_exponent": ("coverage_exponent", 1.0),
    "press_reference_mm": ("press_reference", 1.0),
    "oversize_exponent_rigid": ("oversize_exponent_rigid", 1.0),
    "oversize_exponent_flexible": ("oversize_exponent_flexible", 1.0),
    "conform_scale_mm": ("conform_scale", 1.0),
    "conform_loss": ("conform_loss", 1.0),
    "depth_factor": ("depth_factor", 1.0),
}

_SIMULATION_KEYS = {
    "dt_s": ("dt", 1.0),
    "settle_time_s": ("settle_time", 1.0),
    "chunk_steps": ("chunk_steps", None),
    "max_particles": ("max_particles", None),
    "speed_limit_mm_s": ("speed_limit", 1.0),
    "timeout_s": ("timeout", 1.0),
    "sheet_segments": ("sheet_segments", None),
    "c_aniso": ("c_aniso", 1.0),
    "trace_every": ("trace_every", None),
}

_CONTAINER_KEYS = {
    "diameter_mm": ("inner_diameter_D", 1.0),
    "tilt_deg": ("tilt_angle", _DEG),
    "rim_depth_mm": ("rim_depth", 1.0),
    "wall_thickness_mm": ("wall_thickness", 1.0),
}

_GRANULAR_KEYS = {
    "total_mass_g": ("total_mass", 1.0),
    "particle_radius_mm": ("particle_radius_mean", 1.0),
    "radius_spread": ("particle_radius_spread", 1.0),
    "friction": ("friction_coefficient", 1.0),
    "damping_ratio": ("restitution_damping", 1.0),
    "bulk_density_g_cm3": ("bulk_density", 1.0),
    "contact_frequency_rad_s": ("contact_frequency", 1.0),
    "packing_fraction": ("packing_fraction", 1.0),
    "air_drag_1_s": ("air_drag", 1.0),
}

_SHEET_KEYS = {
    "thickness_mm": ("thickness", 1.0),
    "elastic_modulus_gpa": ("elastic_modulus", 1e9),
    "friction": ("friction_coefficient", 1.0),
    "section_width_mm": ("section_width", 1.0),
}

_EFFECTOR_KEYS = {"preset", "sheet_radius_mm", "bottom_diameter_mm", "slide_angle_deg",
                  *_SHEET_KEYS}
_TOP_KEYS = {"scenario", "trials", "base_seed", "container", "effector", "granular",
             "trajectory", "capture", "simulation"}


# ------------------------------------------------------------------ YAML with lines

class _Doc:
    """Plain data plus a map from dotted field path to source line."""

    def __init__(self, data: Any, lines: dict[str, int], source: str | None):
        self.data = data
        self.lines = lines
        self.source = source

    def error(self, msg: str, path: str) -> ConfigError:
        line = self.lines.get(path)
        if line is None and "." in path:
            line = self.lines.get(path.rsplit(".", 1)[0])
        return ConfigError(msg, path, line, self.source)


def _to_python(node: yaml.Node, path: str, lines: dict[str, int]) -> Any:
    lines.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        out = {}
        for k, v in node.value:
            key = str(k.value)
            sub = f"{path}.{key}" if path else key
            lines[sub] = k.start_mark.line + 1
            out[key] = _to_python(v, sub, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_to_python(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.SafeLoader.construct_object(_LOADER, node)


class _ScalarLoader(yaml.SafeLoader):
    def __init__(self):
        super().__init__("")


_LOADER = _ScalarLoader()


def parse_yaml(text: str, source: str | None = None) -> _Doc:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {exc.problem}", None, line, source) from None
    lines: dict[str, int] = {}
    data = {} if node is None else _to_python(node, "", lines)
    return _Doc(data, lines, source)


# ------------------------------------------------------------------ building

def _section(doc: _Doc, data: dict, name: str, required: bool = False) -> dict:
    sec = data.get(name)
    if sec is None:
        if required:
            raise doc.error("missing required section", name)
        return {}
    if not isinstance(sec, dict):
        raise doc.error("must be a mapping", name)
    return sec


def _number(doc: _Doc, path: str, value: Any, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise doc.error(f"expected a number, got {value!r}", path)
    if integer:
        if float(value) != int(value):
            raise doc.error(f"expected an integer, got {value!r}", path)
        return int(value)
    return float(value)


def _mapped(doc: _Doc, sec: dict, prefix: str, schema: dict, allowed_extra=()) -> dict:
    out = {}
    for key, value in sec.items():
        path = f"{prefix}.{key}"
        if key in allowed_extra:
            continue
        if key not in schema:
            known = ", ".join(sorted([*schema, *allowed_extra]))
            raise doc.error(f"unknown key; expected one of: {known}", path)
        name, scale = schema[key]
        if value is None:
            out[name] = None
            continue
        num = _number(doc, path, value, integer=scale is None)
        out[name] = num if scale is None else num * scale
    return out


def _construct(doc: _Doc, path: str, factory, **kwargs):
    try:
        return factory(**kwargs)
    except ConfigError:
        raise
    except (ValueError, ConeDomainError) as exc:
        raise doc.error(str(exc), path) from None


def _preset(doc: _Doc, path: str, loader, name: Any, **overrides):
    if not isinstance(name, str):
        raise doc.error(f"expected a preset name, got {name!r}", path)
    try:
        return loader(name, **overrides)
    except KeyError as exc:
        raise doc.error(exc.args[0], path) from None
    except ValueError as exc:
        raise doc.error(str(exc), path) from None


def config_from_doc(doc: _Doc) -> RunConfig:
    data = doc.data
    if not isinstance(data, dict):
        raise doc.error("top level must be a mapping", "")
    for key in data:
        if key not in _TOP_KEYS:
            raise doc.error(f"unknown key; expected one of: {', '.join(sorted(_TOP_KEYS))}", key)

    scenario = data.get("scenario", "run")
    if not isinstance(scenario, str) or not scenario:
        raise doc.error("must be a non-empty string", "scenario")
    trials = _number(doc, "trials", data.get("trials", 10), integer=True)
    if trials < 1:
        raise doc.error("must be at least 1", "trials")
    base_seed = _number(doc, "base_seed", data.get("base_seed", 0), integer=True)

    c_sec = _section(doc, data, "container", required=True)
    if "diameter_mm" not in c_sec:
        raise doc.error("missing required field", "container.diameter_mm")
    container = _construct(doc, "container", ContainerSpec,
                           **_mapped(doc, c_sec, "container", _CONTAINER_KEYS))

    e_sec = _section(doc, data, "effector", required=True)
    unknown = set(e_sec) - _EFFECTOR_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise doc.error(f"unknown key; expected one of: {', '.join(sorted(_EFFECTOR_KEYS))}",
                        f"effector.{key}")
    effector = e_sec.get("preset", "pp")
    sheet_over = _mapped(doc, {k: v for k, v in e_sec.items() if k in _SHEET_KEYS},
                         "effector", _SHEET_KEYS)
    sheet = _preset(doc, "effector.preset", sheet_preset, effector, **sheet_over)
    R = _number(doc, "effector.sheet_radius_mm", e_sec.get("sheet_radius_mm", 50.0))
    if "bottom_diameter_mm" in e_sec and "slide_angle_deg" in e_sec:
        raise doc.error("give bottom_diameter_mm or slide_angle_deg, not both",
                        "effector.slide_angle_deg")
    if "slide_angle_deg" in e_sec:
        theta = _number(doc, "effector.slide_angle_deg", e_sec["slide_angle_deg"]) * _DEG
        cone = _construct(doc, "effector.slide_angle_deg", ConeConfig.from_slide_angle, R=R,
                          theta=theta)
    else:
        default_d = sheet.fixed_width if sheet.fixed_width is not None else None
        d = e_sec.get("bottom_diameter_mm", default_d)
        if d is None:
            raise doc.error("missing required field (or slide_angle_deg)",
                            "effector.bottom_diameter_mm")
        d = _number(doc, "effector.bottom_diameter_mm", d)
        cone = _construct(doc, "effector.bottom_diameter_mm", ConeConfig.from_diameter, R=R, d=d)

    g_sec = _section(doc, data, "granular")
    g_over = _mapped(doc, g_sec, "granular", _GRANULAR_KEYS, allowed_extra=("preset",))
    granular = _preset(doc, "granular.preset", granular_preset, g_sec.get("preset", "flour"),
                       **g_over)

    traj = _construct(doc, "trajectory", TrajectoryParams,
                      **_mapped(doc, _section(doc, data, "trajectory"), "trajectory",
                                _TRAJECTORY_KEYS))
    cap = _construct(doc, "capture", CoverageModel,
                     **_mapped(doc, _section(doc, data, "capture"), "capture", _CAPTURE_KEYS))
    sim_kwargs = _mapped(doc, _section(doc, data, "simulation"), "simulation", _SIMULATION_KEYS)
    sim = SimulationParams(**sim_kwargs)
    for name in ("chunk_steps", "max_particles", "sheet_segments", "trace_every"):
        if getattr(sim, name) < 1:
            raise doc.error("must be at least 1", f"simulation.{name}")
    if sim.dt is not None and not sim.dt > 0:
        raise doc.error("must be positive", "simulation.dt_s")

    return RunConfig(
        scenario=scenario, container=container, effector=str(effector), sheet=sheet, cone=cone,
        granular=granular, trajectory=traj, capture=cap, simulation=sim, trials=trials,
        base_seed=base_seed,
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config file not found", source=str(path)) from None
    return config_from_doc(parse_yaml(text, str(path)))


def config_from_text(text: str, source: str | None = None) -> RunConfig:
    return config_from_doc(parse_yaml(text, source))


def config_from_dict(data: dict, source: str | None = None) -> RunConfig:
    return config_from_doc(_Doc(data, {}, source))


def merge(base: dict, over: dict) -> dict:
    """Recursive dict merge, ``over`` wins."""
    out = dict(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = merge(out[k], v)
        else:
            out[k] = v
    return out


__all__ = [
    "ConfigError", "RunConfig", "SimulationParams", "load_config", "config_from_text",
    "config_from_dict", "parse_yaml", "merge", "EFFECTOR_SHEETS", "GRANULAR_PRESETS",
]
