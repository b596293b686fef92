"""Project configuration: one JSON document wiring every section together.

A ProjectConfig aggregates the actuator parameters, the drive circuit,
the control settings, the compensator synthesis targets, and the
simulation setup. Dotted-path overrides (``control.zeta=0.7``) mirror
the CLI's --set flag; the short content hash identifies the effective
configuration inside every artifact the CLI writes.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from .actuator import ActuatorParams, electrical_tf
from .drive import DriveConfig, LeadLagSpec, assemble_drive
from .errors import ConfigError
from .gangs import six_gangs
from .poleplace import design_position_controller
from .sim import (
    CurrentLoopModel,
    FLCurrentController,
    OpenLoopController,
    PolePlaceCurrentController,
    PolePlaceVoltageController,
    SimConfig,
)

__all__ = [
    "ControlConfig",
    "ProjectConfig",
    "default_project_config",
    "load_config",
    "save_config",
    "apply_overrides",
    "config_hash",
    "build_controller",
]

CONTROLLER_KINDS = (
    "pole_place_voltage",
    "pole_place_current",
    "fl_current",
    "open_loop_voltage",
    "open_loop_current",
)


@dataclass(frozen=True)
class ControlConfig:
    """Position-control settings shared by design and simulation."""

    controller: str = "fl_current"
    f_n_hz: float = 500.0
    zeta: float = 0.8
    observer_factor: float = 10.0
    lambda0: float | None = None
    guard_deg: float = 5.0
    velocity_filter_factor: float = 10.0
    current_loop: str = "dc"
    current_loop_bw_hz: float = 8222.0

    def __post_init__(self):
        if self.controller not in CONTROLLER_KINDS:
            raise ConfigError(f"unknown controller '{self.controller}'")
        if not self.f_n_hz > 0:
            raise ConfigError("control.f_n_hz must be positive")
        if not self.zeta > 0:
            raise ConfigError("control.zeta must be positive")
        if not self.observer_factor > 0:
            raise ConfigError("control.observer_factor must be positive")
        if self.lambda0 is not None and not self.lambda0 > 0:
            raise ConfigError("control.lambda0 must be positive or null")
        if self.current_loop not in ("dc", "first_order", "tf"):
            raise ConfigError(f"unknown current-loop kind '{self.current_loop}'")

    @property
    def omega_n(self) -> float:
        return 2.0 * math.pi * self.f_n_hz

    def to_dict(self) -> dict:
        return {
            "controller": self.controller,
            "f_n_hz": self.f_n_hz,
            "zeta": self.zeta,
            "observer_factor": self.observer_factor,
            "lambda0": self.lambda0,
            "guard_deg": self.guard_deg,
            "velocity_filter_factor": self.velocity_filter_factor,
            "current_loop": self.current_loop,
            "current_loop_bw_hz": self.current_loop_bw_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControlConfig":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad control config: {exc}") from exc


@dataclass(frozen=True)
class ProjectConfig:
    actuator: ActuatorParams = field(default_factory=ActuatorParams)
    drive: DriveConfig = field(default_factory=DriveConfig)
    control: ControlConfig = field(default_factory=ControlConfig)
    design: LeadLagSpec = field(default_factory=LeadLagSpec)
    sim: SimConfig = field(default_factory=SimConfig)
    output_dir: str = "out"

    def to_dict(self) -> dict:
        return {
            "actuator": self.actuator.to_dict(),
            "drive": self.drive.to_dict(),
            "control": self.control.to_dict(),
            "design": {
                "alpha": self.design.alpha,
                "f_c_hz": self.design.f_c_hz,
                "r_1": self.design.r_1,
                "r_2": self.design.r_2,
            },
            "sim": self.sim.to_dict(),
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectConfig":
        known = {"actuator", "drive", "control", "design", "sim", "output_dir"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config section(s): {', '.join(sorted(extra))}")
        kwargs: dict = {}
        if "actuator" in d:
            kwargs["actuator"] = ActuatorParams.from_dict(d["actuator"])
        if "drive" in d:
            kwargs["drive"] = DriveConfig.from_dict(d["drive"])
        if "control" in d:
            kwargs["control"] = ControlConfig.from_dict(d["control"])
        if "design" in d:
            try:
                kwargs["design"] = LeadLagSpec(**d["design"])
            except TypeError as exc:
                raise ConfigError(f"bad design config: {exc}") from exc
        if "sim" in d:
            kwargs["sim"] = SimConfig.from_dict(d["sim"])
        if "output_dir" in d:
            kwargs["output_dir"] = str(d["output_dir"])
        return cls(**kwargs)


def default_project_config() -> ProjectConfig:
    return ProjectConfig()


def load_config(path) -> ProjectConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return ProjectConfig.from_dict(data)


def save_config(cfg: ProjectConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def apply_overrides(cfg: ProjectConfig, assignments) -> ProjectConfig:
    """Apply dotted-path assignments like ``sim.duration=0.05``.

    Values are parsed as JSON when possible (numbers, null, lists) and
    kept as strings otherwise. Paths must name existing keys.
    """
    data = cfg.to_dict()
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        path, raw = item.split("=", 1)
        keys = path.strip().split(".")
        node = data
        for k in keys[:-1]:
            if not isinstance(node, dict) or k not in node:
                raise ConfigError(f"unknown config key '{path.strip()}'")
            node = node[k]
        leaf = keys[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"unknown config key '{path.strip()}'")
        try:
            node[leaf] = json.loads(raw)
        except json.JSONDecodeError:
            node[leaf] = raw
    return ProjectConfig.from_dict(data)


def config_hash(cfg: ProjectConfig) -> str:
    """Short stable digest of the effective configuration."""
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _current_loop_model(cfg: ProjectConfig) -> CurrentLoopModel:
    kind = cfg.control.current_loop
    if kind == "dc":
        return CurrentLoopModel(kind="dc")
    if kind == "first_order":
        return CurrentLoopModel(kind="first_order",
                                bandwidth_hz=cfg.control.current_loop_bw_hz)
    blocks = assemble_drive(cfg.drive, electrical_tf(cfg.actuator))
    track = six_gangs(blocks).reference_to_output
    # normalize to unit DC so it composes with the amps-per-volt DAC gain
    return CurrentLoopModel(kind="tf", tf=track / track.dc_gain())


def build_controller(cfg: ProjectConfig):
    """Instantiate the controller object named by control.controller."""
    ctl = cfg.control
    t_s = 1.0 / cfg.sim.f_s
    if ctl.controller == "pole_place_voltage":
        design = design_position_controller(
            cfg.actuator, ctl.omega_n, ctl.zeta, drive="voltage",
            observer_factor=ctl.observer_factor,
        )
        return PolePlaceVoltageController(design, t_s)
    if ctl.controller == "pole_place_current":
        design = design_position_controller(
            cfg.actuator, ctl.omega_n, ctl.zeta, drive="current",
            observer_factor=ctl.observer_factor, lambda0=ctl.lambda0,
        )
        return PolePlaceCurrentController(
            design, t_s, current_loop=_current_loop_model(cfg)
        )
    if ctl.controller == "fl_current":
        return FLCurrentController(
            cfg.actuator, ctl.omega_n, ctl.zeta, t_s,
            velocity_filter_factor=ctl.velocity_filter_factor,
            guard_deg=ctl.guard_deg,
            current_loop=_current_loop_model(cfg),
        )
    if ctl.controller == "open_loop_voltage":
        return OpenLoopController(drive="voltage")
    return OpenLoopController(drive="current")
