"""Analog drive-circuit blocks and lead-lag compensator synthesis.

Models a current-drive chain built from a summing compensator op-amp
(lag + lead network), a voltage divider, a non-inverting power stage,
the coil itself, and a sense-resistor current buffer. Each block exists
in an ideal form and a non-ideal form that keeps the op-amp open-loop
dynamics in place.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DesignError
from .lti import Polynomial, RationalTF, tf_const, tf_eval

__all__ = [
    "OpAmpSpec",
    "DriveConfig",
    "LeadDesign",
    "LeadLagSpec",
    "DriveBlocks",
    "opamp_open_loop",
    "divider_gain",
    "power_stage",
    "current_sensor",
    "lag_tf",
    "lead_tf",
    "design_lead_lag",
    "assemble_drive",
]


@dataclass(frozen=True)
class OpAmpSpec:
    """Open-loop op-amp description.

    a_ol is the DC open-loop gain (linear), gbp the gain-bandwidth
    product in Hz. The first pole sits at gbp/a_ol; the second and third
    default to 2x and 4x the gain-bandwidth product when not given.
    """

    a_ol: float
    gbp: float
    f2: float | None = None
    f3: float | None = None
    v_out_max: float = 14.7
    i_out_max: float = 0.04

    def __post_init__(self):
        if not self.a_ol > 1:
            raise ConfigError("op-amp a_ol must exceed 1")
        if not self.gbp > 0:
            raise ConfigError("op-amp gbp must be positive")
        if self.f2 is None:
            object.__setattr__(self, "f2", 2.0 * self.gbp)
        if self.f3 is None:
            object.__setattr__(self, "f3", 4.0 * self.gbp)
        if not (self.v_out_max > 0 and self.i_out_max > 0):
            raise ConfigError("op-amp output limits must be positive")
        if not (self.f1 < self.f2 <= self.f3):
            raise ConfigError("op-amp poles must satisfy f1 < f2 <= f3")

    @property
    def f1(self) -> float:
        return self.gbp / self.a_ol

    def to_dict(self) -> dict:
        return {
            "a_ol": self.a_ol,
            "gbp": self.gbp,
            "f2": self.f2,
            "f3": self.f3,
            "v_out_max": self.v_out_max,
            "i_out_max": self.i_out_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OpAmpSpec":
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad op-amp spec: {exc}") from exc


def opamp_open_loop(spec: OpAmpSpec) -> RationalTF:
    """Three-pole open-loop gain A(s) = a_ol / prod_k (1 + s / (2 pi f_k))."""
    den = Polynomial([1.0])
    for fk in (spec.f1, spec.f2, spec.f3):
        den = den * Polynomial([1.0 / (2.0 * math.pi * fk), 1.0])
    return RationalTF(Polynomial([spec.a_ol]), den)


# Default component values reproduce the documented demonstration drive:
# divider 2/15, power gain 10.53, unity-gain current sense with a 0.1 ohm
# shunt, and the 5.1k/10k summing pair.
@dataclass(frozen=True)
class DriveConfig:
    """Component values for the complete drive chain."""

    r_v1: float = 13e3
    r_v2: float = 2e3
    r_p1: float = 1e3
    r_p2: float = 9.53e3
    r_s: float = 0.1
    r_s1: float = 1e3
    r_s2: float = 10e3
    r_1: float = 5.1e3
    r_2: float = 10e3
    r_ld: float = 10e3 / 9.0
    c_ld: float = 2.2648145447019164e-09
    r_lg: float | None = None
    c_lg: float = 1.0336343480495039e-10
    power_amp: OpAmpSpec = dataclasses.field(
        default_factory=lambda: OpAmpSpec(a_ol=562341.0, gbp=8e6, v_out_max=20.6, i_out_max=10.0)
    )
    signal_amp: OpAmpSpec = dataclasses.field(
        default_factory=lambda: OpAmpSpec(a_ol=1e6, gbp=18e6, v_out_max=14.7, i_out_max=0.03)
    )

    def __post_init__(self):
        for name in ("r_v1", "r_v2", "r_p1", "r_p2", "r_s", "r_s1", "r_s2",
                     "r_1", "r_2", "r_ld", "c_ld", "c_lg"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"drive.{name} must be positive")
        if self.r_lg is not None and not self.r_lg > 0:
            raise ConfigError("drive.r_lg must be positive or null (infinite)")

    def to_dict(self) -> dict:
        d = {
            name: getattr(self, name)
            for name in ("r_v1", "r_v2", "r_p1", "r_p2", "r_s", "r_s1", "r_s2",
                         "r_1", "r_2", "r_ld", "c_ld", "r_lg", "c_lg")
        }
        d["power_amp"] = self.power_amp.to_dict()
        d["signal_amp"] = self.signal_amp.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DriveConfig":
        d = dict(d)
        for amp in ("power_amp", "signal_amp"):
            if amp in d:
                d[amp] = OpAmpSpec.from_dict(d[amp])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad drive config: {exc}") from exc


@dataclass(frozen=True)
class LeadDesign:
    """Lead-network geometry: alpha, tau, and the resulting phase peak."""

    alpha: float
    tau: float

    @property
    def phi_max(self) -> float:
        """Peak phase lead in degrees, asin((alpha-1)/(alpha+1))."""
        return math.degrees(math.asin((self.alpha - 1.0) / (self.alpha + 1.0)))

    @property
    def omega_max(self) -> float:
        """Frequency of the phase peak in rad/s, 1/(tau sqrt(alpha))."""
        return 1.0 / (self.tau * math.sqrt(self.alpha))


@dataclass(frozen=True)
class LeadLagSpec:
    """Synthesis targets for design_lead_lag."""

    alpha: float = 10.0
    f_c_hz: float = 20e3
    r_1: float = 5.1e3
    r_2: float = 10e3

    def __post_init__(self):
        if not self.alpha > 1:
            raise ConfigError("design.alpha must exceed 1")
        if not self.f_c_hz > 0:
            raise ConfigError("design.f_c_hz must be positive")
        if not (self.r_1 > 0 and self.r_2 > 0):
            raise ConfigError("design resistors must be positive")


def divider_gain(cfg: DriveConfig) -> RationalTF:
    return tf_const(cfg.r_v2 / (cfg.r_v1 + cfg.r_v2))


def power_stage(cfg: DriveConfig, ideal: bool = True) -> RationalTF:
    """Non-inverting power stage, gain 1 + r_p2/r_p1 in the ideal limit."""
    if ideal:
        return tf_const(1.0 + cfg.r_p2 / cfg.r_p1)
    a1 = opamp_open_loop(cfg.power_amp)
    beta = cfg.r_p1 / (cfg.r_p1 + cfg.r_p2)
    return a1 / (1.0 + a1 * beta)


def current_sensor(cfg: DriveConfig, ideal: bool = True) -> RationalTF:
    """Shunt plus difference buffer; DC transimpedance r_s * r_s2 / r_s1."""
    if ideal:
        return tf_const(cfg.r_s * cfg.r_s2 / cfg.r_s1)
    a2 = opamp_open_loop(cfg.signal_amp)
    k = cfg.r_s1 / (cfg.r_s1 + cfg.r_s2)
    return (cfg.r_s * k) * a2 / (1.0 + (k * cfg.r_s1 / cfg.r_s2) * a2)


def _lag_impedance(cfg: DriveConfig, c_lg: float | None = None) -> RationalTF:
    c = cfg.c_lg if c_lg is None else c_lg
    if cfg.r_lg is None:
        return RationalTF(Polynomial([1.0]), Polynomial([c, 0.0]))
    return RationalTF(Polynomial([cfg.r_lg]), Polynomial([cfg.r_lg * c, 1.0]))


def lag_tf(cfg: DriveConfig, ideal: bool = True) -> RationalTF:
    """Compensator feedback impedance as a transfer block.

    With r_lg infinite (None) the ideal form is the pure integrator
    1/(c_lg s); otherwise r_lg / (r_lg c_lg s + 1). The non-ideal form
    keeps the summing op-amp in the loop: Zp A2 / (1 + (Zp/Zf) A2) with
    Zp the parallel combination of the three summing impedances.
    """
    zf = _lag_impedance(cfg)
    if ideal:
        return zf
    z1 = tf_const(cfg.r_1)
    z2 = _lead_impedance(cfg)
    a2 = opamp_open_loop(cfg.signal_amp)
    # Zp A2 / (1 + (Zp/Zf) A2) rewritten with Yp = 1/Z1 + 1/Z2 + 1/Zf to
    # avoid forming the triple parallel combination explicitly.
    yp = 1.0 / z1 + 1.0 / z2 + 1.0 / zf
    return a2 / (yp + (1.0 / zf) * a2)


def _lead_impedance(cfg: DriveConfig) -> RationalTF:
    """Feedback-branch network: r_2 in parallel with (r_ld + 1/(c_ld s))."""
    tau = cfg.r_ld * cfg.c_ld
    alpha = 1.0 + cfg.r_2 / cfg.r_ld
    return RationalTF(
        Polynomial([cfg.r_2 * tau, cfg.r_2]), Polynomial([alpha * tau, 1.0])
    )


def lead_tf(cfg: DriveConfig) -> tuple[RationalTF, LeadDesign]:
    """Lead admittance (1/r_2)(alpha tau s + 1)/(tau s + 1) and its geometry."""
    tau = cfg.r_ld * cfg.c_ld
    alpha = 1.0 + cfg.r_2 / cfg.r_ld
    tf = RationalTF(
        Polynomial([alpha * tau / cfg.r_2, 1.0 / cfg.r_2]), Polynomial([tau, 1.0])
    )
    return tf, LeadDesign(alpha=alpha, tau=tau)


def design_lead_lag(
    spec: LeadLagSpec, plant: RationalTF, cfg: DriveConfig
) -> DriveConfig:
    """Size the lead network and the lag capacitor for a crossover target.

    The lead is placed so its phase peak lands on f_c: r_ld = r_2/(alpha-1)
    and c_ld = 1/(omega_c r_ld sqrt(alpha)). The lag capacitor is then the
    unique value that brings the loop magnitude through unity at f_c,
    found by bisection on log c_lg.
    """
    w_c = 2.0 * math.pi * spec.f_c_hz
    r_ld = spec.r_2 / (spec.alpha - 1.0)
    c_ld = 1.0 / (w_c * r_ld * math.sqrt(spec.alpha))
    cfg = dataclasses.replace(
        cfg, r_1=spec.r_1, r_2=spec.r_2, r_ld=r_ld, c_ld=c_ld
    )

    lead, _ = lead_tf(cfg)
    try:
        fixed = abs(
            tf_eval(lead, 1j * w_c)
            * tf_eval(plant, 1j * w_c)
            * divider_gain(cfg).dc_gain()
            * power_stage(cfg).dc_gain()
        )
    except Exception as exc:
        raise DesignError(f"loop gain could not be evaluated at f_c: {exc}") from exc

    def excess(c: float) -> float:
        lag = _lag_impedance(cfg, c)
        return abs(tf_eval(lag, 1j * w_c)) * fixed - 1.0

    lo, hi = 1e-13, 1e-6
    if excess(lo) < 0 or excess(hi) > 0:
        raise DesignError(
            "no lag capacitor in [1e-13, 1e-6] F brings the loop through "
            f"unity at {spec.f_c_hz:.6g} Hz"
        )
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-14:
            break
    return dataclasses.replace(cfg, c_lg=math.sqrt(lo * hi))


@dataclass(frozen=True)
class DriveBlocks:
    """The four loop blocks of the assembled drive: plant P, forward C,
    feedback H, and reference shaping F."""

    p: RationalTF
    c: RationalTF
    h: RationalTF
    f: RationalTF

    @property
    def loop(self) -> RationalTF:
        return self.p * self.c * self.h


def assemble_drive(
    cfg: DriveConfig,
    plant: RationalTF,
    fidelity: str = "ideal",
    lead_in_forward: bool = False,
) -> DriveBlocks:
    """Compose the drive chain around an electrical plant model.

    The reference enters the summing node through r_1 (F = 1/r_1) and the
    sensed current through the lead network (H = sensor * lead). With
    lead_in_forward=True the lead shape moves into the forward path and
    the feedback returns through a plain r_2, which leaves the loop
    transmission unchanged but reshapes the reference-to-drive gang.
    """
    if fidelity not in ("ideal", "nonideal"):
        raise ConfigError(f"unknown fidelity '{fidelity}'")
    ideal = fidelity == "ideal"
    lag = lag_tf(cfg, ideal=ideal)
    c = lag * divider_gain(cfg) * power_stage(cfg, ideal=ideal)
    sensor = current_sensor(cfg, ideal=ideal)
    lead, geom = lead_tf(cfg)
    if lead_in_forward:
        shape = RationalTF(
            Polynomial([geom.alpha * geom.tau, 1.0]), Polynomial([geom.tau, 1.0])
        )
        c = c * shape
        h = sensor * tf_const(1.0 / cfg.r_2)
    else:
        h = sensor * lead
    f = tf_const(1.0 / cfg.r_1)
    return DriveBlocks(p=plant, c=c, h=h, f=f)
