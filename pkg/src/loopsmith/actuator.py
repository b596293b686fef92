"""Rotary actuator model: magnetic restoration, damping, and a coil with
eddy-current branches.

The mechanical side is
    J dw/dt = -k_d w - k_rest sin(2 theta) + k_t i_c cos(theta)
and the electrical side is a series resistance feeding the main coil
inductance in parallel with Foster (r_k, l_k) eddy branches, with back-emf
k_b w cos(theta). Linearizations are taken about theta = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .lti import Polynomial, RationalTF, StateSpaceModel, tf_const

__all__ = [
    "ActuatorParams",
    "electrical_tf",
    "mechanical_tf",
    "linear_ss_current",
    "linear_ss_voltage",
    "nonlinear_derivs",
    "initial_state",
]


@dataclass(frozen=True)
class ActuatorParams:
    """Physical actuator constants.

    k_rest is the restoration torque amplitude (torque = -k_rest sin 2theta),
    so the small-angle stiffness is 2 k_rest. r_c and r_sense add in series
    for the electrical loop; eddy_branches are (r_k, l_k) pairs in parallel
    with the main inductance l_c0.
    """

    j: float = 1.4810102828023604e-09
    k_d: float = 4.412322631845183e-07
    k_t: float = 0.0018725321041768858
    k_b: float = 0.0018725321041768858
    k_rest: float = 0.0006385334475243191
    r_c: float = 1.7599517651523813
    r_sense: float = 0.1
    l_c0: float = 0.0002799989509041067
    eddy_branches: tuple[tuple[float, float], ...] = ((135.0, 5e-05),)

    def __post_init__(self):
        for name in ("j", "k_d", "k_t", "k_b", "k_rest", "r_c", "r_sense", "l_c0"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"actuator.{name} must be positive")
        branches = tuple(tuple(float(v) for v in b) for b in self.eddy_branches)
        for r, l in branches:
            if not (r > 0 and l > 0):
                raise ConfigError("eddy branch values must be positive")
        object.__setattr__(self, "eddy_branches", branches)

    @property
    def r_total(self) -> float:
        return self.r_c + self.r_sense

    @property
    def a_d(self) -> float:
        """Damping rate k_d / J in 1/s."""
        return self.k_d / self.j

    @property
    def a_s(self) -> float:
        """Small-angle stiffness rate 2 k_rest / J in 1/s^2."""
        return 2.0 * self.k_rest / self.j

    @property
    def b_t(self) -> float:
        """Torque gain k_t / J in rad/(s^2 A)."""
        return self.k_t / self.j

    def to_dict(self) -> dict:
        return {
            "j": self.j,
            "k_d": self.k_d,
            "k_t": self.k_t,
            "k_b": self.k_b,
            "k_rest": self.k_rest,
            "r_c": self.r_c,
            "r_sense": self.r_sense,
            "l_c0": self.l_c0,
            "eddy_branches": [list(b) for b in self.eddy_branches],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ActuatorParams":
        d = dict(d)
        if "eddy_branches" in d:
            d["eddy_branches"] = tuple(tuple(b) for b in d["eddy_branches"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad actuator params: {exc}") from exc


def electrical_tf(p: ActuatorParams) -> RationalTF:
    """Coil admittance i_c(s)/v_c(s) with the rotor held still.

    Z(s) = r_total + (s l_c0 || (r_1 + s l_1) || ...), returned as 1/Z.
    """
    y = RationalTF(Polynomial([1.0]), Polynomial([p.l_c0, 0.0]))
    for r_k, l_k in p.eddy_branches:
        y = y + RationalTF(Polynomial([1.0]), Polynomial([l_k, r_k]))
    z = tf_const(p.r_total) + 1.0 / y
    return 1.0 / z


def mechanical_tf(p: ActuatorParams) -> RationalTF:
    """Small-angle theta(s)/i_c(s) = b_t / (s^2 + a_d s + a_s)."""
    return RationalTF(
        Polynomial([p.b_t]), Polynomial([1.0, p.a_d, p.a_s])
    )


def linear_ss_current(p: ActuatorParams) -> StateSpaceModel:
    """Current-drive linearization, states (theta, omega), input i_c."""
    a = np.array([[0.0, 1.0], [-p.a_s, -p.a_d]])
    b = np.array([[0.0], [p.b_t]])
    c = np.array([[1.0, 0.0]])
    return StateSpaceModel(a, b, c)


def linear_ss_voltage(p: ActuatorParams) -> StateSpaceModel:
    """Voltage-drive linearization.

    States are (theta, omega, i_c, i_1, ..., i_nb) with i_k the eddy branch
    currents; input v_c, output theta. The inductor-node voltage
    v_l = v_c - k_b omega - r_total i_c drives d(i_c)/dt through l_c0 plus
    every branch, since i_c is the sum of the parallel-leg currents.
    """
    nb = len(p.eddy_branches)
    n = 3 + nb
    a = np.zeros((n, n))
    b = np.zeros((n, 1))
    a[0, 1] = 1.0
    a[1, 0] = -p.a_s
    a[1, 1] = -p.a_d
    a[1, 2] = p.b_t
    # v_l coefficient rows: d(i_c)/dt = v_l / l_c0 + sum_k (v_l - r_k i_k)/l_k
    g = 1.0 / p.l_c0 + sum(1.0 / l_k for _, l_k in p.eddy_branches)
    a[2, 1] = -p.k_b * g
    a[2, 2] = -p.r_total * g
    b[2, 0] = g
    for k, (r_k, l_k) in enumerate(p.eddy_branches):
        a[2, 3 + k] = -r_k / l_k
        a[3 + k, 1] = -p.k_b / l_k
        a[3 + k, 2] = -p.r_total / l_k
        a[3 + k, 3 + k] = -r_k / l_k
        b[3 + k, 0] = 1.0 / l_k
    c = np.zeros((1, n))
    c[0, 0] = 1.0
    return StateSpaceModel(a, b, c)


def initial_state(p: ActuatorParams, drive: str, theta0: float = 0.0) -> list[float]:
    """Rest state at angle theta0 for the given drive kind."""
    if drive == "current":
        return [theta0, 0.0]
    if drive == "voltage":
        return [theta0, 0.0, 0.0] + [0.0] * len(p.eddy_branches)
    raise ConfigError(f"unknown drive kind '{drive}'")


def nonlinear_derivs(
    x: tuple[float, ...] | list[float],
    p: ActuatorParams,
    *,
    v_c: float | None = None,
    i_c: float | None = None,
) -> list[float]:
    """Full nonlinear state derivatives.

    Exactly one of v_c or i_c selects the drive. Current drive uses states
    (theta, omega); voltage drive appends (i_c, i_1, ..., i_nb). Plain
    floats throughout: this sits inside the integrator hot loop.
    """
    if (v_c is None) == (i_c is None):
        raise ConfigError("specify exactly one of v_c or i_c")
    theta = x[0]
    omega = x[1]
    cos_t = math.cos(theta)
    if i_c is None:
        i_c = x[2]
    torque = -p.k_d * omega - p.k_rest * math.sin(2.0 * theta) + p.k_t * i_c * cos_t
    d_omega = torque / p.j
    if v_c is None:
        return [omega, d_omega]
    v_l = v_c - p.k_b * omega * cos_t - p.r_total * i_c
    d_ic = v_l / p.l_c0
    out = [omega, d_omega, 0.0]
    for k, (r_k, l_k) in enumerate(p.eddy_branches):
        d_ik = (v_l - r_k * x[3 + k]) / l_k
        d_ic += d_ik
        out.append(d_ik)
    out[2] = d_ic
    return out
