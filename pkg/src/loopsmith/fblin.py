"""Feedback-linearizing position control.

Cancelling the damping and restoration torques and dividing by the
angle-dependent torque gain turns the rotor into a double integrator,
which a PD-shaped outer law places exactly:

    i_c = (v - f(theta, w)) / g(theta),  v = G r - k1 theta - k2 w.

The loop transfer seen by the outer law is (k2 s + k1)/s^2 in the ideal
case; a realistic variant low-passes the velocity estimate and accounts
for one sample of computational delay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actuator import ActuatorParams
from .errors import ConfigError, DesignError, NoCrossoverError
from .lti import Margins, Polynomial, RationalTF, bandwidth_3db, margins, tf_eval

__all__ = [
    "fl_gains",
    "fl_transform",
    "FLController",
    "fl_loop_tfs",
    "fl_margins",
    "VelocityEstimator",
]


def fl_gains(omega_n: float, zeta: float) -> tuple[float, float, float]:
    """Outer-law gains (k1, k2, G) placing the pair at zeta, omega_n.

    G = omega_n^2 makes the ideal closed loop exactly
    omega_n^2 / (s^2 + 2 zeta omega_n s + omega_n^2).
    """
    if not (omega_n > 0 and zeta > 0):
        raise DesignError("omega_n and zeta must be positive")
    return omega_n**2, 2.0 * zeta * omega_n, omega_n**2


def fl_transform(
    p: ActuatorParams,
    theta: float,
    omega: float,
    v: float,
    guard_deg: float = 5.0,
) -> float:
    """Invert the rotor dynamics: current that realizes acceleration v.

    The torque gain collapses as cos(theta) toward +/-90 deg, so the
    angle used in the division is clamped guard_deg short of +/-90 deg.
    """
    f = (-p.k_d * omega - p.k_rest * math.sin(2.0 * theta)) / p.j
    limit = math.radians(90.0 - guard_deg)
    theta_eff = max(-limit, min(limit, theta))
    g = p.k_t * math.cos(theta_eff) / p.j
    return (v - f) / g


@dataclass
class FLController:
    """Stateless feedback-linearizing position law."""

    p: ActuatorParams
    omega_n: float
    zeta: float
    guard_deg: float = 5.0

    def __post_init__(self):
        self.k1, self.k2, self.g = fl_gains(self.omega_n, self.zeta)

    def current_command(self, ref: float, theta: float, omega: float) -> float:
        v = self.g * ref - self.k1 * theta - self.k2 * omega
        return fl_transform(self.p, theta, omega, v, self.guard_deg)


def fl_loop_tfs(
    omega_n: float, zeta: float, w_f: float | None = None
) -> tuple[RationalTF, RationalTF]:
    """Loop and closed-loop transfer functions of the linearized outer law.

    With w_f set, the velocity channel passes through w_f/(s + w_f) first.
    Both functions are built in reduced form so no spurious integrator
    pair survives into realizations.
    """
    k1, k2, g = fl_gains(omega_n, zeta)
    if w_f is None:
        loop = RationalTF(Polynomial([k2, k1]), Polynomial([1.0, 0.0, 0.0]))
        closed = RationalTF(Polynomial([g]), Polynomial([1.0, k2, k1]))
        return loop, closed
    if not w_f > 0:
        raise DesignError("velocity filter corner w_f must be positive")
    loop = RationalTF(
        Polynomial([k1 + k2 * w_f, k1 * w_f]),
        Polynomial([1.0, w_f, 0.0, 0.0]),
    )
    closed = RationalTF(
        Polynomial([g, g * w_f]),
        Polynomial([1.0, w_f, k1 + k2 * w_f, k1 * w_f]),
    )
    return loop, closed


def _delayed_gain_margin(loop: RationalTF, f_c: float, delay: float) -> float | None:
    """Gain margin of loop * e^{-s delay}: first -180 deg crossing past f_c."""
    f = f_c
    phase_prev = None
    for _ in range(400):
        f *= 1.02
        ph = math.degrees(np.angle(tf_eval(loop, 2j * math.pi * f))) - 360.0 * f * delay
        while phase_prev is not None and ph - phase_prev > 180.0:
            ph -= 360.0
        if phase_prev is not None and ph <= -180.0 < phase_prev:
            lo, hi = f / 1.02, f
            for _ in range(80):
                mid = math.sqrt(lo * hi)
                pm = math.degrees(np.angle(tf_eval(loop, 2j * math.pi * mid)))
                pm -= 360.0 * mid * delay
                pm -= 360.0 * round((pm - phase_prev) / 360.0)
                if pm <= -180.0:
                    hi = mid
                else:
                    lo = mid
            f180 = math.sqrt(lo * hi)
            return -20.0 * math.log10(abs(tf_eval(loop, 2j * math.pi * f180)))
        phase_prev = ph
    return None


def fl_margins(
    omega_n: float,
    zeta: float,
    w_f: float | None = None,
    delay: float = 0.0,
) -> Margins:
    """Stability margins of the outer loop, optionally with a velocity
    filter and a pure time delay of ``delay`` seconds."""
    if delay < 0.0:
        raise ConfigError(f"delay must be non-negative, got {delay}")
    loop, closed = fl_loop_tfs(omega_n, zeta, w_f)
    base = margins(loop)
    if base.gain_crossover is None:
        raise NoCrossoverError("feedback-linearized loop has no gain crossover")
    f_c = base.gain_crossover
    if delay == 0.0:
        pm = base.phase_margin
        gm = base.gain_margin
    else:
        pm = base.phase_margin - 360.0 * f_c * delay
        gm = _delayed_gain_margin(loop, f_c, delay)
    bw = bandwidth_3db(closed, f_lo=1.0, f_hi=1e6)
    return Margins(
        gain_crossover=f_c, phase_margin=pm, gain_margin=gm, bandwidth_3db=bw
    )


@dataclass
class VelocityEstimator:
    """Backward difference followed by a forward-Euler low-pass filter."""

    t_s: float
    w_f: float
    _theta_prev: float | None = field(default=None, repr=False)
    _w: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if not (self.t_s > 0 and self.w_f > 0):
            raise ConfigError("sample time and filter corner must be positive")
        if self.t_s * self.w_f >= 2.0:
            raise ConfigError(
                f"velocity filter unstable at this rate: t_s * w_f = "
                f"{self.t_s * self.w_f:.3g} must be below 2"
            )

    def reset(self, theta: float = 0.0, omega: float = 0.0) -> None:
        self._theta_prev = theta
        self._w = omega

    def update(self, theta: float) -> float:
        if self._theta_prev is None:
            self._theta_prev = theta
        raw = (theta - self._theta_prev) / self.t_s
        self._theta_prev = theta
        self._w += self.t_s * self.w_f * (raw - self._w)
        return self._w
