"""Closed-loop transfer-function family for the current drive.

For loop blocks P (plant), C (forward compensation), H (feedback path) and
reference gain F, the six gangs are the closed-loop maps from reference,
disturbance, and sensor noise to the output and the drive signal. All six
are built over one shared denominator so algebraic identities between them
hold exactly, coefficient for coefficient.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .drive import DriveBlocks
from .errors import MetricError, SingularLoopError
from .lti import (
    FrequencyResponse,
    Margins,
    RationalTF,
    bandwidth_3db,
    bode,
    margins,
    step_response,
    tf_eval,
)

__all__ = [
    "GangSet",
    "six_gangs",
    "peak_magnitude",
    "sensitivity_report",
    "injection_step",
    "gang_bode",
]

GANG_LABELS: tuple[tuple[str, str], ...] = (
    ("reference_to_output", "FPC/(1+PCH)"),
    ("reference_to_drive", "FC/(1+PCH)"),
    ("disturbance_to_output", "P/(1+PCH)"),
    ("sensitivity", "1/(1+PCH)"),
    ("noise_to_drive", "CH/(1+PCH)"),
    ("complementary", "PCH/(1+PCH)"),
)


@dataclass(frozen=True)
class GangSet:
    """The six closed-loop maps plus the open loop they came from."""

    reference_to_output: RationalTF
    reference_to_drive: RationalTF
    disturbance_to_output: RationalTF
    sensitivity: RationalTF
    noise_to_drive: RationalTF
    complementary: RationalTF
    loop: RationalTF

    def items(self) -> list[tuple[str, str, RationalTF]]:
        return [(k, label, getattr(self, k)) for k, label in GANG_LABELS]


def six_gangs(blocks: DriveBlocks) -> GangSet:
    """Form all six gangs over the common denominator d_L + n_L.

    Numerators and the denominator are assembled from the block
    polynomials directly, with no cancellation, so that
    sensitivity + complementary = 1 holds exactly.
    """
    n_p, d_p = blocks.p.num, blocks.p.den
    n_c, d_c = blocks.c.num, blocks.c.den
    n_h, d_h = blocks.h.num, blocks.h.den
    n_f, d_f = blocks.f.num, blocks.f.den
    d_l = d_p * d_c * d_h
    n_l = n_p * n_c * n_h
    d = d_l + n_l
    if d.is_zero:
        raise SingularLoopError("1 + P*C*H is identically zero")
    return GangSet(
        reference_to_output=RationalTF(n_f * n_p * n_c * d_h, d_f * d),
        reference_to_drive=RationalTF(n_f * n_c * d_p * d_h, d_f * d),
        disturbance_to_output=RationalTF(n_p * d_c * d_h, d),
        sensitivity=RationalTF(d_l, d),
        noise_to_drive=RationalTF(n_c * n_h * d_p, d),
        complementary=RationalTF(n_l, d),
        loop=RationalTF(n_l, d_l),
    )


def peak_magnitude(
    g: RationalTF,
    f_lo: float = 1.0,
    f_hi: float = 1e7,
    points_per_decade: int = 400,
) -> tuple[float, float]:
    """Peak of |G(j 2 pi f)| over [f_lo, f_hi] in Hz.

    Grid search on a log grid, then a bounded scalar minimization between
    the grid neighbors of the best point. Returns (f_peak, |G| at peak).
    """
    decades = math.log10(f_hi / f_lo)
    n = max(int(decades * points_per_decade) + 1, 16)
    lf = np.linspace(math.log10(f_lo), math.log10(f_hi), n)
    mag = np.abs([tf_eval(g, 2j * math.pi * 10.0**v) for v in lf])
    k = int(np.argmax(mag))
    lo = lf[max(k - 1, 0)]
    hi = lf[min(k + 1, n - 1)]

    def neg(v: float) -> float:
        return -abs(tf_eval(g, 2j * math.pi * 10.0**v))

    res = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    if not res.success:
        raise MetricError(f"peak search failed: {res.message}")
    f_peak = 10.0**res.x
    return f_peak, -res.fun


def sensitivity_report(gangs: GangSet, f_lo: float = 1.0, f_hi: float = 1e7) -> dict:
    """Stability and robustness summary of a gang set.

    Collects loop margins, the sensitivity and complementary peaks, the
    tracking-gang DC gain and -3 dB bandwidth, and the drive-gang DC gain.
    All gains in dB, frequencies in Hz.
    """
    m: Margins = margins(gangs.loop)
    fs_peak, ms = peak_magnitude(gangs.sensitivity, f_lo, f_hi)
    ft_peak, mt = peak_magnitude(gangs.complementary, f_lo, f_hi)
    track = gangs.reference_to_output
    bw = bandwidth_3db(track, f_lo=1.0, f_hi=1e7)
    return {
        "gain_crossover_hz": m.gain_crossover,
        "phase_margin_deg": m.phase_margin,
        "gain_margin_db": m.gain_margin,
        "m_s_db": 20.0 * math.log10(ms),
        "m_s_peak_hz": fs_peak,
        "m_t_db": 20.0 * math.log10(mt),
        "m_t_peak_hz": ft_peak,
        "tracking_dc_db": 20.0 * math.log10(abs(track.dc_gain())),
        "tracking_bandwidth_hz": bw,
        "drive_dc_db": 20.0 * math.log10(abs(gangs.reference_to_drive.dc_gain())),
    }


def injection_step(
    g: RationalTF,
    amplitude: float = 0.2,
    t_final: float = 2e-4,
    n: int = 2001,
) -> tuple[np.ndarray, np.ndarray]:
    """Response to a step of the given amplitude, e.g. a 0.2 V injection
    at the disturbance or sensor summing point."""
    t = np.linspace(0.0, t_final, n)
    y = step_response(g, t)
    return t, amplitude * y


def gang_bode(gangs: GangSet, f_lo: float = 1.0, f_hi: float = 1e7,
              points_per_decade: int = 100) -> dict[str, FrequencyResponse]:
    """Frequency responses of all six gangs on a shared grid."""
    decades = math.log10(f_hi / f_lo)
    n = max(int(decades * points_per_decade) + 1, 16)
    freq = np.logspace(math.log10(f_lo), math.log10(f_hi), n)
    return {k: bode(tf, freq) for k, _, tf in gangs.items()}
