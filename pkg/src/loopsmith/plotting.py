"""Matplotlib figure rendering for CLI artifacts.

Figures are written headless and deterministically: the Agg backend, a
fixed SVG hash salt, and no embedded creation date, so re-running a
command on the same configuration reproduces byte-identical files.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "loopsmith"

import matplotlib.pyplot as plt
import numpy as np

from .lti import FrequencyResponse, Margins
from .sim import SimTrace

__all__ = [
    "save_figure",
    "plot_bode",
    "plot_gangs",
    "plot_trace",
    "plot_step",
]


def save_figure(fig, path) -> None:
    path = str(path)
    meta = {"Date": None} if path.endswith(".svg") else None
    fig.savefig(path, metadata=meta)
    plt.close(fig)


def plot_bode(fr: FrequencyResponse, path, title: str = "",
              margins: Margins | None = None) -> None:
    """Magnitude/phase pair, optionally annotated with the crossover."""
    fig, (ax_m, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax_m.semilogx(fr.freq_hz, fr.mag_db)
    ax_m.axhline(0.0, color="0.6", lw=0.8)
    ax_m.set_ylabel("magnitude [dB]")
    ax_m.grid(True, which="both", alpha=0.3)
    ax_p.semilogx(fr.freq_hz, fr.phase_deg)
    ax_p.axhline(-180.0, color="0.6", lw=0.8)
    ax_p.set_ylabel("phase [deg]")
    ax_p.set_xlabel("frequency [Hz]")
    ax_p.grid(True, which="both", alpha=0.3)
    if margins is not None and margins.gain_crossover is not None:
        for ax in (ax_m, ax_p):
            ax.axvline(margins.gain_crossover, color="tab:red", lw=0.8, ls="--")
        ax_p.set_title(
            f"f_c = {margins.gain_crossover:.4g} Hz, "
            f"PM = {margins.phase_margin:.1f} deg",
            fontsize=9,
        )
    if title:
        ax_m.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)


def plot_gangs(responses: dict[str, FrequencyResponse], path,
               title: str = "") -> None:
    """Overlay of the gang magnitudes on one axis."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for name, fr in responses.items():
        ax.semilogx(fr.freq_hz, fr.mag_db, label=name.replace("_", " "))
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("magnitude [dB]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)


def plot_trace(trace: SimTrace, path, title: str = "") -> None:
    """Angle tracking, coil current, and drive voltage against time."""
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7, 7))
    t_ms = trace.t * 1e3
    axes[0].plot(t_ms, np.degrees(trace.ref), "0.5", lw=0.9, label="reference")
    axes[0].plot(t_ms, np.degrees(trace.theta), label="angle")
    axes[0].set_ylabel("angle [deg]")
    axes[0].legend(fontsize=8)
    axes[1].plot(t_ms, trace.i_c)
    axes[1].set_ylabel("coil current [A]")
    axes[2].plot(t_ms, trace.v_c)
    axes[2].set_ylabel("coil voltage [V]")
    axes[2].set_xlabel("time [ms]")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    save_figure(fig, path)


def plot_step(t: np.ndarray, y: np.ndarray, path, ylabel: str,
              title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(t * 1e6, y)
    ax.set_xlabel("time [us]")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)
