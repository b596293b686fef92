"""Hybrid closed-loop simulation of the actuator under digital control.

The continuous rotor and coil dynamics are integrated with fixed-step
RK4; a discrete controller runs at f_s between integration bursts. The
digital side models what the hardware does: ADC quantization of the
angle, a whole-sample computation delay, DAC clamping, and drive
saturation. The DAC chain gain maps controller output in physical units
onto the +/- dac_range volts actually written.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .actuator import ActuatorParams, nonlinear_derivs
from .errors import ConfigError, DesignError, DivergenceError, MetricError
from .fblin import FLController, VelocityEstimator
from .lti import FrequencyResponse, RationalTF, _readonly, _realize
from .poleplace import PositionDesign, discretize_forward_euler

__all__ = [
    "Reference",
    "Saturation",
    "SimConfig",
    "CurrentLoopModel",
    "PolePlaceVoltageController",
    "PolePlaceCurrentController",
    "FLCurrentController",
    "OpenLoopController",
    "SimTrace",
    "simulate",
    "StepMetrics",
    "step_metrics",
    "frf_bin",
    "sine_sweep_frf",
    "rk4_endpoint",
]

# Full-scale DAC output through the divider and power stage lands on the
# coil at 0.4 * 10.53 volts per volt; the current-drive chain is scaled so
# full scale commands the drive's DC amps-per-volt gain.
DAC_GAIN_VOLTAGE = 0.4 * 10.53
DAC_GAIN_CURRENT = 10e3 / 5.1e3


@dataclass(frozen=True)
class Reference:
    """Reference trajectory: step, square, or sine, amplitude in the
    controller's command units (radians for position loops)."""

    kind: str = "step"
    amplitude: float = math.radians(10.0)
    frequency_hz: float = 0.0

    def __post_init__(self):
        if self.kind not in ("step", "square", "sine"):
            raise ConfigError(f"unknown reference kind '{self.kind}'")
        if self.kind != "step" and not self.frequency_hz > 0:
            raise ConfigError(f"{self.kind} reference needs frequency_hz > 0")

    def __call__(self, t: float) -> float:
        if self.kind == "step":
            return self.amplitude
        phase = math.sin(2.0 * math.pi * self.frequency_hz * t)
        if self.kind == "square":
            return self.amplitude if phase >= 0.0 else -self.amplitude
        return self.amplitude * phase

    def to_dict(self) -> dict:
        return {"kind": self.kind, "amplitude": self.amplitude,
                "frequency_hz": self.frequency_hz}


@dataclass(frozen=True)
class Saturation:
    """Physical drive limits: coil volts and coil amps."""

    v_max: float = 20.6
    i_max: float = 9.8

    def __post_init__(self):
        if not (self.v_max > 0 and self.i_max > 0):
            raise ConfigError("saturation limits must be positive")

    def to_dict(self) -> dict:
        return {"v_max": self.v_max, "i_max": self.i_max}


@dataclass(frozen=True)
class SimConfig:
    """Timing and signal-chain settings for one simulation run.

    dt must divide the controller period into at least 10 integration
    substeps; it defaults to a twentieth of it. adc_bits of None disables
    quantization entirely.
    """

    f_s: float = 160e3
    dt: float | None = None
    duration: float = 0.02
    reference: Reference = field(default_factory=Reference)
    saturation: Saturation = field(default_factory=Saturation)
    adc_bits: int | None = 16
    adc_full_scale_rad: float = math.pi / 9
    dac_range: float = 5.0
    delay_samples: int = 1

    def __post_init__(self):
        if not self.f_s > 0:
            raise ConfigError("sim.f_s must be positive")
        if not self.duration > 0:
            raise ConfigError("sim.duration must be positive")
        if self.dt is None:
            object.__setattr__(self, "dt", 1.0 / (20.0 * self.f_s))
        ratio = 1.0 / (self.f_s * self.dt)
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 10:
            raise ConfigError(
                "sim.dt must divide the sample period into at least 10 "
                f"integration substeps (got ratio {ratio:.6g})"
            )
        if self.adc_bits is not None and not 8 <= self.adc_bits <= 24:
            raise ConfigError("sim.adc_bits must be in [8, 24] or null")
        if not self.adc_full_scale_rad > 0:
            raise ConfigError("sim.adc_full_scale_rad must be positive")
        if not self.dac_range > 0:
            raise ConfigError("sim.dac_range must be positive")
        if self.delay_samples < 0:
            raise ConfigError("sim.delay_samples must be non-negative")

    @property
    def substeps(self) -> int:
        return int(round(1.0 / (self.f_s * self.dt)))

    @property
    def n_samples(self) -> int:
        return max(int(round(self.duration * self.f_s)), 2)

    def to_dict(self) -> dict:
        return {
            "f_s": self.f_s,
            "dt": self.dt,
            "duration": self.duration,
            "reference": self.reference.to_dict(),
            "saturation": self.saturation.to_dict(),
            "adc_bits": self.adc_bits,
            "adc_full_scale_rad": self.adc_full_scale_rad,
            "dac_range": self.dac_range,
            "delay_samples": self.delay_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        d = dict(d)
        if "reference" in d:
            d["reference"] = Reference(**d["reference"])
        if "saturation" in d:
            d["saturation"] = Saturation(**d["saturation"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad sim config: {exc}") from exc


@dataclass(frozen=True)
class CurrentLoopModel:
    """How the inner current loop is represented inside the plant.

    "dc" treats commanded current as instantaneous, "first_order" puts a
    single pole at bandwidth_hz in the way, and "tf" integrates an
    arbitrary proper transfer function (e.g. the full tracking gang).
    """

    kind: str = "dc"
    bandwidth_hz: float = 8222.0
    tf: RationalTF | None = None

    def __post_init__(self):
        if self.kind not in ("dc", "first_order", "tf"):
            raise ConfigError(f"unknown current-loop kind '{self.kind}'")
        if self.kind == "first_order" and not self.bandwidth_hz > 0:
            raise ConfigError("current-loop bandwidth must be positive")
        if self.kind == "tf" and self.tf is None:
            raise ConfigError("current-loop kind 'tf' needs a transfer function")


class PolePlaceVoltageController:
    """Voltage-drive state feedback with a forward-Euler full observer.

    The observer propagates one sample behind on the drive actually
    applied, so DAC clamping and the computation delay are seen.
    """

    drive = "voltage"

    def __init__(self, design: PositionDesign, t_s: float,
                 dac_gain: float = DAC_GAIN_VOLTAGE):
        if design.l is None:
            raise DesignError("voltage-drive control needs a full-order observer")
        a_e = design.model.a - design.l @ design.model.c
        phi, gamma = discretize_forward_euler(
            a_e, np.hstack([design.model.b, design.l]), t_s
        )
        self._phi = phi
        self._gu = gamma[:, 0].copy()
        self._gy = gamma[:, 1].copy()
        self._k = design.k[0].copy()
        self._g = design.g
        self.dac_gain = float(dac_gain)
        self.reset()

    def reset(self) -> None:
        self._xhat = np.zeros(self._phi.shape[0])
        self._y_prev = 0.0

    @property
    def state_estimate(self) -> np.ndarray:
        return self._xhat.copy()

    def step(self, ref: float, y: float, u_prev: float) -> float:
        self._xhat = self._phi @ self._xhat + self._gu * u_prev + self._gy * self._y_prev
        self._y_prev = y
        return self._g * ref - float(self._k @ self._xhat)


class PolePlaceCurrentController:
    """Current-drive state feedback using the reduced velocity observer."""

    drive = "current"

    def __init__(self, design: PositionDesign, t_s: float,
                 current_loop: CurrentLoopModel | None = None,
                 dac_gain: float = DAC_GAIN_CURRENT):
        if design.reduced is None:
            raise DesignError("current-drive control needs the reduced observer")
        red = design.reduced
        discretize_forward_euler(
            np.array([[red.a_hat]]), np.array([[red.b_hat, red.f_hat]]), t_s
        )
        self._red = red
        self._t_s = t_s
        self._k1 = float(design.k[0, 0])
        self._k2 = float(design.k[0, 1])
        self._g = design.g
        self.current_loop = current_loop if current_loop is not None else CurrentLoopModel()
        self.dac_gain = float(dac_gain)
        self.reset()

    def reset(self) -> None:
        self._z = 0.0
        self._y_prev = 0.0

    def step(self, ref: float, y: float, u_prev: float) -> float:
        red = self._red
        self._z += self._t_s * (
            red.a_hat * self._z + red.b_hat * self._y_prev + red.f_hat * u_prev
        )
        self._y_prev = y
        w_hat = self._z + red.l * y
        return self._g * ref - self._k1 * y - self._k2 * w_hat


class FLCurrentController:
    """Feedback-linearizing law with a filtered backward-difference
    velocity estimate."""

    drive = "current"

    def __init__(self, p: ActuatorParams, omega_n: float, zeta: float, t_s: float,
                 velocity_filter_factor: float = 10.0, guard_deg: float = 5.0,
                 current_loop: CurrentLoopModel | None = None,
                 dac_gain: float = DAC_GAIN_CURRENT):
        self._fl = FLController(p, omega_n, zeta, guard_deg)
        self._est = VelocityEstimator(t_s, velocity_filter_factor * omega_n)
        self.current_loop = current_loop if current_loop is not None else CurrentLoopModel()
        self.dac_gain = float(dac_gain)
        self.reset()

    def reset(self) -> None:
        self._est.reset()

    def step(self, ref: float, y: float, u_prev: float) -> float:
        w_hat = self._est.update(y)
        return self._fl.current_command(ref, y, w_hat)


class OpenLoopController:
    """Passes the reference straight to the drive, in physical units."""

    def __init__(self, drive: str = "voltage", dac_gain: float | None = None,
                 current_loop: CurrentLoopModel | None = None):
        if drive not in ("voltage", "current"):
            raise ConfigError(f"unknown drive kind '{drive}'")
        self.drive = drive
        if dac_gain is None:
            dac_gain = DAC_GAIN_VOLTAGE if drive == "voltage" else DAC_GAIN_CURRENT
        self.dac_gain = float(dac_gain)
        self.current_loop = current_loop if current_loop is not None else CurrentLoopModel()

    def reset(self) -> None:
        pass

    def step(self, ref: float, y: float, u_prev: float) -> float:
        return ref


@dataclass(frozen=True)
class SimTrace:
    """Signals recorded once per controller sample.

    theta and omega_r are the true continuous states at the sample
    instants; i_c is the coil current, v_c the coil voltage (for current
    drive, the quasi-static estimate r_total i_c + k_b w cos theta), and
    u_dac the value written to the DAC that sample.
    """

    t: np.ndarray
    ref: np.ndarray
    theta: np.ndarray
    omega_r: np.ndarray
    i_c: np.ndarray
    v_c: np.ndarray
    u_dac: np.ndarray
    f_s: float

    def __post_init__(self):
        for name in ("t", "ref", "theta", "omega_r", "i_c", "v_c", "u_dac"):
            object.__setattr__(self, name, _readonly(np.asarray(getattr(self, name), dtype=float)))

    _COLUMNS = ("t", "ref", "theta", "omega_r", "i_c", "v_c", "u_dac")

    def to_csv_text(self, comment: str | None = None) -> str:
        lines = []
        if comment:
            lines.append(f"# {comment}")
        lines.append(",".join(self._COLUMNS))
        cols = [getattr(self, name) for name in self._COLUMNS]
        for row in zip(*cols):
            lines.append(",".join(format(v, ".9g") for v in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text(comment))

    @classmethod
    def from_csv(cls, path) -> "SimTrace":
        import csv as _csv

        with open(path, newline="") as fh:
            rows = [r for r in _csv.reader(fh) if r and not r[0].startswith("#")]
        if tuple(rows[0]) != cls._COLUMNS:
            raise ValueError("unexpected CSV header")
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        t = data[:, 0]
        f_s = 1.0 / (t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(*(data[:, i] for i in range(7)), f_s=f_s)


def rk4_endpoint(f, x0, dt: float, n_steps: int) -> list[float]:
    """State after n_steps of classic RK4; f maps a state list to its
    derivative list."""
    x = list(x0)
    for _ in range(n_steps):
        k1 = f(x)
        x2 = [xi + 0.5 * dt * ki for xi, ki in zip(x, k1)]
        k2 = f(x2)
        x3 = [xi + 0.5 * dt * ki for xi, ki in zip(x, k2)]
        k3 = f(x3)
        x4 = [xi + dt * ki for xi, ki in zip(x, k3)]
        k4 = f(x4)
        x = [
            xi + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
            for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
        ]
    return x


def _clamp(v: float, lim: float) -> float:
    return lim if v > lim else -lim if v < -lim else v


def simulate(p: ActuatorParams, controller, cfg: SimConfig) -> SimTrace:
    """Run the hybrid loop and record one row per controller sample.

    Per sample: quantize the angle, let the controller compute a command,
    clamp it into the DAC, delay it delay_samples, apply drive saturation,
    and integrate the continuous states across the sample period with the
    drive held.
    """
    t_s = 1.0 / cfg.f_s
    dt = cfg.dt
    n_sub = cfg.substeps
    n = cfg.n_samples
    controller.reset()

    if controller.drive == "voltage":
        x = [0.0] * (3 + len(p.eddy_branches))

        def derivs(state, u):
            return nonlinear_derivs(state, p, v_c=u)

        def coil_current(state, u):
            return state[2]

        limit = cfg.saturation.v_max
    else:
        loop_model = controller.current_loop
        limit = cfg.saturation.i_max
        if loop_model.kind == "dc":
            x = [0.0, 0.0]

            def derivs(state, u):
                return nonlinear_derivs(state, p, i_c=u)

            def coil_current(state, u):
                return u

        elif loop_model.kind == "first_order":
            w_bw = 2.0 * math.pi * loop_model.bandwidth_hz
            x = [0.0, 0.0, 0.0]

            def derivs(state, u):
                base = nonlinear_derivs(state, p, i_c=state[2])
                return [base[0], base[1], w_bw * (u - state[2])]

            def coil_current(state, u):
                return state[2]

        else:
            cl_a, cl_b, cl_c, cl_d, cl_w0 = _realize(loop_model.tf)
            n_cl = cl_a.shape[0]
            x = [0.0, 0.0] + [0.0] * n_cl

            def coil_current(state, u):
                return float(cl_c @ np.asarray(state[2:])) + cl_d * u

            def derivs(state, u):
                xcl = np.asarray(state[2:])
                i_now = float(cl_c @ xcl) + cl_d * u
                base = nonlinear_derivs(state[:2], p, i_c=i_now)
                dcl = cl_w0 * (cl_a @ xcl + cl_b * u)
                return [base[0], base[1], *dcl.tolist()]

    lsb = None
    if cfg.adc_bits is not None:
        lsb = 2.0 * cfg.adc_full_scale_rad / 2**cfg.adc_bits

    t_arr = np.empty(n)
    ref_arr = np.empty(n)
    theta_arr = np.empty(n)
    omega_arr = np.empty(n)
    ic_arr = np.empty(n)
    vc_arr = np.empty(n)
    udac_arr = np.empty(n)

    dac_hist = [0.0] * n
    u_applied_prev = 0.0
    for k in range(n):
        t_k = k * t_s
        r = cfg.reference(t_k)
        theta = x[0]
        if lsb is None:
            y = theta
        else:
            y = round(_clamp(theta, cfg.adc_full_scale_rad) / lsb) * lsb
        u_cmd = controller.step(r, y, u_applied_prev)
        u_dac = _clamp(u_cmd / controller.dac_gain, cfg.dac_range)
        dac_hist[k] = u_dac
        j = k - cfg.delay_samples
        applied_dac = dac_hist[j] if j >= 0 else 0.0
        u_phys = _clamp(applied_dac * controller.dac_gain, limit)

        i_now = coil_current(x, u_phys)
        if controller.drive == "voltage":
            v_now = u_phys
        else:
            v_now = p.r_total * i_now + p.k_b * x[1] * math.cos(theta)
        t_arr[k] = t_k
        ref_arr[k] = r
        theta_arr[k] = theta
        omega_arr[k] = x[1]
        ic_arr[k] = i_now
        vc_arr[k] = v_now
        udac_arr[k] = u_dac

        for _ in range(n_sub):
            k1 = derivs(x, u_phys)
            x2 = [xi + 0.5 * dt * ki for xi, ki in zip(x, k1)]
            k2 = derivs(x2, u_phys)
            x3 = [xi + 0.5 * dt * ki for xi, ki in zip(x, k2)]
            k3 = derivs(x3, u_phys)
            x4 = [xi + dt * ki for xi, ki in zip(x, k3)]
            k4 = derivs(x4, u_phys)
            x = [
                xi + dt / 6.0 * (a + 2.0 * b + 2.0 * c + d)
                for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
            ]
        if not all(math.isfinite(v) for v in x) or abs(x[0]) > 10.0:
            raise DivergenceError(t_k + t_s)
        u_applied_prev = u_phys

    return SimTrace(
        t=t_arr, ref=ref_arr, theta=theta_arr, omega_r=omega_arr,
        i_c=ic_arr, v_c=vc_arr, u_dac=udac_arr, f_s=cfg.f_s,
    )


@dataclass(frozen=True)
class StepMetrics:
    """Step-response figures of merit, times in seconds from the edge."""

    rise_time_10_90: float
    overshoot_pct: float
    settling_time_2pct: float
    steady_state_error_pct: float
    final_value: float
    peak_value: float


def _first_crossing(t: np.ndarray, y: np.ndarray, level: float) -> float:
    for i in range(len(y) - 1):
        if y[i] < level <= y[i + 1]:
            frac = (level - y[i]) / (y[i + 1] - y[i])
            return float(t[i] + frac * (t[i + 1] - t[i]))
    raise MetricError(f"response never crosses {level:.0%} of the step")


def step_metrics(trace: SimTrace) -> StepMetrics:
    """Analyze the response to the last reference edge in the trace.

    The final value is the mean of the last tenth of the post-edge
    window; rise time is 10-90% interpolated, overshoot and the steady
    state error are relative to the step size, and settling is the last
    departure from the 2% band.
    """
    edges = np.nonzero(np.diff(trace.ref))[0]
    edge = int(edges[-1]) + 1 if edges.size else 0
    target = float(trace.ref[-1])
    initial = float(trace.theta[edge])
    prev_ref = float(trace.ref[edge - 1]) if edge > 0 else initial
    size = target - prev_ref
    if size == 0.0:
        raise MetricError("reference contains no step")
    t = trace.t[edge:] - trace.t[edge]
    y = trace.theta[edge:]
    n_tail = max(1, len(y) // 10)
    final = float(np.mean(y[-n_tail:]))
    swing = final - initial
    if swing == 0.0:
        raise MetricError("output never moved from its pre-edge value")
    yn = (y - initial) / swing
    rise = _first_crossing(t, yn, 0.9) - _first_crossing(t, yn, 0.1)
    peak = float(np.max(y)) if size > 0 else float(np.min(y))
    overshoot = max(0.0, (peak - final) / size * 100.0)
    band = 0.02 * abs(size)
    outside = np.nonzero(np.abs(y - final) > band)[0]
    if outside.size and outside[-1] + 1 >= len(y):
        raise MetricError("response does not settle within the trace")
    settle = float(t[outside[-1] + 1]) if outside.size else 0.0
    ss_err = abs(final - target) / abs(size) * 100.0
    return StepMetrics(
        rise_time_10_90=rise,
        overshoot_pct=overshoot,
        settling_time_2pct=settle,
        steady_state_error_pct=ss_err,
        final_value=final,
        peak_value=peak,
    )


def frf_bin(trace: SimTrace, f_hz: float, cycles: int = 5) -> complex:
    """Single-bin transfer estimate theta/ref at f_hz over the last
    ``cycles`` full periods of the trace."""
    n_win = int(round(cycles * trace.f_s / f_hz))
    if n_win < 4 or n_win > len(trace.t):
        raise MetricError(f"trace too short for {cycles} cycles at {f_hz:.6g} Hz")
    sl = slice(len(trace.t) - n_win, len(trace.t))
    e = np.exp(-2j * np.pi * f_hz * trace.t[sl])
    denom = np.sum(trace.ref[sl] * e)
    if abs(denom) == 0.0:
        raise MetricError(f"reference has no content at {f_hz:.6g} Hz")
    return complex(np.sum(trace.theta[sl] * e) / denom)


def sine_sweep_frf(run, freqs, cycles: int = 5) -> FrequencyResponse:
    """Measure the closed-loop response by simulated sine sweeps.

    run(f_hz) must return a SimTrace whose reference is a sinusoid at
    f_hz; the transfer estimate at each frequency is the ratio of the
    single-bin correlations of output and reference over the last
    ``cycles`` full periods.
    """
    freqs = list(freqs)
    vals = [frf_bin(run(f), f, cycles) for f in freqs]
    return FrequencyResponse.from_complex(np.asarray(freqs, dtype=float), vals)
