"""Polynomials, rational transfer functions, state-space models, and
frequency-domain analysis.

Conventions: polynomial coefficients are stored in descending powers of s,
transfer functions are ratios of real-coefficient polynomials, and
frequencies at API boundaries are in Hz unless a name says otherwise.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import (
    NoCrossoverError,
    NumericError,
    PoleEvaluationError,
)

__all__ = [
    "Polynomial",
    "RationalTF",
    "StateSpaceModel",
    "FrequencyResponse",
    "Margins",
    "poly_roots",
    "tf_eval",
    "tf_feedback",
    "ss_eigenvalues",
    "ss_to_tf",
    "char_poly",
    "bode",
    "margins",
    "apply_delay",
    "step_response",
    "simulate_tf",
    "bandwidth_3db",
    "tf_s",
    "tf_const",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=float).copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in s, coefficients in descending powers.

    Leading zeros are trimmed exactly (no tolerance); the zero polynomial
    is represented by the single coefficient 0.0.
    """

    coeffs: np.ndarray

    def __init__(self, coeffs: Sequence[float]):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        nz = np.nonzero(c)[0]
        c = c[nz[0]:] if nz.size else np.zeros(1)
        object.__setattr__(self, "coeffs", _readonly(c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, s):
        return np.polyval(self.coeffs, s)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.polymul(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __add__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial([float(other)])
        return Polynomial(np.polyadd(self.coeffs, other.coeffs))

    __radd__ = __add__

    def __sub__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial([float(other)])
        return Polynomial(np.polysub(self.coeffs, other.coeffs))

    def __rsub__(self, other):
        return Polynomial([float(other)]) - self

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.all(self.coeffs == other.coeffs)
        )

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial([0.0])
        return Polynomial(np.polyder(self.coeffs))

    def monic(self) -> "Polynomial":
        if self.is_zero:
            raise ValueError("zero polynomial has no monic form")
        return Polynomial(self.coeffs / self.coeffs[0])

    @staticmethod
    def from_roots(roots: Iterable[complex]) -> "Polynomial":
        c = np.atleast_1d(np.poly(np.asarray(list(roots), dtype=complex)))
        if np.max(np.abs(c.imag)) > 1e-9 * max(1.0, np.max(np.abs(c.real))):
            raise ValueError("roots do not form a real polynomial")
        return Polynomial(c.real)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"


def _cubic_roots(c: np.ndarray) -> np.ndarray:
    """Closed-form roots of a monic cubic s^3 + b s^2 + c s + d."""
    b, cc, d = c[1], c[2], c[3]
    # depressed cubic t^3 + p t + q with s = t - b/3
    p = cc - b * b / 3.0
    q = 2.0 * b**3 / 27.0 - b * cc / 3.0 + d
    shift = -b / 3.0
    if p == 0.0 and q == 0.0:
        return np.full(3, shift, dtype=complex)
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    sq = np.sqrt(complex(disc))
    u3 = -q / 2.0 + sq
    if abs(u3) < abs(-q / 2.0 - sq):
        u3 = -q / 2.0 - sq
    u = u3 ** (1.0 / 3.0)
    w = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = []
    for k in range(3):
        uk = u * w**k
        tk = uk - p / (3.0 * uk) if uk != 0 else 0.0
        roots.append(tk + shift)
    return np.asarray(roots, dtype=complex)


def poly_roots(p: Polynomial) -> np.ndarray:
    """All complex roots of ``p``.

    Degree 1-2 use the closed-form solutions, degree 3 the Cardano
    formula, and degree 4 and above a companion-matrix QR iteration.
    Every root is polished with one Newton step and checked against the
    residual bound |p(r)| <= 1e-8 * max|c| * max(1, |r|)^deg.
    """
    if p.degree < 1:
        raise ValueError("root finding needs degree >= 1")
    c = p.monic().coeffs
    n = p.degree
    if n == 1:
        roots = np.array([-c[1]], dtype=complex)
    elif n == 2:
        b, cc = c[1], c[2]
        sq = np.sqrt(complex(b * b - 4.0 * cc))
        # sign choice avoids cancellation in the larger root
        q = -(b + sq) / 2.0 if b.real * sq.real + b.imag * sq.imag >= 0 else -(b - sq) / 2.0
        r1 = q
        r2 = cc / q if q != 0 else 0.0
        roots = np.array([r1, r2], dtype=complex)
    elif n == 3:
        roots = _cubic_roots(c)
    else:
        comp = np.zeros((n, n))
        comp[0, :] = -c[1:]
        comp[1:, :-1] = np.eye(n - 1)
        roots = np.linalg.eigvals(comp)

    dp = np.polyder(c)
    for i, r in enumerate(roots):
        slope = np.polyval(dp, r)
        if slope != 0:
            roots[i] = r - np.polyval(c, r) / slope

    scale = np.max(np.abs(p.coeffs))
    for r in roots:
        bound = 1e-8 * scale * max(1.0, abs(r)) ** n
        if abs(np.polyval(p.coeffs, r)) > bound:
            raise NumericError(
                f"root residual check failed at r = {r}: |p(r)| exceeds {bound:.3g}"
            )
    return roots


@dataclass(frozen=True)
class RationalTF:
    """Ratio of two real polynomials in s.

    No pole/zero cancellation is ever attempted; composition grows the
    polynomials and only exact-zero leading coefficients are trimmed.
    """

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        if self.den.is_zero:
            raise ValueError("denominator must not be the zero polynomial")

    def __call__(self, s):
        return tf_eval(self, s)

    def __mul__(self, other):
        if isinstance(other, RationalTF):
            return RationalTF(self.num * other.num, self.den * other.den)
        return RationalTF(self.num * float(other), self.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, RationalTF):
            if other.num.is_zero:
                raise ZeroDivisionError("division by the zero transfer function")
            return RationalTF(self.num * other.den, self.den * other.num)
        return RationalTF(self.num, self.den * float(other))

    def __rtruediv__(self, other):
        if self.num.is_zero:
            raise ZeroDivisionError("division by the zero transfer function")
        return RationalTF(self.den * float(other), self.num)

    def __add__(self, other):
        if not isinstance(other, RationalTF):
            other = tf_const(float(other))
        return RationalTF(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RationalTF):
            other = tf_const(float(other))
        return RationalTF(self.num * other.den - other.num * self.den, self.den * other.den)

    def __rsub__(self, other):
        return tf_const(float(other)) - self

    def __neg__(self):
        return RationalTF(-self.num, self.den)

    def feedback(self, h: "RationalTF | float" = 1.0) -> "RationalTF":
        return tf_feedback(self, h)

    def poles(self) -> np.ndarray:
        return poly_roots(self.den) if self.den.degree >= 1 else np.array([], dtype=complex)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num) if self.num.degree >= 1 else np.array([], dtype=complex)

    def dc_gain(self) -> float:
        val = tf_eval(self, 0.0)
        return float(val.real)

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    def __repr__(self):
        return f"RationalTF(num={list(self.num.coeffs)}, den={list(self.den.coeffs)})"


def tf_const(k: float) -> RationalTF:
    return RationalTF(Polynomial([float(k)]), Polynomial([1.0]))


def tf_s() -> RationalTF:
    """The Laplace variable as a transfer function."""
    return RationalTF(Polynomial([1.0, 0.0]), Polynomial([1.0]))


def tf_eval(g: RationalTF, s: complex) -> complex:
    """Evaluate ``g`` at a single complex point.

    Raises PoleEvaluationError (carrying s) if the denominator evaluates
    to exactly zero there.
    """
    den = complex(np.polyval(g.den.coeffs, s))
    if den == 0:
        raise PoleEvaluationError(complex(s))
    return complex(np.polyval(g.num.coeffs, s)) / den


def tf_feedback(forward: RationalTF, loop: "RationalTF | float" = 1.0) -> RationalTF:
    """Closed loop forward / (1 + forward * loop)."""
    if not isinstance(loop, RationalTF):
        loop = tf_const(float(loop))
    num = forward.num * loop.den
    den = forward.den * loop.den + forward.num * loop.num
    if den.is_zero:
        raise NumericError("feedback interconnection is singular: 1 + G*H = 0")
    return RationalTF(num, den)


@dataclass(frozen=True)
class StateSpaceModel:
    """Continuous LTI model dx/dt = A x + B u, y = C x + D u."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __init__(self, a, b, c, d=None):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
        c = np.atleast_2d(np.asarray(c, dtype=float)).reshape(-1, a.shape[0])
        if d is None:
            d = np.zeros((c.shape[0], b.shape[1]))
        d = np.asarray(d, dtype=float).reshape(c.shape[0], b.shape[1])
        if a.shape[0] != a.shape[1]:
            raise ValueError("A must be square")
        for m in (a, b, c, d):
            if not np.all(np.isfinite(m)):
                raise ValueError("state-space matrices must be finite")
        object.__setattr__(self, "a", _readonly(a))
        object.__setattr__(self, "b", _readonly(b))
        object.__setattr__(self, "c", _readonly(c))
        object.__setattr__(self, "d", _readonly(d))

    @property
    def n_states(self) -> int:
        return self.a.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.c.shape[0]


def char_poly(a: np.ndarray) -> Polynomial:
    """Characteristic polynomial of a square matrix via Faddeev-LeVerrier."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    coeffs = [1.0]
    m = np.eye(n)
    for k in range(1, n + 1):
        am = a @ m
        ck = -np.trace(am) / k
        coeffs.append(ck)
        m = am + ck * np.eye(n)
    return Polynomial(coeffs)


def ss_eigenvalues(m: "StateSpaceModel | np.ndarray") -> np.ndarray:
    """Eigenvalues of the state matrix, sorted by real part then imaginary."""
    a = m.a if isinstance(m, StateSpaceModel) else np.asarray(m, dtype=float)
    eig = np.linalg.eigvals(a)
    order = np.lexsort((eig.imag, eig.real))
    return eig[order]


def ss_to_tf(m: StateSpaceModel, input_index: int = 0, output_index: int = 0) -> RationalTF:
    """Single-channel transfer function C (sI - A)^-1 B + D.

    Uses the Faddeev-LeVerrier recursion, which yields the adjugate of
    (sI - A) as a matrix polynomial alongside the characteristic
    polynomial, so no per-frequency solves are involved.
    """
    a, b = m.a, m.b[:, input_index]
    c, d = m.c[output_index, :], m.d[output_index, input_index]
    n = a.shape[0]
    den = char_poly(a)
    # adj(sI - A) = sum_k N_k s^(n-1-k) built by the same recursion
    num = np.zeros(n + 1)
    mk = np.eye(n)
    for k in range(n):
        num[k] = c @ mk @ b
        ck = den.coeffs[k + 1]
        mk = a @ mk + ck * np.eye(n)
    num_poly = Polynomial(num[:-1]) if n >= 1 else Polynomial([0.0])
    if d != 0.0:
        num_poly = num_poly + Polynomial(d * den.coeffs)
    return RationalTF(num_poly, den)


@dataclass(frozen=True)
class FrequencyResponse:
    """Sampled frequency response on a strictly increasing Hz grid.

    Magnitude and unwrapped phase are the primary representation; the
    complex values are derived, so phase-only operations such as delay
    leave the magnitude array untouched at the bit level.
    """

    freq_hz: np.ndarray
    mag: np.ndarray
    phase_rad: np.ndarray

    def __init__(self, freq_hz, mag, phase_rad):
        f = np.asarray(freq_hz, dtype=float)
        m = np.asarray(mag, dtype=float)
        p = np.asarray(phase_rad, dtype=float)
        if f.ndim != 1 or f.shape != m.shape or f.shape != p.shape:
            raise ValueError("freq, mag, phase must be 1-D arrays of equal length")
        if f.size == 0:
            raise ValueError("empty frequency grid")
        if np.any(f <= 0) or np.any(np.diff(f) <= 0):
            raise ValueError("frequency grid must be positive and strictly increasing")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(p))):
            raise ValueError("magnitude and phase must be finite")
        if np.any(m < 0):
            raise ValueError("magnitude must be non-negative")
        object.__setattr__(self, "freq_hz", _readonly(f))
        object.__setattr__(self, "mag", _readonly(m))
        object.__setattr__(self, "phase_rad", _readonly(p))

    @classmethod
    def from_complex(cls, freq_hz, values) -> "FrequencyResponse":
        values = np.asarray(values, dtype=complex)
        return cls(freq_hz, np.abs(values), np.unwrap(np.angle(values)))

    @property
    def values(self) -> np.ndarray:
        return self.mag * np.exp(1j * self.phase_rad)

    @property
    def mag_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(self.mag)

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(self.phase_rad)

    def to_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text(comment))

    def to_csv_text(self, comment: str | None = None) -> str:
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        buf.write("freq_hz,real,imag,mag_db,phase_deg\n")
        re = self.mag * np.cos(self.phase_rad)
        im = self.mag * np.sin(self.phase_rad)
        db, deg = self.mag_db, self.phase_deg
        for i in range(len(self.freq_hz)):
            row = (self.freq_hz[i], re[i], im[i], db[i], deg[i])
            buf.write(",".join(format(v, ".9g") for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, path) -> "FrequencyResponse":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
        if rows[0] != ["freq_hz", "real", "imag", "mag_db", "phase_deg"]:
            raise ValueError("unexpected CSV header")
        data = np.array([[float(x) for x in r] for r in rows[1:]])
        return cls(data[:, 0], 10.0 ** (data[:, 3] / 20.0), np.radians(data[:, 4]))


def bode(g: RationalTF, freq_hz: Sequence[float]) -> FrequencyResponse:
    """Frequency response of ``g`` over a Hz grid, phase unwrapped."""
    f = np.asarray(freq_hz, dtype=float)
    s = 2j * np.pi * f
    den = np.polyval(g.den.coeffs, s)
    hit = np.nonzero(den == 0)[0]
    if hit.size:
        raise PoleEvaluationError(complex(s[hit[0]]))
    vals = np.polyval(g.num.coeffs, s) / den
    return FrequencyResponse.from_complex(f, vals)


def apply_delay(fr: FrequencyResponse, t_d: float) -> FrequencyResponse:
    """Pure transport delay exp(-s t_d): phase shifts, magnitude untouched."""
    return FrequencyResponse(
        fr.freq_hz, fr.mag, fr.phase_rad - 2.0 * np.pi * fr.freq_hz * t_d
    )


@dataclass(frozen=True)
class Margins:
    """Stability margins of a loop transmission.

    gain_crossover in Hz, phase_margin in degrees, gain_margin in dB
    (None when the phase never crosses -180), bandwidth_3db in Hz
    measured on L/(1+L) (None when it does not fall below -3 dB in the
    search range).
    """

    gain_crossover: float
    phase_margin: float
    gain_margin: float | None
    bandwidth_3db: float | None


def _logspace_grid(f_lo: float, f_hi: float, points_per_decade: int) -> np.ndarray:
    decades = math.log10(f_hi / f_lo)
    n = max(int(decades * points_per_decade) + 1, 16)
    return np.logspace(math.log10(f_lo), math.log10(f_hi), n)


def _auto_range(l: RationalTF) -> tuple[float, float]:
    mags = []
    for poly in (l.num, l.den):
        if poly.degree >= 1:
            r = poly_roots(poly)
            mags.extend(abs(x) / (2 * np.pi) for x in r if abs(x) > 0)
    if mags:
        return min(min(mags) / 100.0, 1e-3), max(max(mags) * 100.0, 1e7)
    return 1e-3, 1e7


def _bisect_mag(l: RationalTF, f_lo: float, f_hi: float) -> float:
    """Refine a |L| = 1 bracket on a log-frequency axis."""
    lo, hi = f_lo, f_hi
    sign_lo = abs(tf_eval(l, 2j * np.pi * lo)) >= 1.0
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        if (abs(tf_eval(l, 2j * np.pi * mid)) >= 1.0) == sign_lo:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-12:
            break
    return math.sqrt(lo * hi)


def margins(
    l: RationalTF,
    f_min: float | None = None,
    f_max: float | None = None,
    points_per_decade: int = 400,
) -> Margins:
    """Gain/phase margins and closed-loop bandwidth of a loop transmission.

    Crossovers are bracketed on a log grid (400 points per decade by
    default) and refined by bisection to better than 1e-6 relative.
    """
    lo, hi = _auto_range(l)
    if f_min is not None:
        lo = f_min
    if f_max is not None:
        hi = f_max
    grid = _logspace_grid(lo, hi, points_per_decade)
    s = 2j * np.pi * grid
    den = np.polyval(l.den.coeffs, s)
    if np.any(den == 0):
        raise PoleEvaluationError(complex(s[np.nonzero(den == 0)[0][0]]))
    vals = np.polyval(l.num.coeffs, s) / den
    mag = np.abs(vals)

    above = mag >= 1.0
    down = np.nonzero(above[:-1] & ~above[1:])[0]
    up = np.nonzero(~above[:-1] & above[1:])[0]
    if down.size:
        i = down[0]
    elif up.size:
        i = up[0]
    else:
        raise NoCrossoverError(
            f"|L| does not cross unity between {lo:.3g} and {hi:.3g} Hz"
        )
    f_c = _bisect_mag(l, grid[i], grid[i + 1])
    pm = 180.0 + math.degrees(np.angle(tf_eval(l, 2j * np.pi * f_c)))
    if pm > 180.0:
        pm -= 360.0

    gm = _gain_margin(l, grid, vals)
    bw = bandwidth_3db(tf_feedback(l, 1.0), f_lo=lo, f_hi=hi, grid=grid)
    return Margins(gain_crossover=f_c, phase_margin=pm, gain_margin=gm, bandwidth_3db=bw)


def _gain_margin(l: RationalTF, grid: np.ndarray, vals: np.ndarray) -> float | None:
    phase = np.unwrap(np.angle(vals))
    target_index = np.floor((phase + np.pi) / (2 * np.pi))
    crossings = np.nonzero(np.diff(target_index) != 0)[0]
    best: float | None = None
    for i in crossings:
        # bisect the -180 (mod 360) crossing inside this log segment
        lo_f, hi_f = grid[i], grid[i + 1]
        ph_lo = phase[i]
        k = max(target_index[i], target_index[i + 1])
        target = (2.0 * k - 1.0) * np.pi
        for _ in range(100):
            mid = math.sqrt(lo_f * hi_f)
            raw = np.angle(tf_eval(l, 2j * np.pi * mid))
            ph_mid = ph_lo + math.remainder(raw - ph_lo, 2 * np.pi)
            if (ph_mid - target) * (ph_lo - target) > 0:
                lo_f, ph_lo = mid, ph_mid
            else:
                hi_f = mid
            if hi_f / lo_f - 1.0 < 1e-12:
                break
        f_180 = math.sqrt(lo_f * hi_f)
        g = abs(tf_eval(l, 2j * np.pi * f_180))
        if g > 0:
            gm = -20.0 * math.log10(g)
            if best is None or abs(gm) < abs(best):
                best = gm
    return best


def bandwidth_3db(
    g: RationalTF,
    f_lo: float = 1e-3,
    f_hi: float = 1e7,
    grid: np.ndarray | None = None,
) -> float | None:
    """First frequency where |g| drops 3 dB below its low-frequency value."""
    if grid is None:
        grid = _logspace_grid(f_lo, f_hi, 400)
    s = 2j * np.pi * grid
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = np.abs(np.polyval(g.num.coeffs, s) / np.polyval(g.den.coeffs, s))
    ref = mag[0]
    if not np.isfinite(ref) or ref == 0:
        return None
    thresh = ref / math.sqrt(2.0)
    below = np.nonzero(mag < thresh)[0]
    if below.size == 0 or below[0] == 0:
        return None
    i = below[0] - 1
    lo, hi = grid[i], grid[i + 1]
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        if abs(tf_eval(g, 2j * np.pi * mid)) >= thresh:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-12:
            break
    return math.sqrt(lo * hi)


def _realize(g: RationalTF) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
    """Controllable-canonical realization with frequency scaling.

    Returns (A, B, C, D, omega0) where the state dynamics are expressed in
    scaled time tau = omega0 * t to keep the companion matrix balanced.
    """
    if g.num.degree > g.den.degree:
        raise ValueError("improper transfer function cannot be simulated")
    den = g.den.monic()
    num = Polynomial(g.num.coeffs / g.den.coeffs[0])
    n = den.degree
    if n == 0:
        return np.zeros((0, 0)), np.zeros(0), np.zeros(0), float(num.coeffs[0]), 1.0
    tail = den.coeffs[1:]
    nz = np.nonzero(tail)[0]
    if nz.size:
        k = nz[-1] + 1  # power index of the lowest nonzero coefficient
        omega0 = float(abs(tail[nz[-1]]) ** (1.0 / k))
    else:
        omega0 = 1.0
    # substitute s = omega0 * sigma
    dc = den.coeffs * omega0 ** np.arange(n, -1, -1, dtype=float)
    dc /= dc[0]
    m = num.degree
    ncf = num.coeffs * omega0 ** np.arange(m, -1, -1, dtype=float)
    ncf = ncf / omega0**n
    q, r = np.polydiv(ncf, dc) if m == n else (np.zeros(1), ncf)
    d_term = float(q[0]) if m == n else 0.0
    r = np.atleast_1d(r)
    a = np.zeros((n, n))
    a[:-1, 1:] = np.eye(n - 1)
    a[-1, :] = -dc[:0:-1]
    b = np.zeros(n)
    b[-1] = 1.0
    c = np.zeros(n)
    c[: len(r)] = r[::-1]
    return a, b, c, d_term, omega0


def simulate_tf(g: RationalTF, u: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Response of ``g`` to a sampled input held constant between samples.

    Uses the exact zero-order-hold discretization of a balanced
    state-space realization, so the result is deterministic and free of
    integration error for piecewise-constant inputs.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if t.ndim != 1 or t.shape != u.shape or t.size < 2:
        raise ValueError("t and u must be matching 1-D arrays with at least 2 samples")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=0.0):
        raise ValueError("time grid must be uniform")
    a, b, c, d, omega0 = _realize(g)
    n = a.shape[0]
    if n == 0:
        return d * u
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = a
    aug[:n, n] = b
    phi = expm(aug * (dt * omega0))
    ad, bd = phi[:n, :n], phi[:n, n]
    y = np.empty_like(u)
    x = np.zeros(n)
    for k in range(len(t)):
        y[k] = c @ x + d * u[k]
        x = ad @ x + bd * u[k]
    return y


def step_response(g: RationalTF, t: np.ndarray) -> np.ndarray:
    """Unit step response of ``g`` on a uniform time grid starting at 0."""
    return simulate_tf(g, np.ones_like(np.asarray(t, dtype=float)), t)
