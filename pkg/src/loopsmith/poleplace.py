"""Pole placement, observers, and observer-based position compensators.

State feedback gains come from Ackermann's formula against a desired
characteristic polynomial; observers are designed by duality. A reduced
first-order observer reconstructs velocity from angle alone, which is
enough when an inner current loop hides the electrical dynamics.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .actuator import ActuatorParams, linear_ss_current, linear_ss_voltage
from .errors import (
    DesignError,
    DiscretizationError,
    UncontrollableError,
    UnobservableError,
)
from .lti import (
    Polynomial,
    RationalTF,
    StateSpaceModel,
    ss_eigenvalues,
    ss_to_tf,
)

__all__ = [
    "desired_char_poly",
    "poly_of_matrix",
    "controllability_matrix",
    "observability_matrix",
    "ackermann_gain",
    "observer_gain",
    "input_gain",
    "ReducedObserver",
    "reduced_order_observer",
    "compensator_ss",
    "closed_loop_ss",
    "closed_loop_tf",
    "close_with_current_loop",
    "max_stable_step",
    "discretize_forward_euler",
    "PositionDesign",
    "design_position_controller",
]

_RANK_RTOL = 1e-10


def desired_char_poly(omega_n: float, zeta: float, order: int) -> Polynomial:
    """Target characteristic polynomial for the closed loop.

    Order 2 is the standard pair s^2 + 2 zeta omega_n s + omega_n^2;
    order 3 adds a real pole at -omega_n.
    """
    pair = Polynomial([1.0, 2.0 * zeta * omega_n, omega_n**2])
    if order == 2:
        return pair
    if order == 3:
        return pair * Polynomial([1.0, omega_n])
    raise DesignError(f"unsupported desired order {order}")


def poly_of_matrix(phi: Polynomial, a: np.ndarray) -> np.ndarray:
    """Evaluate phi(A) by Horner's scheme."""
    n = a.shape[0]
    m = np.zeros_like(a)
    eye = np.eye(n)
    for c in phi.coeffs:
        m = m @ a + c * eye
    return m


def controllability_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    cols = [b]
    for _ in range(n - 1):
        cols.append(a @ cols[-1])
    return np.hstack(cols)


def observability_matrix(a: np.ndarray, c: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    rows = [c]
    for _ in range(n - 1):
        rows.append(rows[-1] @ a)
    return np.vstack(rows)


def _rank(m: np.ndarray) -> int:
    """Numerical rank, threshold 1e-10 relative, after equilibration.

    Rows and columns are scaled to unit norm first: the raw Krylov
    columns grow geometrically with ||A|| and the states carry mixed
    units, either of which would swamp the singular-value test. Exact
    rank deficiency survives diagonal scaling.
    """
    rn = np.linalg.norm(m, axis=1, keepdims=True)
    rn[rn == 0.0] = 1.0
    m = m / rn
    cn = np.linalg.norm(m, axis=0, keepdims=True)
    cn[cn == 0.0] = 1.0
    m = m / cn
    s = np.linalg.svd(m, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > _RANK_RTOL * s[0]))


def ackermann_gain(ss: StateSpaceModel, phi: Polynomial) -> np.ndarray:
    """State feedback row K with det(sI - A + BK) = phi(s).

    K = e_n^T Mc^{-1} phi(A), valid only for controllable single-input
    systems; phi must be monic of degree n.
    """
    a, b = ss.a, ss.b
    n = a.shape[0]
    if b.shape[1] != 1:
        raise DesignError("Ackermann placement needs a single-input model")
    if phi.degree != n or phi.coeffs[0] != 1.0:
        raise DesignError(f"desired polynomial must be monic of degree {n}")
    mc = controllability_matrix(a, b)
    rank = _rank(mc)
    if rank < n:
        raise UncontrollableError(rank, n)
    row = np.linalg.solve(mc.T, np.eye(n)[:, -1])
    return (row @ poly_of_matrix(phi, a)).reshape(1, n)


def observer_gain(ss: StateSpaceModel, phi: Polynomial) -> np.ndarray:
    """Observer column L with det(sI - A + LC) = phi(s), by duality."""
    a, c = ss.a, ss.c
    n = a.shape[0]
    if c.shape[0] != 1:
        raise DesignError("observer placement needs a single-output model")
    if phi.degree != n or phi.coeffs[0] != 1.0:
        raise DesignError(f"desired polynomial must be monic of degree {n}")
    mo = observability_matrix(a, c)
    rank = _rank(mo)
    if rank < n:
        raise UnobservableError(rank, n)
    col = np.linalg.solve(mo, np.eye(n)[:, -1].reshape(n, 1))
    return poly_of_matrix(phi, a) @ col


def input_gain(ss: StateSpaceModel, k: np.ndarray) -> float:
    """Reference gain G = -1 / (C (A - BK)^{-1} B) for unit DC tracking."""
    acl = ss.a - ss.b @ k
    try:
        x = np.linalg.solve(acl, ss.b)
    except np.linalg.LinAlgError as exc:
        raise DesignError("closed loop has a pole at s = 0; DC gain undefined") from exc
    denom = float((ss.c @ x)[0, 0])
    if denom == 0.0:
        raise DesignError("closed-loop DC gain is zero; reference gain undefined")
    return -1.0 / denom


@dataclass(frozen=True)
class ReducedObserver:
    """First-order velocity observer w_hat = z + l theta,
    dz/dt = a_hat z + b_hat theta + f_hat i_c, error pole at -lambda0."""

    a_hat: float
    b_hat: float
    f_hat: float
    l: float
    lambda0: float


def reduced_order_observer(p: ActuatorParams, lambda0: float) -> ReducedObserver:
    """Closed-form reduced observer for the current-drive mechanical pair."""
    if not lambda0 > 0:
        raise DesignError("reduced observer pole lambda0 must be positive")
    l = lambda0 - p.a_d
    return ReducedObserver(
        a_hat=-lambda0,
        b_hat=-(lambda0**2 - p.a_d * lambda0 + p.a_s),
        f_hat=p.b_t,
        l=l,
        lambda0=lambda0,
    )


def compensator_ss(ss: StateSpaceModel, k: np.ndarray, l: np.ndarray) -> StateSpaceModel:
    """Observer-based compensator from measurement y to drive u.

    d(xhat)/dt = (A - BK - LC) xhat + L y,  u = -K xhat. The reference
    feedforward G r adds at the plant input and is not part of this block.
    """
    return StateSpaceModel(ss.a - ss.b @ k - l @ ss.c, l, -k)


def closed_loop_ss(
    ss: StateSpaceModel, k: np.ndarray, l: np.ndarray, g: float
) -> StateSpaceModel:
    """Plant plus observer compensator under u = G r - K xhat."""
    n = ss.a.shape[0]
    a = np.zeros((2 * n, 2 * n))
    a[:n, :n] = ss.a
    a[:n, n:] = -ss.b @ k
    a[n:, :n] = l @ ss.c
    a[n:, n:] = ss.a - ss.b @ k - l @ ss.c
    b = np.vstack([ss.b * g, ss.b * g])
    c = np.hstack([ss.c, np.zeros((1, n))])
    return StateSpaceModel(a, b, c)


def closed_loop_tf(
    ss: StateSpaceModel, k: np.ndarray, l: np.ndarray, g: float
) -> RationalTF:
    return ss_to_tf(closed_loop_ss(ss, k, l, g))


def close_with_current_loop(
    mech: RationalTF,
    inner: RationalTF,
    k: tuple[float, float],
    g: float,
) -> RationalTF:
    """Position loop closed through an inner current loop.

    mech is theta(s)/i_c(s), inner the current loop i_c/i_ref, and the law
    i_ref = G r - k1 theta - k2 w. A matched reduced observer reconstructs
    w exactly in the transfer-function sense, so
    theta/r = G n_i n_m / (d_m d_i + n_i (k1 n_m + k2 s n_m)).
    """
    k1, k2 = k
    n_m, d_m = mech.num, mech.den
    n_i, d_i = inner.num, inner.den
    fb = n_m * k1 + n_m * Polynomial([k2, 0.0])
    den = d_m * d_i + n_i * fb
    return RationalTF(g * (n_i * n_m), den)


def max_stable_step(a: np.ndarray) -> float:
    """Largest forward-Euler step keeping every mode of A inside the unit
    circle; 0.0 if A has a mode with Re >= 0 (excluding exact zeros)."""
    worst = math.inf
    for lam in np.linalg.eigvals(a):
        if lam == 0.0:
            continue
        if lam.real >= 0.0:
            return 0.0
        worst = min(worst, -2.0 * lam.real / abs(lam) ** 2)
    return 0.0 if worst is math.inf else worst


def discretize_forward_euler(
    a: np.ndarray, b: np.ndarray, t_s: float
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-Euler discretization (I + T_s A, T_s B) with a stability gate.

    Every eigenvalue must satisfy |1 + T_s lambda| < 1 (exact integrators
    at lambda = 0 are allowed). Violations raise DiscretizationError naming
    the offending eigenvalue and the largest admissible step.
    """
    if not t_s > 0:
        raise DiscretizationError("sample time must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    for lam in np.linalg.eigvals(a):
        if lam == 0.0:
            continue
        if abs(1.0 + t_s * lam) >= 1.0:
            limit = max_stable_step(a)
            raise DiscretizationError(
                f"forward Euler unstable at T_s = {t_s:.6g} s: eigenvalue "
                f"{lam:.6g} maps outside the unit circle "
                f"(largest stable step {limit:.6g} s)"
            )
    return np.eye(a.shape[0]) + t_s * a, t_s * b


@dataclass(frozen=True)
class PositionDesign:
    """Complete position-control design for one drive kind."""

    drive: str
    omega_n: float
    zeta: float
    model: StateSpaceModel
    k: np.ndarray
    g: float
    l: np.ndarray | None = None
    observer_poly: Polynomial | None = None
    reduced: ReducedObserver | None = None

    @property
    def compensator_eigenvalues(self) -> np.ndarray:
        if self.l is None:
            raise DesignError("no full-order observer in this design")
        return ss_eigenvalues(compensator_ss(self.model, self.k, self.l).a)


def design_position_controller(
    p: ActuatorParams,
    omega_n: float,
    zeta: float,
    drive: str = "voltage",
    observer_factor: float = 10.0,
    lambda0: float | None = None,
) -> PositionDesign:
    """Pole-place a position controller for voltage or current drive.

    Voltage drive designs against the third-order eddy-free linearization
    and pairs the state feedback with a full-order observer whose poles
    all sit at -observer_factor * omega_n. Current drive designs against
    the mechanical pair and uses the reduced velocity observer with pole
    -lambda0 (default observer_factor * omega_n).
    """
    if drive == "voltage":
        model = linear_ss_voltage(dataclasses.replace(p, eddy_branches=()))
        phi = desired_char_poly(omega_n, zeta, 3)
        k = ackermann_gain(model, phi)
        g = input_gain(model, k)
        w_o = observer_factor * omega_n
        phi_e = Polynomial.from_roots([-w_o, -w_o, -w_o])
        l = observer_gain(model, phi_e)
        return PositionDesign(
            drive=drive, omega_n=omega_n, zeta=zeta, model=model,
            k=k, g=g, l=l, observer_poly=phi_e,
        )
    if drive == "current":
        model = linear_ss_current(p)
        phi = desired_char_poly(omega_n, zeta, 2)
        k = ackermann_gain(model, phi)
        g = input_gain(model, k)
        lam = observer_factor * omega_n if lambda0 is None else lambda0
        red = reduced_order_observer(p, lam)
        return PositionDesign(
            drive=drive, omega_n=omega_n, zeta=zeta, model=model,
            k=k, g=g, reduced=red,
        )
    raise DesignError(f"unknown drive kind '{drive}'")
