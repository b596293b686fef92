import dataclasses
import math

import numpy as np
import pytest

from loopsmith import (
    ActuatorParams,
    DesignError,
    DiscretizationError,
    Polynomial,
    StateSpaceModel,
    UncontrollableError,
    UnobservableError,
    ackermann_gain,
    close_with_current_loop,
    closed_loop_ss,
    closed_loop_tf,
    compensator_ss,
    controllability_matrix,
    design_position_controller,
    desired_char_poly,
    discretize_forward_euler,
    input_gain,
    max_stable_step,
    mechanical_tf,
    observability_matrix,
    observer_gain,
    poly_of_matrix,
    poly_roots,
    reduced_order_observer,
    ss_eigenvalues,
    tf_const,
)

OMEGA_N = 2.0 * math.pi * 500.0
ZETA = 0.8


def random_siso(rng: np.random.Generator, n: int) -> StateSpaceModel:
    a = rng.standard_normal((n, n)) * 5.0
    b = rng.standard_normal((n, 1))
    c = rng.standard_normal((1, n))
    return StateSpaceModel(a, b, c)


def random_stable_roots(rng: np.random.Generator, n: int) -> np.ndarray:
    roots = []
    while len(roots) < n:
        if n - len(roots) >= 2 and rng.random() < 0.5:
            re = -rng.uniform(0.5, 10.0)
            im = rng.uniform(0.5, 10.0)
            roots += [re + 1j * im, re - 1j * im]
        else:
            roots.append(-rng.uniform(0.5, 10.0) + 0.0j)
    return np.array(roots)


def sorted_key(v: np.ndarray) -> np.ndarray:
    return v[np.lexsort((v.imag, v.real))]


def test_desired_char_poly_second_order():
    p = desired_char_poly(OMEGA_N, ZETA, 2)
    assert p.coeffs == pytest.approx([1.0, 2.0 * ZETA * OMEGA_N, OMEGA_N**2])


def test_desired_char_poly_third_order_adds_real_pole():
    p = desired_char_poly(OMEGA_N, ZETA, 3)
    r = sorted(poly_roots(p), key=lambda z: z.imag)
    assert r[1].real == pytest.approx(-OMEGA_N)
    assert r[1].imag == pytest.approx(0.0, abs=1e-6)
    assert r[0] == pytest.approx(np.conj(r[2]))


def test_desired_char_poly_rejects_other_orders():
    with pytest.raises(Exception):
        desired_char_poly(OMEGA_N, ZETA, 4)


def test_poly_of_matrix_cayley_hamilton(rng):
    a = rng.standard_normal((4, 4))
    cp = Polynomial(np.poly(a))
    assert np.abs(poly_of_matrix(cp, a)).max() < 1e-8 * np.abs(a).max() ** 4


def test_controllability_matrix_shape():
    a = np.array([[0.0, 1.0], [-2.0, -3.0]])
    b = np.array([[0.0], [1.0]])
    mc = controllability_matrix(a, b)
    assert mc.shape == (2, 2)
    assert mc[:, 0] == pytest.approx(b[:, 0])
    assert mc[:, 1] == pytest.approx((a @ b)[:, 0])


def test_ackermann_places_random_spectra(rng):
    for _ in range(40):
        n = int(rng.integers(2, 4))
        m = random_siso(rng, n)
        want = random_stable_roots(rng, n)
        k = ackermann_gain(m, Polynomial(np.real(np.poly(want))))
        got = np.linalg.eigvals(m.a - m.b @ k)
        assert sorted_key(got) == pytest.approx(sorted_key(want), rel=1e-6, abs=1e-6)


def test_observer_gain_is_the_dual(rng):
    for _ in range(40):
        n = int(rng.integers(2, 4))
        m = random_siso(rng, n)
        want = random_stable_roots(rng, n)
        l = observer_gain(m, Polynomial(np.real(np.poly(want))))
        got = np.linalg.eigvals(m.a - l @ m.c)
        assert sorted_key(got) == pytest.approx(sorted_key(want), rel=1e-6, abs=1e-6)


def test_ackermann_rejects_uncontrollable_pair():
    # second state unreachable from the input
    a = np.diag([-1.0, -2.0])
    m = StateSpaceModel(a, [[1.0], [0.0]], [[1.0, 1.0]])
    with pytest.raises(UncontrollableError):
        ackermann_gain(m, desired_char_poly(10.0, 0.7, 2))


def test_observer_gain_rejects_unobservable_pair():
    a = np.diag([-1.0, -2.0])
    m = StateSpaceModel(a, [[1.0], [1.0]], [[1.0, 0.0]])
    with pytest.raises(UnobservableError):
        observer_gain(m, desired_char_poly(10.0, 0.7, 2))


def test_input_gain_gives_unity_dc(rng):
    for _ in range(10):
        m = random_siso(rng, 3)
        want = random_stable_roots(rng, 3)
        k = ackermann_gain(m, Polynomial(np.real(np.poly(want))))
        try:
            g = input_gain(m, k)
        except DesignError:
            continue
        acl = m.a - m.b @ k
        dc = float((m.c @ np.linalg.solve(acl, -m.b * g))[0, 0])
        assert dc == pytest.approx(1.0, rel=1e-9)


def test_voltage_drive_golden_gains(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    assert d.k[0] == pytest.approx([5.3636, 3.1000e-03, 3.4370e-01], rel=1e-3)
    assert d.g == pytest.approx(6.866490503833926, rel=1e-9)
    assert d.l[:, 0] == pytest.approx(
        [87307.1433075407, 2343617265.3761992, 11485294.061079565], rel=1e-9
    )
    assert d.model.n_states == 3


def test_voltage_drive_design_drops_eddy_branches(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    full = dataclasses.replace(params, eddy_branches=())
    d2 = design_position_controller(full, OMEGA_N, ZETA, "voltage")
    assert d.k[0] == pytest.approx(d2.k[0])
    assert d.g == pytest.approx(d2.g)


def test_voltage_compensator_eigenvalues(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    eig = d.compensator_eigenvalues
    want = np.array(
        [
            -42087.907538413376 + 0.0j,
            -26693.688334230355 - 11085.996348893079j,
            -26693.688334230355 + 11085.996348893079j,
        ]
    )
    assert sorted_key(eig) == pytest.approx(sorted_key(want), rel=1e-9)


def test_separation_principle_on_voltage_design(params):
    """Closed-loop char poly factors into controller times observer.

    Compared as polynomial coefficients: the repeated observer root is
    defective, so eigenvalue extraction smears it by eps**(1/3) and a
    root-wise comparison would need an absurd tolerance.
    """
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    cl = closed_loop_ss(d.model, d.k, d.l, d.g)
    got = np.poly(cl.a)
    want = (desired_char_poly(OMEGA_N, ZETA, 3) * d.observer_poly).coeffs
    assert got == pytest.approx(want, rel=1e-9)


def test_voltage_closed_loop_tracks_dc(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    cl = closed_loop_tf(d.model, d.k, d.l, d.g)
    assert cl.dc_gain() == pytest.approx(1.0, rel=1e-9)


def test_current_drive_golden_gains(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "current")
    assert d.k[0] == pytest.approx([7.124, 0.0037399291366715507], rel=1e-4)
    assert d.g == pytest.approx(7.806, rel=1e-4)
    assert d.reduced is not None
    assert d.reduced.l == pytest.approx(31118.0, rel=1e-4)


def test_reduced_observer_closed_forms(params):
    lam0 = 10.0 * OMEGA_N
    ro = reduced_order_observer(params, lam0)
    assert ro.a_hat == pytest.approx(-lam0)
    assert ro.b_hat == pytest.approx(-(lam0**2 - params.a_d * lam0 + params.a_s))
    assert ro.b_hat == pytest.approx(-978463096.3588223, rel=1e-12)
    assert ro.f_hat == pytest.approx(params.b_t)
    assert ro.l == pytest.approx(lam0 - params.a_d)


def test_reduced_observer_matched_model_reconstructs_velocity(params):
    """With a perfectly matched model the estimate z + l theta converges to
    omega at rate lambda0 from any initial error."""
    ro = reduced_order_observer(params, 5000.0)
    a_d, a_s, b_t = params.a_d, params.a_s, params.b_t
    th, om = 0.05, 0.0
    z = -ro.l * th
    u = 0.3
    dt = 1e-7
    err0 = abs(z + ro.l * th - om)

    def derivs(th, om, z):
        dth = om
        dom = -a_d * om - a_s * th + b_t * u
        dz = ro.a_hat * z + ro.b_hat * th + ro.f_hat * u
        return dth, dom, dz

    z = 1.0  # force an initial estimate error
    err0 = abs(z + ro.l * th - om)
    for _ in range(20000):
        k1 = derivs(th, om, z)
        k2 = derivs(th + dt / 2 * k1[0], om + dt / 2 * k1[1], z + dt / 2 * k1[2])
        k3 = derivs(th + dt / 2 * k2[0], om + dt / 2 * k2[1], z + dt / 2 * k2[2])
        k4 = derivs(th + dt * k3[0], om + dt * k3[1], z + dt * k3[2])
        th += dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        om += dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        z += dt / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    t_end = 20000 * dt
    expect = err0 * math.exp(-5000.0 * t_end)
    assert abs(z + ro.l * th - om) == pytest.approx(expect, rel=1e-3)


def test_current_drive_closed_loop_poles(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "current")
    k1, k2 = float(d.k[0, 0]), float(d.k[0, 1])
    cl = close_with_current_loop(mechanical_tf(params), tf_const(1.0), (k1, k2), d.g)
    assert cl.dc_gain() == pytest.approx(1.0, rel=1e-9)
    r = sorted_key(poly_roots(cl.den))
    want = sorted_key(poly_roots(desired_char_poly(OMEGA_N, ZETA, 2)))
    assert r == pytest.approx(want, rel=1e-9)


def test_compensator_ss_wiring(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    comp = compensator_ss(d.model, d.k, d.l)
    assert comp.a == pytest.approx(d.model.a - d.model.b @ d.k - d.l @ d.model.c)
    assert comp.b == pytest.approx(d.l)
    assert comp.c == pytest.approx(-d.k)


def test_max_stable_step_scalar_modes():
    a = np.diag([-100.0, -400.0])
    assert max_stable_step(a) == pytest.approx(2.0 / 400.0)
    # a pure integrator mode does not bound the step
    a2 = np.diag([-100.0, 0.0])
    assert max_stable_step(a2) == pytest.approx(2.0 / 100.0)
    # any right-half-plane mode means no stable step at all
    assert max_stable_step(np.diag([1.0, -100.0])) == 0.0


def test_max_stable_step_complex_pair():
    re, im = -300.0, 4000.0
    a = np.array([[re, im], [-im, re]])
    assert max_stable_step(a) == pytest.approx(-2.0 * re / (re * re + im * im))


def test_forward_euler_within_limit():
    a = np.array([[-1000.0]])
    b = np.array([[1.0]])
    phi, gam = discretize_forward_euler(a, b, 1e-4)
    assert phi[0, 0] == pytest.approx(0.9)
    assert gam[0, 0] == pytest.approx(1e-4)


def test_forward_euler_rejects_unstable_step():
    a = np.diag([-1000.0, -50.0])
    b = np.zeros((2, 1))
    with pytest.raises(DiscretizationError) as exc:
        discretize_forward_euler(a, b, 3e-3)
    msg = str(exc.value)
    assert "-1000" in msg and "0.002" in msg


def test_forward_euler_allows_exact_integrator():
    a = np.array([[0.0, 1.0], [0.0, -100.0]])
    b = np.array([[0.0], [1.0]])
    phi, _ = discretize_forward_euler(a, b, 1e-3)
    assert np.abs(np.linalg.eigvals(phi)).max() <= 1.0


def test_voltage_observer_is_fe_stable_at_sample_rate(params):
    d = design_position_controller(params, OMEGA_N, ZETA, "voltage")
    limit = max_stable_step(d.model.a - d.l @ d.model.c)
    assert limit == pytest.approx(6.365976383111963e-05, rel=1e-9)
    assert limit > 1.0 / 160e3


def test_design_rejects_unknown_drive(params):
    with pytest.raises(Exception):
        design_position_controller(params, OMEGA_N, ZETA, "pneumatic")
