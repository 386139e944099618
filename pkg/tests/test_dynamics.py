import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from poststall import dynamics as dyn
from poststall.dynamics import AircraftState, ControlInput
from poststall.errors import ConfigError, GimbalLock, NegativeThrust
from poststall.params import AeroSurface, AircraftParams, load_params
from poststall.rotations import euler_rate_map, euler_to_rotation, rate_matrix


@pytest.fixture(scope="module")
def params():
    return load_params()


def _rx(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def _ry(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rz(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def flight_state(**kw):
    x = np.zeros(dyn.NX)
    x[2] = -1.5
    x[dyn.VEL] = [4.0, 0.2, 0.9]
    x[dyn.RATE] = [0.3, -0.5, 0.4]
    x[dyn.ATT] = [0.1, 0.25, 0.7]
    x[dyn.DEFL] = [0.1, -0.1, -0.2, 0.05]
    x[dyn.THRUST] = 0.8
    for k, v in kw.items():
        x[dyn.STATE_NAMES.index(k)] = v
    return x


# -- rotations -----------------------------------------------------------------


def test_rotation_identity_and_yaw():
    assert np.array_equal(euler_to_rotation([0, 0, 0]), np.eye(3))
    R = euler_to_rotation([0, 0, np.pi / 2])
    np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)


def test_rotation_matches_elementary_composition():
    rng = np.random.default_rng(0)
    for theta in rng.uniform(-3, 3, size=(50, 3)):
        expected = _rz(theta[2]) @ _ry(theta[1]) @ _rx(theta[0])
        np.testing.assert_allclose(euler_to_rotation(theta), expected, atol=1e-14)


def test_rotation_orthonormal_1000_triples():
    rng = np.random.default_rng(1)
    R = euler_to_rotation(rng.uniform(-np.pi, np.pi, size=(1000, 3)))
    err = np.abs(np.einsum("nji,njk->nik", R, R) - np.eye(3)).max()
    assert err < 1e-12
    det = np.linalg.det(R)
    assert np.all(np.abs(det - 1) <= 1e-12)


def test_euler_rate_zero_attitude():
    np.testing.assert_allclose(euler_rate_map([0, 0, 0], [1, 0, 0]), [1, 0, 0])
    w = np.array([0.3, -1.2, 2.0])
    np.testing.assert_allclose(euler_rate_map([0, 0, 0], w), w)


@given(
    st.floats(-3, 3), st.floats(-1.5, 1.5), st.floats(-3, 3),
    st.lists(st.floats(-10, 10), min_size=3, max_size=3),
)
def test_euler_rate_round_trip(phi, theta, psi, w):
    att = np.array([phi, theta, psi])
    # forward map written out independently from the body-rate kinematics
    dth = euler_rate_map(att, w)
    forward = (
        np.array([dth[0], 0, 0])
        + _rx(phi).T @ np.array([0, dth[1], 0])
        + _rx(phi).T @ _ry(theta).T @ np.array([0, 0, dth[2]])
    )
    np.testing.assert_allclose(forward, w, atol=1e-10 * (1 + np.abs(dth).max()))
    np.testing.assert_allclose(rate_matrix(att) @ dth, w, atol=1e-10 * (1 + np.abs(dth).max()))


def test_gimbal_lock_raises():
    with pytest.raises(GimbalLock):
        euler_rate_map([0, np.pi / 2 - 1e-9, 0], [0, 0, 1])
    with pytest.raises(GimbalLock):
        dyn.state_derivative(flight_state(theta=-np.pi / 2 + 1e-4), np.zeros(5), load_params())


# -- backwash / surfaces ---------------------------------------------------------


def test_backwash_zero_thrust(params):
    assert dyn.backwash_velocity([3.0, 1.0, 0.0], 0.0, params) == 0.0


def test_backwash_static_value(params):
    p = params.replace(rho=1.225, disk_area=0.0249)
    # sqrt(2 / (1.225 * 0.0249)) evaluated by hand: 8.097430...
    assert dyn.backwash_velocity([0, 0, 0], 1.0, p) == pytest.approx(8.0974308, rel=1e-7)


def test_backwash_large_thrust_asymptote(params):
    vp = np.array([3.0, 0, 0])
    vbw = dyn.backwash_velocity(vp, 1e3, params)
    asym = np.sqrt(2e3 / (params.rho * params.disk_area))
    assert abs(vbw - asym) / asym < 0.05


def test_backwash_negative_thrust(params):
    with pytest.raises(NegativeThrust):
        dyn.backwash_velocity([1, 0, 0], -0.1, params)


def test_surface_velocity_at_rest(params):
    x = np.zeros(dyn.NX)
    for s in params.surfaces:
        np.testing.assert_array_equal(dyn.surface_velocity(x, s, params), np.zeros(3))


def test_surface_velocity_pure_translation(params):
    s = AeroSurface("plate", 0.1, hinge=(0.3, 0.1, 0.0), chord_offset=-0.05)
    x = np.zeros(dyn.NX)
    x[dyn.VEL] = [1, 0, 0]
    np.testing.assert_allclose(dyn.surface_velocity(x, s, params), [1, 0, 0])


def test_surface_velocity_yaw_rate(params):
    s = AeroSurface("fin", 0.1, mount=(-np.pi / 2, 0, 0), hinge=(0.1, 0, 0), chord_offset=-0.04)
    x = np.zeros(dyn.NX)
    x[dyn.RATE] = [0, 0, 1]
    # R_s maps body (x, y, z) -> surface (x, -z, y); w x r_h = (0, 0.1, 0)
    # -> surface (0, 0, 0.1); R_s w = (0, -1, 0); (0, -1, 0) x (-0.04, 0, 0) = (0, 0, -0.04)
    np.testing.assert_allclose(dyn.surface_velocity(x, s, params), [0, 0, 0.06], atol=1e-15)


def test_surface_aoa():
    assert dyn.surface_aoa([1, 0, 0]) == 0.0
    assert dyn.surface_aoa([1, 0, 1]) == pytest.approx(np.pi / 4)
    assert dyn.surface_aoa([0, 0, 1]) == pytest.approx(np.pi / 2)
    assert dyn.surface_aoa([-1, 0, 0]) == pytest.approx(np.pi)


def test_surface_force_examples():
    assert dyn.surface_force([1, 0, 0], 1.0, 1.0) == 0.0
    assert dyn.surface_force([0, 0, 1], 1.0, 2.0) == pytest.approx(2.0)
    f1 = dyn.surface_force([1, 0.2, 0.4], 0.3, 1.2)
    f3 = dyn.surface_force([3, 0.6, 1.2], 0.3, 1.2)
    assert f3 == pytest.approx(9 * f1)
    assert dyn.surface_force([0, 1e-12, 0], 1.0, 1.0) == 0.0


@given(st.lists(st.floats(-50, 50), min_size=3, max_size=3), st.floats(1e-3, 2), st.floats(0.1, 2))
def test_flat_plate_bound(v, area, rho):
    fn = dyn.surface_force(v, area, rho)
    assert abs(fn) <= rho * float(np.dot(v, v)) * area * (1 + 1e-12)


# -- forces / derivative ---------------------------------------------------------


def _oracle_forces(x, u, p: AircraftParams):
    """Straight-line loop over surfaces, written independently of the batched code."""
    th, d, dt, v, w = x[3:6], x[6:10], x[10], x[11:14], x[14:17]
    phi, tht, psi = th
    Rbw = _rz(psi) @ _ry(tht) @ _rx(phi)
    t_axis = (_rz(p.thrust_mount[2]) @ _ry(p.thrust_mount[1]) @ _rx(p.thrust_mount[0]))[:, 0]
    vp = abs((v + np.cross(w, p.prop_offset)) @ t_axis)
    vbw = np.sqrt(vp**2 + 2 * max(dt, 0) / (p.rho * p.disk_area)) - vp
    F = p.mass * p.gravity * Rbw.T @ np.array([0, 0, 1.0]) + dt * t_axis
    M = np.cross(p.prop_offset, dt * t_axis)
    for s in p.surfaces:
        mount = _rz(s.mount[2]) @ _ry(s.mount[1]) @ _rx(s.mount[0])  # surface -> body
        if s.actuation is not None:
            delta, rate = d[s.actuation], u[s.actuation]
        else:
            delta, rate = 0.0, 0.0
        Rs = (mount @ _ry(delta)).T  # body -> deflected surface
        rh = np.array(s.hinge)
        rs = np.array([s.chord_offset, 0, 0])
        vs = Rs @ (v + np.cross(w, rh) + s.backwash_gain * vbw * np.array([1, 0, 0]))
        vs = vs + np.cross(Rs @ w + np.array([0, rate, 0]), rs)
        alpha = np.arctan2(vs[2], vs[0])
        fn = 0.5 * 2 * np.sin(alpha) * p.rho * (vs @ vs) * s.area
        f_body = Rs.T @ np.array([0, 0, -fn])
        F = F + f_body
        M = M + np.cross(rh + Rs.T @ rs, f_body)
    return F, M


def test_forces_at_rest_are_gravity(params):
    x = np.zeros(dyn.NX)
    f, m = dyn.total_forces_moments(x, params)
    np.testing.assert_allclose(f, [0, 0, params.mass * params.gravity], atol=1e-15)
    np.testing.assert_allclose(m, 0, atol=1e-15)


def test_thrust_superposition(params):
    p = params.replace(surfaces=[s.__class__(**{**s.__dict__, "backwash_gain": 0.0}) for s in params.surfaces])
    x = np.zeros(dyn.NX)
    x[dyn.THRUST] = 2.0
    f, m = dyn.total_forces_moments(x, p)
    np.testing.assert_allclose(f, [2.0, 0, p.mass * p.gravity], atol=1e-14)
    np.testing.assert_allclose(m, 0, atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_forces_match_independent_oracle(params, seed):
    rng = np.random.default_rng(seed)
    x = flight_state()
    x[dyn.VEL] = [5.0, 0.0, 1.0] if seed == 0 else rng.normal(0, 3, 3)
    x[dyn.RATE] = rng.normal(0, 1, 3)
    x[dyn.ATT] = rng.uniform(-1, 1, 3)
    x[dyn.DEFL] = rng.uniform(-0.6, 0.6, 4)
    u = np.append(rng.normal(0, 3, 4), 0.5)
    f, m = dyn.total_forces_moments(x, params, u[:4])
    fo, mo = _oracle_forces(x, u, params)
    np.testing.assert_allclose(f, fo, atol=1e-10)
    np.testing.assert_allclose(m, mo, atol=1e-10)


def test_free_fall_derivative(params):
    xd = dyn.state_derivative(np.zeros(dyn.NX), np.zeros(dyn.NU), params)
    expected = np.zeros(dyn.NX)
    expected[13] = params.gravity
    np.testing.assert_allclose(xd, expected, atol=1e-15)


def test_full_throttle_thrust_rate(params):
    xd = dyn.state_derivative(np.zeros(dyn.NX), [0, 0, 0, 0, 1.0], params)
    assert xd[dyn.THRUST] == pytest.approx(9.6466)


@settings(max_examples=50)
@given(st.integers(0, 2**31 - 1))
def test_derivative_consistency(seed):
    p = load_params()
    rng = np.random.default_rng(seed)
    x = flight_state()
    x[dyn.ATT] = rng.uniform([-3, -1.4, -3], [3, 1.4, 3])
    x[dyn.VEL] = rng.normal(0, 4, 3)
    u = np.append(rng.normal(0, 5, 4), rng.uniform(0, 1))
    xd = dyn.state_derivative(x, u, p)
    assert np.all(np.isfinite(xd))
    np.testing.assert_allclose(
        xd[dyn.POS], euler_to_rotation(x[dyn.ATT]) @ x[dyn.VEL], rtol=0, atol=1e-14
    )
    assert np.array_equal(xd[dyn.DEFL], u[:4])


def test_state_dataclasses_round_trip():
    x = np.arange(17.0)
    s = AircraftState.from_vector(x)
    assert np.array_equal(s.to_vector(), x)
    assert np.array_equal(np.asarray(s), x)
    u = ControlInput.from_vector([1, 2, 3, 4, 0.5])
    assert np.array_equal(np.asarray(u), [1, 2, 3, 4, 0.5])
    with pytest.raises(ValueError):
        AircraftState.from_vector(np.zeros(16))


def test_free_fall_integration(params):
    # no thrust, no flow: from rest the only force is gravity, |v| = g t.
    # surfaces see the fall velocity, so strip them to isolate the check
    tiny = params.replace(surfaces=[AeroSurface("speck", 1e-12)])
    sol = solve_ivp(
        lambda t, x: dyn.state_derivative(x, np.zeros(5), tiny),
        (0, 1.5), np.zeros(dyn.NX), rtol=1e-10, atol=1e-12,
    )
    v = sol.y[dyn.VEL, -1]
    assert np.linalg.norm(v) == pytest.approx(tiny.gravity * 1.5, rel=1e-8)


def test_thrust_fixed_point(params):
    sol = solve_ivp(
        lambda t, x: dyn.state_derivative(x, [0, 0, 0, 0, 1.0], params),
        (0, 5.0), np.zeros(dyn.NX), rtol=1e-10, atol=1e-12,
    )
    # -b/a with a = -4.9167, b = 9.6466
    assert sol.y[dyn.THRUST, -1] == pytest.approx(9.6466 / 4.9167, rel=1e-8)
    assert dyn.thrust_fixed_point(1.0, params) == pytest.approx(1.9620070372404254)


# -- linearisation -------------------------------------------------------------


def test_linearize_structure(params):
    x, u = flight_state(), np.array([0.5, -0.5, 0.2, 0.1, 0.6])
    A, B = dyn.linearize(x, u, params)
    R = euler_to_rotation(x[dyn.ATT])
    np.testing.assert_allclose(A[dyn.POS, dyn.VEL], R, atol=1e-9)
    assert np.all(A[dyn.POS, dyn.POS] == 0)
    np.testing.assert_allclose(B[dyn.THRUST], [0, 0, 0, 0, params.thrust_b], atol=1e-8)
    np.testing.assert_allclose(B[dyn.DEFL, :4], np.eye(4), atol=1e-8)


def test_linearize_richardson(params):
    x, u = flight_state(), np.array([0.5, -0.5, 0.2, 0.1, 0.6])
    A1, _ = dyn.linearize(x, u, params, eps=1e-2)
    A2, _ = dyn.linearize(x, u, params, eps=5e-3)
    A3, _ = dyn.linearize(x, u, params, eps=2.5e-3)
    ratio = np.abs(A1 - A2).max() / np.abs(A2 - A3).max()
    assert 3 <= ratio <= 5


def test_bad_params_rejected(params):
    with pytest.raises(ConfigError):
        params.replace(mass=-1.0)
    with pytest.raises(ConfigError):
        params.replace(inertia=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ConfigError):
        AeroSurface("bad", 0.0)
