import numpy as np
import pytest
from scipy.linalg import solve_continuous_lyapunov

from poststall.dynamics import ATT, NX, POS
from poststall.errors import RiccatiBlowup
from poststall.harness import corner_problem, following_costs
from poststall.params import load_params
from poststall.trajopt import U_MAX, U_MIN, solve
from poststall.tvlqr import (
    INPUT_MAP,
    Q_DIAG,
    QF_DIAG,
    R_DIAG,
    Telemetry,
    default_weights,
    feedback_control,
    gain_at,
    open_loop_control,
    riccati_backward,
    riccati_sweep,
    state_error,
    wrap_angle,
)


@pytest.fixture(scope="module")
def params():
    return load_params()


@pytest.fixture(scope="module")
def nominal():
    case = corner_problem(10, "hs")
    traj, _, _ = solve(case.problem, case.seed())
    return traj


@pytest.fixture(scope="module")
def policy(nominal, params):
    return riccati_backward(nominal, params)


def kleinman(A, B, Q, R, iters=50):
    """Newton iteration on the algebraic Riccati equation from a stabilising gain."""
    n = A.shape[0]
    shift = max(0.0, np.linalg.eigvals(A).real.max()) + 1.0
    # Bass's stabilising start from a Lyapunov equation of the shifted system
    As = A + shift * np.eye(n)
    L = solve_continuous_lyapunov(As, 2 * B @ B.T)
    K = B.T @ np.linalg.inv(L)
    P = None
    for _ in range(iters):
        Ak = A - B @ K
        P_new = solve_continuous_lyapunov(Ak.T, -(Q + K.T @ R @ K))
        K = np.linalg.solve(R, B.T @ P_new)
        if P is not None and np.abs(P_new - P).max() <= 1e-14 * np.abs(P_new).max():
            return P_new
        P = P_new
    return P


def lti_system(seed=0, n=NX, m=4):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, n)) * 0.2, rng.normal(size=(n, m))


# -- Riccati sweep --------------------------------------------------------------------------


def test_lti_sweep_converges_to_algebraic_solution():
    A, B = lti_system()
    Q, R, Q_f = np.eye(NX), np.eye(4), 2 * np.eye(NX)
    P = kleinman(A, B, Q, R)
    np.testing.assert_allclose(A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q, 0.0, atol=1e-9)
    M = 200
    times = np.linspace(0.0, 40.0, M + 1)
    S = riccati_sweep(times, np.repeat(A[None], 2 * M + 1, 0), np.repeat(B[None], 2 * M + 1, 0), Q, R, Q_f)
    assert np.abs(S[0] - P).max() <= 1e-6 * np.abs(P).max()


def test_terminal_condition_is_exact(policy):
    assert np.array_equal(policy.S[-1], policy.Q_f)


def test_cost_to_go_is_symmetric_positive(policy):
    np.testing.assert_array_equal(policy.S, np.transpose(policy.S, (0, 2, 1)))
    assert np.linalg.eigvalsh(policy.S).min() > 0


def test_gain_formula(policy):
    K = np.linalg.solve(policy.R, np.transpose(policy.B, (0, 2, 1)) @ policy.S)
    np.testing.assert_allclose(policy.K, K, rtol=1e-12, atol=1e-12)
    assert policy.K.shape[1:] == (4, NX)
    assert policy.K_inputs.shape[1:] == (5, NX)
    np.testing.assert_allclose(policy.K_inputs[:, 0], -policy.K_inputs[:, 1])


def test_default_weights():
    Q, R, Q_f = default_weights()
    assert Q.shape == (NX, NX) and R.shape == (4, 4) and Q_f.shape == (NX, NX)
    np.testing.assert_array_equal(np.diag(Q), Q_DIAG)
    np.testing.assert_array_equal(np.diag(R), R_DIAG)
    np.testing.assert_array_equal(np.diag(Q_f), QF_DIAG)


def test_grid_refinement_converges(nominal, params):
    fine = riccati_backward(nominal, params, grid_refinement=16).S[0]
    finer = riccati_backward(nominal, params, grid_refinement=32).S[0]
    assert np.abs(fine - finer).max() < 1e-6 * np.abs(finer).max()


def test_blowup_detected(nominal, params):
    with pytest.raises(RiccatiBlowup):
        riccati_backward(nominal, params, s_cap=1.0)


def test_bad_refinement(nominal, params):
    with pytest.raises(ValueError):
        riccati_backward(nominal, params, grid_refinement=0)


# -- gains and control ------------------------------------------------------------------------


def test_gain_interpolation(policy):
    t = policy.times
    np.testing.assert_array_equal(gain_at(policy, t[3]), policy.K[3])
    mid = 0.5 * (t[3] + t[4])
    np.testing.assert_allclose(gain_at(policy, mid), 0.5 * (policy.K[3] + policy.K[4]), atol=1e-12)
    np.testing.assert_array_equal(gain_at(policy, t[0] - 1.0), policy.K[0])
    np.testing.assert_array_equal(gain_at(policy, t[-1] + 1.0), policy.K[-1])


def test_on_nominal_feedback_returns_nominal_input(policy):
    for t in np.linspace(policy.t0, policy.t_end, 7):
        x0, u0 = policy.nominal(t)
        np.testing.assert_allclose(feedback_control(policy, t, x0), np.clip(u0, U_MIN, U_MAX), atol=1e-12)
        np.testing.assert_array_equal(open_loop_control(policy, t), np.clip(u0, U_MIN, U_MAX))


def test_feedback_opposes_error(policy):
    # the correction lowers the local cost-to-go rate along B
    t = policy.t0
    x0, _ = policy.nominal(t)
    rng = np.random.default_rng(0)
    for _ in range(10):
        dx = rng.normal(size=NX) * 1e-3
        dv = -gain_at(policy, t) @ dx
        assert dx @ policy.S[0] @ policy.B[0] @ dv <= 0


def test_saturation_is_reported(policy):
    tel = Telemetry()
    x0, _ = policy.nominal(policy.t0)
    x = x0.copy()
    x[POS] += 100.0
    u = feedback_control(policy, policy.t0, x, tel)
    assert np.all(u >= U_MIN) and np.all(u <= U_MAX)
    assert tel.calls == 1 and tel.saturations == 1
    feedback_control(policy, policy.t0, x0, tel)
    assert tel.calls == 2 and tel.saturations == 1


def test_attitude_error_wraps(policy):
    assert wrap_angle(np.pi) == pytest.approx(np.pi)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)
    assert wrap_angle(2 * np.pi - 0.1) == pytest.approx(-0.1)
    x0, _ = policy.nominal(policy.t0)
    x = x0.copy()
    x[ATT.start + 2] += 2 * np.pi
    np.testing.assert_allclose(state_error(x, x0), 0.0, atol=1e-12)
    np.testing.assert_allclose(feedback_control(policy, policy.t0, x), feedback_control(policy, policy.t0, x0),
                               atol=1e-9)


def test_feedback_contracts_perturbations(nominal, policy, params):
    rng = np.random.default_rng(1)
    x0 = []
    for _ in range(5):
        x = nominal.states[0].copy()
        x[POS] += rng.normal(size=3) * 0.05
        x[ATT] += rng.normal(size=3) * 0.03
        x0.append(x)
    on = following_costs([nominal] * 5, [policy] * 5, params, feedback=True, x0=x0)
    off = following_costs([nominal] * 5, [policy] * 5, params, feedback=False, x0=x0)
    assert np.median(on) < np.median(off)


def test_input_map_links_ailerons():
    v = np.array([0.3, 0.1, -0.2, 0.5])
    u = INPUT_MAP @ v
    assert u[0] == -u[1] == 0.3
    np.testing.assert_array_equal(u[2:], v[1:])


def test_policy_csv(policy, tmp_path):
    policy.to_csv(tmp_path / "gains.csv")
    rows = (tmp_path / "gains.csv").read_text().splitlines()
    assert len(rows) == policy.times.size + 1
    assert len(rows[0].split(",")) == 1 + NX + 4 * NX
