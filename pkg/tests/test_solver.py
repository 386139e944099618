import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import sparse

from poststall.errors import ConfigError, GimbalLock
from poststall.solver import (
    Evaluation,
    SolverConfig,
    SolverState,
    Status,
    _min_norm_solve,
    _NormalCache,
    load_solver_config,
    solve_feasibility,
    with_overrides,
)


def problem(c_fun, c_jac, g_fun=None, g_jac=None):
    def evaluate(z, jac):
        c = np.atleast_1d(c_fun(z))
        g = np.zeros(0) if g_fun is None else np.atleast_1d(g_fun(z))
        if not jac:
            return Evaluation(c, g)
        Jg = np.zeros((0, z.size)) if g_jac is None else np.atleast_2d(g_jac(z))
        return Evaluation(c, g, np.atleast_2d(c_jac(z)), Jg)

    return evaluate


def circle():
    return problem(lambda z: z @ z - 1.0, lambda z: 2 * z[None, :])


BIG = np.full(2, 10.0)


# -- min-norm step ------------------------------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000), st.floats(min_value=1e-6, max_value=10.0))
def test_min_norm_step_matches_dense_formula(seed, lm):
    rng = np.random.default_rng(seed)
    m, n = 6, 11
    J = rng.normal(size=(m, n)) * (rng.uniform(size=(m, n)) < 0.5)
    J[:, -1] = rng.normal(size=m)  # the dense column
    r = rng.normal(size=m)
    cache = _NormalCache(sparse.csc_matrix(J), n - 1)
    SST, jd = cache.get(np.ones(n, dtype=bool))
    y = _min_norm_solve(SST, jd, r, lm)
    expected = -np.linalg.solve(J @ J.T + lm * np.eye(m), r)
    np.testing.assert_allclose(y, expected, rtol=1e-8, atol=1e-10)


def test_normal_cache_reuses_products_per_free_set():
    J = sparse.csc_matrix(np.arange(12.0).reshape(3, 4))
    cache = _NormalCache(J, None)
    free = np.array([True, False, True, True])
    assert cache.get(free) is cache.get(free.copy())
    SST, jd = cache.get(free)
    Jf = J.toarray()[:, free]
    np.testing.assert_allclose(SST.toarray(), Jf @ Jf.T)
    assert jd is None


# -- solve_feasibility ---------------------------------------------------------------------


def test_equality_on_circle():
    res = solve_feasibility(circle(), [2.0, 1.0], -BIG, BIG, np.ones(2))
    assert res.status is Status.FEASIBLE
    assert abs(res.z @ res.z - 1.0) <= 1e-4
    assert res.max_defect <= 1e-4


def test_already_feasible_takes_no_iterations():
    res = solve_feasibility(circle(), [1.0, 0.0], -BIG, BIG, np.ones(2))
    assert res.status is Status.FEASIBLE
    assert res.iterations == 0
    np.testing.assert_array_equal(res.z, [1.0, 0.0])


def test_inequality_pushes_iterate_across():
    ev = problem(lambda z: z @ z - 1.0, lambda z: 2 * z[None, :], lambda z: 0.3 - z[0], lambda z: [[-1.0, 0.0]])
    res = solve_feasibility(ev, [1.2, 0.1], -BIG, BIG, np.ones(2))
    assert res.status is Status.FEASIBLE
    assert res.z[0] <= 0.3 + 1e-6
    assert abs(res.z @ res.z - 1.0) <= 1e-4


def test_box_is_respected():
    lo, hi = np.array([0.8, -10.0]), np.array([10.0, 10.0])
    res = solve_feasibility(circle(), [0.1, 3.0], lo, hi, np.ones(2))
    assert res.status is Status.FEASIBLE
    assert res.z[0] >= 0.8
    assert abs(res.z @ res.z - 1.0) <= 1e-4


def test_fixed_variable_is_untouched():
    lo, hi = np.array([0.6, -10.0]), np.array([0.6, 10.0])
    res = solve_feasibility(circle(), [0.6, 2.0], lo, hi, np.ones(2))
    assert res.status is Status.FEASIBLE
    assert res.z[0] == 0.6
    assert abs(res.z[1] - 0.8) < 1e-4


def test_no_root_is_not_feasible():
    ev = problem(lambda z: z @ z + 1.0, lambda z: 2 * z[None, :])
    res = solve_feasibility(ev, [1.0, -0.5], -BIG, BIG, np.ones(2))
    assert res.status is Status.INFEASIBLE
    assert res.max_defect >= 1.0 - 1e-9


def test_box_excludes_every_root():
    lo, hi = np.array([2.0, 2.0]), np.array([3.0, 3.0])
    res = solve_feasibility(circle(), [2.5, 2.5], lo, hi, np.ones(2))
    assert res.status is not Status.FEASIBLE
    assert np.all(res.z >= lo) and np.all(res.z <= hi)


def test_iteration_cap():
    ev = problem(lambda z: z @ z + 1.0, lambda z: 2 * z[None, :])
    res = solve_feasibility(ev, [1.0, -0.5], -BIG, BIG, np.ones(2), SolverConfig(max_iters=1))
    assert res.iterations <= 1
    assert res.status is not Status.FEASIBLE


def test_per_row_tolerance_override():
    ev = problem(lambda z: np.array([z[0] - 1.0, z[1] - 2.0]), lambda z: np.eye(2))
    res = solve_feasibility(ev, [1.05, 2.0], -BIG, BIG, np.ones(2), eq_tol=[0.1, 1e-4])
    assert res.status is Status.FEASIBLE
    assert res.iterations == 0


def test_gimbal_lock_trial_points_are_rejected():
    calls = {"bad": 0}

    def evaluate(z, jac):
        if z[1] > 1.5:
            calls["bad"] += 1
            raise GimbalLock("test singularity")
        return circle()(z, jac)

    res = solve_feasibility(evaluate, [0.1, 1.4], -BIG, BIG, np.ones(2))
    assert res.status is Status.FEASIBLE
    assert res.z[1] <= 1.5


def test_deterministic():
    ev = problem(lambda z: z @ z - 1.0, lambda z: 2 * z[None, :], lambda z: 0.3 - z[0], lambda z: [[-1.0, 0.0]])
    a = solve_feasibility(ev, [1.2, 0.1], -BIG, BIG, np.ones(2))
    b = solve_feasibility(ev, [1.2, 0.1], -BIG, BIG, np.ones(2))
    np.testing.assert_array_equal(a.z, b.z)
    assert a.iterations == b.iterations


def test_warm_state_round_trips():
    ev = problem(lambda z: z @ z - 1.0, lambda z: 2 * z[None, :], lambda z: 0.3 - z[0], lambda z: [[-1.0, 0.0]])
    first = solve_feasibility(ev, [1.2, 0.1], -BIG, BIG, np.ones(2))
    assert first.state.lam.shape == (1,) and first.state.nu.shape == (1,)
    again = solve_feasibility(ev, first.z, -BIG, BIG, np.ones(2), warm=first.state)
    assert again.status is Status.FEASIBLE and again.iterations == 0
    # a state of the wrong size is ignored rather than misapplied
    odd = SolverState(np.zeros(3), np.zeros(0), 1.0, 1e-3)
    assert solve_feasibility(ev, [1.2, 0.1], -BIG, BIG, np.ones(2), warm=odd).status is Status.FEASIBLE


def test_empty_box_rejected():
    with pytest.raises(ValueError):
        solve_feasibility(circle(), [0.0, 0.0], np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.ones(2))


# -- configuration ----------------------------------------------------------------------------


def test_config_from_mapping_and_file(tmp_path):
    cfg = SolverConfig.from_dict({"max_iters": 50, "tol_defect": 1e-5})
    assert cfg.max_iters == 50 and cfg.tol_defect == 1e-5
    path = tmp_path / "solver.yaml"
    path.write_text("max_iters: 12\nmu_growth: 5\n")
    cfg = load_solver_config(path)
    assert cfg.max_iters == 12 and cfg.mu_growth == 5.0
    assert load_solver_config(None) == SolverConfig()
    assert with_overrides(cfg, max_iters=3).max_iters == 3


@pytest.mark.parametrize("doc", [{"bogus": 1}, {"tol_defect": -1.0}, {"max_iters": 0}, {"max_iters": "many"}, [1]])
def test_bad_config_rejected(doc):
    with pytest.raises(ConfigError):
        SolverConfig.from_dict(doc)


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_solver_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("max_iters: [1,\n")
    with pytest.raises(ConfigError):
        load_solver_config(bad)
