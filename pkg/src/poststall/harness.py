"""Closed-loop receding-horizon simulation, knot-point benchmark and trim sweep."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dynamics import (
    ATT,
    DEFL,
    NX,
    POS,
    RATE,
    THRUST,
    VEL,
    derivative_batch,
    surface_aoas,
)
from .environment import DistanceField, HallwaySpec, build_field, corner_map
from .errors import GimbalLock, PoststallError, RiccatiBlowup
from .params import AircraftParams, load_params, perturbed, uncorrected
from .rotations import GIMBAL_EPS
from .seed_planner import (
    TimeParamPath,
    WaypointPath,
    g2cbs_smooth,
    plan_seed,
    reparametrize_time,
    select_endpoint,
)
from .solver import SolverConfig, Status
from .trajopt import (
    RADIUS,
    X_MAX,
    X_MIN,
    Method,
    NlpProblem,
    Trajectory,
    WarmStart,
    resolve_warm,
    seed_from_path,
    solve,
    terminal_state,
    trim_guess,
)
from .trim import TrimGuess, level_state, trim_turn_radius
from .tvlqr import (
    Telemetry,
    TvlqrPolicy,
    feedback_control,
    open_loop_control,
    riccati_backward,
    state_error,
)

TRUTH_DT = 1e-3
R_HARD = 0.15
GOAL_RADIUS = 0.5
CRUISE_SPEED = 4.0
LOG_EVERY = 10
# replans start far from trim and converge slowly; lockstep mode does not charge for the time
REPLAN_ITERS = 1000
SPEED_LIMIT = 30.0
RATE_LIMIT = 60.0


# -- truth integration --------------------------------------------------------------


def _pitch_ok(X):
    return np.abs(X[:, ATT.start + 1]) < 0.5 * np.pi - GIMBAL_EPS


def rk4_step(X, U, P, dt):
    """One RK4 step for stacked states with the input held; ``dt`` may be per-row."""
    dt = np.asarray(dt, float).reshape(-1, 1) if np.ndim(dt) else dt
    k1 = derivative_batch(X, U, P)
    k2 = derivative_batch(X + 0.5 * dt * k1, U, P)
    k3 = derivative_batch(X + 0.5 * dt * k2, U, P)
    k4 = derivative_batch(X + dt * k3, U, P)
    return X + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _safe_rk4(X, U, P, dt):
    """RK4 per row; rows that hit the Euler singularity come back as NaN."""
    try:
        return rk4_step(X, U, P, dt)
    except GimbalLock:
        out = np.full_like(X, np.nan)
        dts = np.broadcast_to(np.asarray(dt, float).ravel(), (X.shape[0],)) if np.ndim(dt) else [dt] * X.shape[0]
        for i in range(X.shape[0]):
            try:
                out[i] = rk4_step(X[i : i + 1], U[i : i + 1], P, dts[i])[0]
            except GimbalLock:
                pass
        return out


# -- trajectory following ---------------------------------------------------------------


def _terminal_cost(x, x_target, Q_f):
    dx = state_error(x, x_target)
    return float(dx @ Q_f @ dx)


def following_costs(trajs, policies, truth_params: AircraftParams, dt=TRUTH_DT, feedback=True, x0=None):
    """Terminal quadratic ``(x(T) - x_N)' Q_f (x(T) - x_N)`` after flying each policy.

    All rows are integrated together with RK4; each row uses ``ceil(T / dt)``
    equal steps so it ends exactly at its own horizon.  A row that reaches the
    Euler singularity scores ``inf``.
    """
    n = len(trajs)
    if n == 0:
        return np.zeros(0)
    P = truth_params.packed
    X = np.array([p.traj.states[0] if x0 is None else x0[i] for i, p in enumerate(policies)], dtype=float)
    steps = np.array([max(1, int(np.ceil(t.duration / dt - 1e-9))) for t in trajs])
    dts = np.array([t.duration for t in trajs]) / steps
    alive = np.ones(n, dtype=bool)
    for j in range(int(steps.max())):
        rows = np.flatnonzero(alive & (steps > j))
        if rows.size == 0:
            break
        U = np.empty((rows.size, 5))
        for q, i in enumerate(rows):
            t = policies[i].t0 + j * dts[i]
            U[q] = feedback_control(policies[i], t, X[i]) if feedback else open_loop_control(policies[i], t)
        ok = _pitch_ok(X[rows])
        Xn = np.full((rows.size, NX), np.nan)
        if ok.any():
            Xn[ok] = _safe_rk4(X[rows[ok]], U[ok], P, dts[rows[ok]])
        X[rows] = Xn
        bad = ~np.all(np.isfinite(Xn), axis=1)
        alive[rows[bad]] = False
    costs = np.full(n, np.inf)
    for i in range(n):
        if alive[i]:
            costs[i] = _terminal_cost(X[i], trajs[i].states[-1], policies[i].Q_f)
    return costs


def following_cost(traj: Trajectory, policy: TvlqrPolicy, truth_params: AircraftParams, dt=TRUTH_DT) -> float:
    """Terminal quadratic cost of the truth model flying ``policy`` from ``x0(0)``; ``inf`` on gimbal lock."""
    return float(following_costs([traj], [policy], truth_params, dt)[0])


# -- corner fixture and benchmark ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CornerCase:
    problem: NlpProblem
    path: TimeParamPath
    trim: TrimGuess

    def seed(self) -> Trajectory:
        return seed_from_path(self.path, self.problem.N, self.problem.params, trim=self.trim)


_CORNER_FIELD = {}


def corner_field() -> DistanceField:
    if "field" not in _CORNER_FIELD:
        _CORNER_FIELD["field"] = build_field(corner_map())
    return _CORNER_FIELD["field"]


def corner_problem(N=10, method="hs", params: AircraftParams | None = None, speed=CRUISE_SPEED,
                   offset=None) -> CornerCase:
    """90 degree corner: level trim flight down the first leg, through the turn, into the second.

    ``offset`` shifts the initial position (the benchmark's perturbed trials).
    """
    params = load_params() if params is None else params
    spec = corner_map()
    half = spec.width / 2
    x_turn = spec.segments[0][3] - half
    start = np.array([2.0, half, -spec.height / 2])
    path = WaypointPath([start, [x_turn, half, start[2]], [x_turn, 2.9, start[2]]])
    tp = reparametrize_time(g2cbs_smooth(path))
    trim = trim_guess(params, speed)
    x_i = level_state(speed, trim.alpha, trim.elevator, trim.thrust)
    x_i[POS] = start if offset is None else start + np.asarray(offset, float)
    p_end, v_end = select_endpoint(tp, 10.0)
    x_f = terminal_state(p_end, v_end, trim)
    prob = NlpProblem(N=N, method=method, x_i=x_i, x_f=x_f, params=params, field=corner_field())
    return CornerCase(prob, tp, trim)


def trial_offsets(trials: int, seed=0, max_offset=0.1) -> np.ndarray:
    """Random initial-position offsets with norm uniform in ``[0, max_offset]``."""
    rng = np.random.default_rng(seed)
    out = np.empty((trials, 3))
    for i in range(trials):
        d = rng.normal(size=3)
        out[i] = d / np.linalg.norm(d) * max_offset * rng.uniform()
    return out


BENCH_COLUMNS = ("method", "N", "trials", "warm", "median_solve_time", "median_eval_time", "feasibility_rate",
                 "median_iterations", "median_outer_iterations", "median_following_cost")


@dataclass
class BenchRow:
    method: str
    N: int
    trials: int
    warm: bool
    median_solve_time: float
    median_eval_time: float
    feasibility_rate: float
    median_iterations: float
    median_outer_iterations: float
    median_following_cost: float
    reports: list = field(default_factory=list, repr=False)

    def values(self):
        return [self.method, self.N, self.trials, str(self.warm).lower(), f"{self.median_solve_time:.6f}",
                f"{self.median_eval_time:.6f}", f"{self.feasibility_rate:.3f}", f"{self.median_iterations:g}",
                f"{self.median_outer_iterations:g}", f"{self.median_following_cost:.6g}"]


def _median(values):
    v = np.asarray(values, float)
    return float(np.median(v)) if v.size else float("nan")


def benchmark_knots(method, N_list, trials=5, warm=False, params: AircraftParams | None = None,
                    config: SolverConfig = SolverConfig(), seed=0, costs=True) -> list:
    """Solve the corner problem over ``N_list`` for perturbed initial positions.

    Cold trials start from the path seed.  Warm trials first solve the
    unperturbed problem, then re-solve each perturbation from that solution;
    their timings exclude the first solve.  Following costs fly each result on
    the unperturbed model with TVLQR feedback.
    """
    if not N_list:
        raise ValueError("N_list must not be empty")
    if trials < 1:
        raise ValueError("need at least one trial")
    method = Method.parse(method)
    params = load_params() if params is None else params
    offsets = trial_offsets(trials, seed)
    rows = []
    for N in N_list:
        base = corner_problem(N, method, params)
        previous = None
        if warm:
            _, _, previous = solve(base.problem, base.seed(), config=config)
        reports, trajs = [], []
        for off in offsets:
            x_i = base.problem.x_i.copy()
            x_i[POS] += off
            if warm and previous is not None:
                traj, rep, _ = resolve_warm(base.problem, previous, x_i, config)
            else:
                traj, rep, _ = solve(base.problem.with_initial_state(x_i), base.seed(), config=config)
            reports.append(rep)
            trajs.append(traj)
        cost = float("nan")
        if costs:
            cost = _median(_policy_costs(trajs, params))
        rows.append(BenchRow(
            method=method.value, N=int(N), trials=trials, warm=bool(warm),
            median_solve_time=_median([r.solve_time for r in reports]),
            median_eval_time=_median([r.eval_time for r in reports]),
            feasibility_rate=float(np.mean([r.status is Status.FEASIBLE for r in reports])),
            median_iterations=_median([r.iterations for r in reports]),
            median_outer_iterations=_median([r.outer_iterations for r in reports]),
            median_following_cost=cost, reports=reports,
        ))
    return rows


def _policy_costs(trajs, params):
    policies, keep = [], []
    for i, tr in enumerate(trajs):
        try:
            policies.append(riccati_backward(tr, params))
            keep.append(i)
        except (GimbalLock, RiccatiBlowup):
            continue
    out = np.full(len(trajs), np.inf)
    if keep:
        out[keep] = following_costs([trajs[i] for i in keep], policies, params)
    return out


def write_bench_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(BENCH_COLUMNS)
        for r in rows:
            w.writerow(r.values())


# -- closed loop --------------------------------------------------------------------------


class Outcome(str, Enum):
    REACHED = "ReachedGoal"
    COLLIDED = "Collided"
    DIVERGED = "Diverged"
    TIMEOUT = "Timeout"


class Mode(str, Enum):
    LOCKSTEP = "lockstep"
    REALTIME = "realtime"


def mismatch_pair(kind, params: AircraftParams, seed=0):
    """``(truth, model)`` parameter sets for a mismatch kind.

    ``none``: identical.  ``identified``: truth keeps the identified area
    corrections, the controller model drops them.  ``perturbed``: truth
    areas and inertia randomly scaled.  Anything else is a parameter file
    read as the truth.
    """
    if isinstance(kind, AircraftParams):
        return kind, params
    if kind in (None, "none"):
        return params, params
    if kind == "identified":
        return params, uncorrected(params)
    if kind == "perturbed":
        return perturbed(params, np.random.default_rng(seed)), params
    return load_params(kind), params


@dataclass(frozen=True, eq=False)
class RunConfig:
    truth_params: AircraftParams
    model_params: AircraftParams
    feedback: bool = True
    replan_hz: float = 5.0
    horizon: float = 1.0
    rng_seed: int = 0
    max_sim_time: float = 8.0
    dt: float = TRUTH_DT
    mode: Mode = Mode.LOCKSTEP
    knots: int = 10
    method: Method = Method.HERMITE_SIMPSON
    radius: float = RADIUS
    r_hard: float = R_HARD
    goal_radius: float = GOAL_RADIUS
    speed: float = CRUISE_SPEED
    launch_jitter: float = 0.05
    solver: SolverConfig = SolverConfig(max_iters=REPLAN_ITERS)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "method", Method.parse(self.method))
        if not self.replan_hz > 0 or not self.horizon > 0:
            raise ValueError("replan_hz and horizon must be positive")
        if not self.dt > 0 or not self.max_sim_time > 0:
            raise ValueError("dt and max_sim_time must be positive")

    @classmethod
    def with_mismatch(cls, kind="identified", params: AircraftParams | None = None, seed=0, **kw) -> RunConfig:
        params = load_params() if params is None else params
        truth, model = mismatch_pair(kind, params, seed)
        return cls(truth_params=truth, model_params=model, rng_seed=seed, **kw)


LOG_COLUMNS = ("t", "plan_id") + tuple(f"x_{i}" for i in range(NX)) + tuple(f"u_{i}" for i in range(5)) + (
    "clearance", "wing_aoa")


@dataclass
class PlanRecord:
    plan_id: int
    t_request: float
    t_active: float
    status: str
    iterations: int
    max_defect: float
    max_violation: float
    solve_time: float
    accepted: bool
    note: str = ""


@dataclass
class RunLog:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    inputs: list = field(default_factory=list)
    plan_ids: list = field(default_factory=list)
    clearances: list = field(default_factory=list)
    wing_aoa: list = field(default_factory=list)
    plans: list = field(default_factory=list)
    swaps: list = field(default_factory=list)
    min_clearance: float = np.inf
    min_clearance_time: float = 0.0
    peak_aoa: dict = field(default_factory=dict)
    outcome: Outcome = Outcome.TIMEOUT
    end_time: float = 0.0
    saturations: int = 0
    planner_clearance_violations: int = 0

    @property
    def peak_wing_aoa(self) -> float:
        return self.peak_aoa.get("wing", float("nan"))

    def record(self, t, x, u, plan_id, clearance, aoas):
        self.times.append(t)
        self.states.append(np.array(x))
        self.inputs.append(np.array(u))
        self.plan_ids.append(plan_id)
        self.clearances.append(clearance)
        self.wing_aoa.append(aoas.get("wing", np.nan))
        for k, v in aoas.items():
            if np.isfinite(v):
                self.peak_aoa[k] = max(self.peak_aoa.get(k, 0.0), abs(v))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(LOG_COLUMNS)
            for t, pid, x, u, c, a in zip(self.times, self.plan_ids, self.states, self.inputs, self.clearances,
                                          self.wing_aoa):
                w.writerow([f"{t:.3f}", pid, *(f"{v:.9g}" for v in x), *(f"{v:.9g}" for v in u), f"{c:.6f}",
                            f"{a:.6f}"])

    def plans_to_csv(self, path) -> None:
        """Per-replan results without wall-clock timings (deterministic in lockstep mode)."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["plan_id", "t_request", "t_active", "status", "iterations", "max_defect", "max_violation",
                        "accepted", "note"])
            for p in self.plans:
                w.writerow([p.plan_id, f"{p.t_request:.3f}", f"{p.t_active:.3f}", p.status, p.iterations,
                            f"{p.max_defect:.3e}", f"{p.max_violation:.3e}", str(p.accepted).lower(), p.note])

    def summary_text(self, config: RunConfig | None = None, timings=False) -> str:
        solve_times = [p.solve_time for p in self.plans]
        rows = [
            ("outcome", self.outcome.value), ("end_time", f"{self.end_time:.3f}"),
            ("min_clearance", f"{self.min_clearance:.4f}"), ("min_clearance_time", f"{self.min_clearance_time:.3f}"),
            ("peak_wing_aoa_deg", f"{np.degrees(self.peak_wing_aoa):.2f}"),
            ("replans", len(self.plans)), ("accepted_plans", sum(p.accepted for p in self.plans)),
            ("plan_swaps", len(self.swaps)), ("saturated_commands", self.saturations),
            ("planning_radius_violations", self.planner_clearance_violations),
        ]
        if timings:
            # wall-clock, so not reproducible between runs
            rows.append(("median_solve_time", f"{_median(solve_times):.4f}" if solve_times else "nan"))
        if config is not None:
            rows += [("feedback", "on" if config.feedback else "off"), ("mode", config.mode.value),
                     ("seed", config.rng_seed)]
        return "".join(f"{k}: {v}\n" for k, v in rows)


@dataclass
class _Plan:
    plan_id: int
    traj: Trajectory
    policy: TvlqrPolicy
    warm: WarmStart


class _Planner:
    """Seed plan, optimise and stabilise from the current true state."""

    def __init__(self, spec: HallwaySpec, field_: DistanceField, config: RunConfig):
        self.spec = spec
        self.field = field_
        self.config = config
        self.goal = np.array(spec.goal)
        self.trim = trim_guess(config.model_params, config.speed)
        self.count = 0

    def replan(self, t, x, previous: _Plan | None):
        cfg = self.config
        self.count += 1
        pid = self.count
        pos = x[POS]
        clear = float(self.field.min_distance(pos[None])[0])
        if clear <= 0.0:
            return None, PlanRecord(pid, t, t, "NoPlan", 0, np.inf, np.inf, 0.0, False, "start in obstacle")
        # inside the margin the start itself would violate d >= r: plan with a shrunken radius
        radius = min(cfg.radius, 0.9 * clear)
        try:
            tp = plan_seed(self.field, pos, self.goal, radius,
                           seed=cfg.rng_seed * 100003 + pid, max_iters=4000)
        except PoststallError as exc:
            return None, PlanRecord(pid, t, t, "NoPlan", 0, np.inf, np.inf, 0.0, False, type(exc).__name__)
        # the measured state can sit just outside the planning box (e.g. speed)
        x = np.clip(x, X_MIN, X_MAX)
        N = cfg.knots
        seed = seed_from_path(tp, N, cfg.model_params, horizon=cfg.horizon, trim=self.trim, t0=t)
        X = seed.states.copy()
        yaw_shift = 2 * np.pi * np.round((x[ATT.start + 2] - X[0, ATT.start + 2]) / (2 * np.pi))
        X[:, ATT.start + 2] += yaw_shift
        X[0] = x
        p_end, v_end = select_endpoint(tp, cfg.horizon)
        x_f = terminal_state(p_end, v_end, self.trim, yaw_ref=X[-1, ATT.start + 2])
        prob = NlpProblem(N=N, method=cfg.method, x_i=x, x_f=x_f, params=cfg.model_params, field=self.field,
                          r=radius)
        init = Trajectory(X, seed.inputs, seed.h, t)
        warm = None
        if previous is not None and previous.traj.N == N:
            init = _shift(previous.traj, init, cfg.model_params)
            warm = WarmStart(init, previous.warm.state)
        try:
            traj, rep, ws = solve(prob, init, warm=warm, config=cfg.solver)
        except GimbalLock:
            return None, PlanRecord(pid, t, t, "GimbalLock", 0, np.inf, np.inf, 0.0, False)
        record = PlanRecord(pid, t, t, rep.status.value, rep.iterations, rep.max_defect, rep.max_violation,
                            rep.solve_time, False)
        if rep.status is not Status.FEASIBLE:
            return None, record
        try:
            policy = riccati_backward(traj, cfg.model_params)
        except (GimbalLock, RiccatiBlowup) as exc:
            record.note = type(exc).__name__
            return None, record
        record.accepted = True
        return _Plan(pid, traj, policy, ws), record


def _shift(previous: Trajectory, seed: Trajectory, params) -> Trajectory:
    """Previous solution resampled at the new knot times; the path seed beyond its span."""
    X, U = seed.states.copy(), seed.inputs.copy()
    times = seed.times
    inside = times <= previous.t0 + previous.duration
    if inside.sum() > 1:
        Xp, Up = previous.interpolate(times[inside], params)
        X[inside] = Xp
        U[inside] = Up
    X[0] = seed.states[0]
    return Trajectory(X, U, seed.h, seed.t0)


def launch_state(spec: HallwaySpec, params: AircraftParams, rng, jitter=0.05) -> np.ndarray:
    """Level trim flight at the map's launch pose, with small random position and heading jitter."""
    x0, y0, z0, heading, speed = spec.start
    trim = trim_guess(params, speed)
    x = level_state(speed, trim.alpha, trim.elevator, trim.thrust, yaw=heading)
    x[POS] = [x0, y0, z0]
    if jitter > 0:
        x[POS] += rng.uniform(-jitter, jitter, size=3)
        x[ATT.start + 2] += rng.uniform(-jitter, jitter)
    return x


def closed_loop_run(spec: HallwaySpec, config: RunConfig, field_: DistanceField | None = None) -> RunLog:
    """Fly the truth model under receding-horizon replanning.

    Every ``1 / replan_hz`` seconds a new plan is requested from the current
    true state.  In lockstep mode it becomes active at once; in realtime mode
    only after its measured solve time, the previous policy flying meanwhile.
    A failed replan keeps the previous plan.  Between replans the command is
    the TVLQR law, or the raw plan input with feedback off.
    """
    field_ = build_field(spec) if field_ is None else field_
    rng = np.random.default_rng(config.rng_seed)
    planner = _Planner(spec, field_, config)
    P = config.truth_params.packed
    goal = np.array(spec.goal)
    x = launch_state(spec, config.truth_params, rng, config.launch_jitter)
    log = RunLog()
    telemetry = Telemetry()
    trim_u = np.zeros(5)
    trim_u[4] = -config.model_params.thrust_a * planner.trim.thrust / config.model_params.thrust_b
    active: _Plan | None = None
    pending: tuple | None = None  # (activation time, plan)
    period = 1.0 / config.replan_hz
    ticks_per_replan = max(1, int(round(period / config.dt)))
    n_steps = int(np.ceil(config.max_sim_time / config.dt))
    outcome = Outcome.TIMEOUT
    t = 0.0
    for step in range(n_steps + 1):
        t = step * config.dt
        if step % ticks_per_replan == 0:
            plan, record = planner.replan(t, x, active)
            if config.mode is Mode.REALTIME:
                record.t_active = t + record.solve_time
            log.plans.append(record)
            if plan is not None:
                if config.mode is Mode.LOCKSTEP:
                    active = plan
                    log.swaps.append((t, plan.plan_id))
                else:
                    pending = (record.t_active, plan)
        if pending is not None and t >= pending[0]:
            active = pending[1]
            log.swaps.append((t, active.plan_id))
            pending = None
        if active is None:
            u = trim_u
        elif config.feedback:
            u = feedback_control(active.policy, t, x, telemetry)
        else:
            u = open_loop_control(active.policy, t)
        clearance = float(field_.min_distance(x[POS][None])[0])
        if clearance < log.min_clearance:
            log.min_clearance, log.min_clearance_time = clearance, t
        if step % LOG_EVERY == 0 or clearance < config.r_hard:
            log.record(t, x, u, 0 if active is None else active.plan_id, clearance,
                       surface_aoas(x, config.truth_params, u))
            if clearance < config.radius:
                log.planner_clearance_violations += 1
        if clearance < config.r_hard:
            outcome = Outcome.COLLIDED
            break
        if np.linalg.norm(x[POS] - goal) <= config.goal_radius:
            outcome = Outcome.REACHED
            if step % LOG_EVERY != 0:
                log.record(t, x, u, 0 if active is None else active.plan_id, clearance,
                           surface_aoas(x, config.truth_params, u))
            break
        if step == n_steps:
            break
        x_next = _safe_rk4(x[None], u[None], P, config.dt)[0]
        if (not np.all(np.isfinite(x_next)) or np.linalg.norm(x_next[VEL]) > SPEED_LIMIT
                or np.abs(x_next[RATE]).max() > RATE_LIMIT or not _pitch_ok(x_next[None])[0]):
            outcome = Outcome.DIVERGED
            log.record(t, x, u, 0 if active is None else active.plan_id, clearance,
                       surface_aoas(x, config.truth_params, u))
            break
        # servo throws and the throttle range saturate
        x_next[DEFL] = np.clip(x_next[DEFL], X_MIN[DEFL], X_MAX[DEFL])
        x_next[THRUST] = np.clip(x_next[THRUST], X_MIN[THRUST], X_MAX[THRUST])
        x = x_next
    log.outcome = outcome
    log.end_time = t
    log.saturations = telemetry.saturations
    return log


__all__ = [
    "BENCH_COLUMNS",
    "GOAL_RADIUS",
    "LOG_COLUMNS",
    "R_HARD",
    "TRUTH_DT",
    "BenchRow",
    "CornerCase",
    "Mode",
    "Outcome",
    "PlanRecord",
    "RunConfig",
    "RunLog",
    "benchmark_knots",
    "closed_loop_run",
    "corner_field",
    "corner_problem",
    "following_cost",
    "following_costs",
    "launch_state",
    "mismatch_pair",
    "rk4_step",
    "trial_offsets",
    "trim_turn_radius",
    "write_bench_csv",
]
