"""Direct transcription of the feasibility problem.

Decision vector layout is ``[x_0 .. x_N, u_0 .. u_N, h]``.  The objective is
identically zero; the constraints are the dynamics defects (Hermite-Simpson or
forward Euler), the initial and final state boxes, simple state / input / step
bounds, the aileron linkage and the collision clearance ``d(p) >= r`` checked at
every knot and at interior points of the cubic Hermite position interpolant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .dynamics import (
    ATT,
    DEFL,
    NU,
    NX,
    POS,
    THRUST,
    VEL,
    derivative_batch,
    jacobians_batch,
)
from .environment import DistanceField
from .errors import ConfigError, TrimInfeasible
from .params import AircraftParams
from .rotations import euler_to_rotation
from .seed_planner import TimeParamPath
from .solver import SolverConfig, SolverState, Status, solve_feasibility
from .trim import TrimGuess, level_trim

# final-state box half-widths for [r, theta, delta, delta_t, v, omega]
DELTA_F = np.array([0.1, 0.1, 0.2, 0.5, 1.0, 0.2, 100, 100, 100, 100, 100, 3, 3, 0.5, 2, 2, 2], dtype=float)
DELTA_I = np.full(NX, 1e-6)
H_MIN, H_MAX = 0.02, 0.3
RADIUS = 0.55
# Hermite fractions inside each interval where clearance is also enforced
COLLISION_FRACTIONS = (0.25, 0.5, 0.75)

_HALF_PI = 0.5 * np.pi
X_MIN = np.array([-20, -20, -20, -np.pi, -_HALF_PI + 0.1, -2 * np.pi, -0.8, -0.8, -0.8, -0.8, 0.0,
                  -10, -10, -10, -15, -15, -15], dtype=float)
X_MAX = -X_MIN
X_MAX[THRUST] = 2.0
U_MIN = np.array([-10, -10, -10, -10, 0.0], dtype=float)
U_MAX = np.array([10, 10, 10, 10, 1.0], dtype=float)


class Method(str, Enum):
    HERMITE_SIMPSON = "hs"
    EULER = "euler"

    @classmethod
    def parse(cls, value) -> Method:
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "").replace("_", "")
        if key in ("hs", "hermitesimpson"):
            return cls.HERMITE_SIMPSON
        if key == "euler":
            return cls.EULER
        raise ConfigError(f"unknown transcription method {value!r}")


# -- trajectory -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    states: np.ndarray
    inputs: np.ndarray
    h: float
    t0: float = 0.0

    def __post_init__(self):
        X = np.array(self.states, dtype=float)
        U = np.array(self.inputs, dtype=float)
        if X.ndim != 2 or X.shape[1] != NX or U.shape != (X.shape[0], NU):
            raise ValueError(f"expected (N+1, {NX}) states and (N+1, {NU}) inputs")
        if X.shape[0] < 2:
            raise ValueError("a trajectory needs at least two knots")
        object.__setattr__(self, "states", X)
        object.__setattr__(self, "inputs", U)
        object.__setattr__(self, "h", float(self.h))

    @property
    def N(self) -> int:
        return self.states.shape[0] - 1

    @property
    def duration(self) -> float:
        return self.N * self.h

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.N + 1)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.states.ravel(), self.inputs.ravel(), [self.h]])

    @classmethod
    def unpack(cls, z, N: int, t0: float = 0.0) -> Trajectory:
        z = np.asarray(z, dtype=float)
        nx = (N + 1) * NX
        nu = (N + 1) * NU
        if z.size != nx + nu + 1:
            raise ValueError(f"decision vector of size {z.size} does not match N = {N}")
        return cls(z[:nx].reshape(N + 1, NX), z[nx : nx + nu].reshape(N + 1, NU), z[-1], t0)

    def derivatives(self, params: AircraftParams) -> np.ndarray:
        return derivative_batch(self.states, self.inputs, params.packed)

    def interpolate(self, t, params: AircraftParams, F=None):
        """Cubic Hermite states and linear inputs at times ``t`` (clamped to the span)."""
        t = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), self.t0, self.t0 + self.duration)
        F = self.derivatives(params) if F is None else F
        tau = (t - self.t0) / self.h
        k = np.minimum(np.floor(tau).astype(int), self.N - 1)
        s = (tau - k)[:, None]
        x0, x1, f0, f1 = self.states[k], self.states[k + 1], F[k], F[k + 1]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        X = h00 * x0 + h10 * self.h * f0 + h01 * x1 + h11 * self.h * f1
        U = (1 - s) * self.inputs[k] + s * self.inputs[k + 1]
        return X, U

    def to_csv(self, path) -> None:
        from .dynamics import INPUT_NAMES, STATE_NAMES

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *STATE_NAMES, *INPUT_NAMES])
            for t, x, u in zip(self.times, self.states, self.inputs):
                w.writerow([f"{t:.6f}", *(f"{v:.9g}" for v in x), *(f"{v:.9g}" for v in u)])


# -- defects ------------------------------------------------------------------------


def hermite_simpson_defect(x_k, u_k, x_k1, u_k1, h, params: AircraftParams, dynamics=None) -> np.ndarray:
    """``x_k - x_{k+1} + h/6 (f_k + 4 f_c + f_{k+1})`` with the Hermite midpoint state.

    ``dynamics(x, u)`` overrides the aircraft model (used for test systems).
    """
    if not h > 0:
        raise ValueError("step must be positive")
    f = dynamics if dynamics is not None else (lambda x, u: derivative_batch(x[None], u[None], params.packed)[0])
    x_k, x_k1 = np.asarray(x_k, float), np.asarray(x_k1, float)
    u_k, u_k1 = np.asarray(u_k, float), np.asarray(u_k1, float)
    f_k, f_k1 = f(x_k, u_k), f(x_k1, u_k1)
    x_c = 0.5 * (x_k + x_k1) + h * (f_k - f_k1) / 8.0
    u_c = 0.5 * (u_k + u_k1)
    f_c = f(x_c, u_c)
    return x_k - x_k1 + h / 6.0 * (f_k + 4.0 * f_c + f_k1)


def euler_defect(x_k, u_k, x_k1, h, params: AircraftParams, dynamics=None) -> np.ndarray:
    """Forward Euler defect ``x_k + h f(x_k, u_k) - x_{k+1}``."""
    if not h > 0:
        raise ValueError("step must be positive")
    f = dynamics if dynamics is not None else (lambda x, u: derivative_batch(x[None], u[None], params.packed)[0])
    x_k = np.asarray(x_k, float)
    return x_k + h * f(x_k, np.asarray(u_k, float)) - np.asarray(x_k1, float)


# -- problem ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NlpProblem:
    N: int
    method: Method
    x_i: np.ndarray
    x_f: np.ndarray
    params: AircraftParams
    field: DistanceField | None
    r: float = RADIUS
    delta_i: np.ndarray = field(default_factory=lambda: DELTA_I.copy())
    delta_f: np.ndarray = field(default_factory=lambda: DELTA_F.copy())
    x_min: np.ndarray = field(default_factory=lambda: X_MIN.copy())
    x_max: np.ndarray = field(default_factory=lambda: X_MAX.copy())
    u_min: np.ndarray = field(default_factory=lambda: U_MIN.copy())
    u_max: np.ndarray = field(default_factory=lambda: U_MAX.copy())
    h_min: float = H_MIN
    h_max: float = H_MAX
    link_ailerons: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        for name in ("x_i", "x_f", "delta_i", "delta_f", "x_min", "x_max", "u_min", "u_max"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if self.N < 2:
            raise ConfigError("need at least two knot intervals")
        if np.any(self.delta_i < 0) or np.any(self.delta_f < 0):
            raise ConfigError("box half-widths must be non-negative")
        if not 0 < self.h_min <= self.h_max:
            raise ConfigError("need 0 < h_min <= h_max")
        if np.any(self.x_min > self.x_max) or np.any(self.u_min > self.u_max):
            raise ConfigError("inverted state or input bounds")

    def with_initial_state(self, x_i) -> NlpProblem:
        return replace(self, x_i=np.asarray(x_i, float))

    @property
    def n_vars(self) -> int:
        return (self.N + 1) * (NX + NU) + 1

    @property
    def state_scale(self) -> np.ndarray:
        return 0.5 * (self.x_max - self.x_min)

    @property
    def input_scale(self) -> np.ndarray:
        return 0.5 * (self.u_max - self.u_min)

    def bounds(self):
        """Lower and upper bounds on the decision vector, boxes intersected with limits."""
        N = self.N
        xl = np.tile(self.x_min, (N + 1, 1))
        xu = np.tile(self.x_max, (N + 1, 1))
        xl[0] = np.maximum(xl[0], self.x_i - self.delta_i)
        xu[0] = np.minimum(xu[0], self.x_i + self.delta_i)
        xl[N] = np.maximum(xl[N], self.x_f - self.delta_f)
        xu[N] = np.minimum(xu[N], self.x_f + self.delta_f)
        ul = np.tile(self.u_min, (N + 1, 1))
        uu = np.tile(self.u_max, (N + 1, 1))
        lo = np.concatenate([xl.ravel(), ul.ravel(), [self.h_min]])
        hi = np.concatenate([xu.ravel(), uu.ravel(), [self.h_max]])
        return lo, hi

    def variable_scale(self) -> np.ndarray:
        N = self.N
        return np.concatenate([
            np.tile(self.state_scale, N + 1), np.tile(self.input_scale, N + 1), [0.5 * (self.h_max - self.h_min)],
        ])


# -- constraint evaluation ------------------------------------------------------------


def _hermite_weights(s):
    return (2 * s**3 - 3 * s**2 + 1, s**3 - 2 * s**2 + s, -2 * s**3 + 3 * s**2, s**3 - s**2)


class _Transcription:
    """Residuals and Jacobians of the problem constraints for the solver."""

    def __init__(self, problem: NlpProblem, jac_eps=1e-6):
        self.p = problem
        self.P = problem.params.packed
        self.N = problem.N
        self.eps = jac_eps
        N = self.N
        self.ix = lambda k: slice(k * NX, (k + 1) * NX)
        self.iu = lambda k: slice((N + 1) * NX + k * NU, (N + 1) * NX + (k + 1) * NU)
        self.ih = problem.n_vars - 1
        self.inv_sx = 1.0 / problem.state_scale
        self.inv_su = 1.0 / problem.input_scale
        self.target = problem.r

    def evaluate(self, z, jac=True, margin=0.0):
        from .solver import Evaluation

        p, N = self.p, self.N
        traj = Trajectory.unpack(z, N)
        X, U, h = traj.states, traj.inputs, traj.h
        hs = p.method is Method.HERMITE_SIMPSON

        F = derivative_batch(X, U, self.P)
        A = B = Ac = Bc = None
        if jac:
            A, B = jacobians_batch(X, U, self.P, self.eps)
        if hs:
            Xc = 0.5 * (X[:-1] + X[1:]) + h * (F[:-1] - F[1:]) / 8.0
            Uc = 0.5 * (U[:-1] + U[1:])
            Fc = derivative_batch(Xc, Uc, self.P)
            if jac:
                Ac, Bc = jacobians_batch(Xc, Uc, self.P, self.eps)
            D = X[:-1] - X[1:] + h / 6.0 * (F[:-1] + 4 * Fc + F[1:])
        else:
            D = X[:-1] + h * F[:-1] - X[1:]
        c = (D * self.inv_sx).ravel()
        if p.link_ailerons:
            c = np.concatenate([c, (U[:, 0] + U[:, 1]) * self.inv_su[0]])

        g = np.zeros(0)
        if p.field is not None:
            pts = self._collision_points(X, F, h)
            if jac:
                s, grad = p.field.signed_with_gradient(pts)
            else:
                s = p.field.signed_distance(pts)
            g = s - (self.target + margin)
        if not jac:
            return Evaluation(c, g)

        nz = p.n_vars
        Jc = np.zeros((N * NX, nz))
        I = np.eye(NX)
        for k in range(N):
            rows = slice(k * NX, (k + 1) * NX)
            if hs:
                dfc_dxk = Ac[k] @ (0.5 * I + h / 8.0 * A[k])
                dfc_dxk1 = Ac[k] @ (0.5 * I - h / 8.0 * A[k + 1])
                dfc_duk = h / 8.0 * Ac[k] @ B[k] + 0.5 * Bc[k]
                dfc_duk1 = -h / 8.0 * Ac[k] @ B[k + 1] + 0.5 * Bc[k]
                dfc_dh = Ac[k] @ (F[k] - F[k + 1]) / 8.0
                Jc[rows, self.ix(k)] = I + h / 6.0 * (A[k] + 4 * dfc_dxk)
                Jc[rows, self.ix(k + 1)] = -I + h / 6.0 * (4 * dfc_dxk1 + A[k + 1])
                Jc[rows, self.iu(k)] = h / 6.0 * (B[k] + 4 * dfc_duk)
                Jc[rows, self.iu(k + 1)] = h / 6.0 * (4 * dfc_duk1 + B[k + 1])
                Jc[rows, self.ih] = (F[k] + 4 * Fc[k] + F[k + 1]) / 6.0 + h / 6.0 * 4 * dfc_dh
            else:
                Jc[rows, self.ix(k)] = I + h * A[k]
                Jc[rows, self.ix(k + 1)] = -I
                Jc[rows, self.iu(k)] = h * B[k]
                Jc[rows, self.ih] = F[k]
        Jc *= np.tile(self.inv_sx, N)[:, None]
        if p.link_ailerons:
            Jl = np.zeros((N + 1, nz))
            cols = (N + 1) * NX + NU * np.arange(N + 1)
            Jl[np.arange(N + 1), cols] = self.inv_su[0]
            Jl[np.arange(N + 1), cols + 1] = self.inv_su[0]
            Jc = np.vstack([Jc, Jl])
        Jg = np.zeros((0, nz))
        if p.field is not None:
            Jg = self._collision_jacobian(grad, F, A, B, h)
        return Evaluation(c, g, Jc, Jg)

    def _collision_points(self, X, F, h):
        """Knot positions, then Hermite-interpolated positions at each fraction of every interval."""
        pts = [X[:, POS]]
        for s in COLLISION_FRACTIONS:
            h00, h10, h01, h11 = _hermite_weights(s)
            pts.append(h00 * X[:-1, POS] + h10 * h * F[:-1, POS] + h01 * X[1:, POS] + h11 * h * F[1:, POS])
        return np.concatenate(pts)

    def _collision_jacobian(self, grad, F, A, B, h):
        """Rows ``grad . dp/dz`` for the points of :meth:`_collision_points`."""
        N, nz = self.N, self.p.n_vars
        npts = grad.shape[0]
        Jg = np.zeros((npts, nz))
        for k in range(N + 1):
            Jg[k, self.ix(k).start : self.ix(k).start + 3] = grad[k]
        row = N + 1
        for s in COLLISION_FRACTIONS:
            h00, h10, h01, h11 = _hermite_weights(s)
            for k in range(N):
                gr = grad[row]
                J = Jg[row]
                J[self.ix(k)] += h10 * h * (gr @ A[k, POS, :])
                J[self.ix(k).start : self.ix(k).start + 3] += h00 * gr
                J[self.ix(k + 1)] += h11 * h * (gr @ A[k + 1, POS, :])
                J[self.ix(k + 1).start : self.ix(k + 1).start + 3] += h01 * gr
                J[self.iu(k)] += h10 * h * (gr @ B[k, POS, :])
                J[self.iu(k + 1)] += h11 * h * (gr @ B[k + 1, POS, :])
                J[self.ih] = gr @ (h10 * F[k, POS] + h11 * F[k + 1, POS])
                row += 1
        return Jg


def collision_sample_points(traj: Trajectory, params: AircraftParams, fractions=COLLISION_FRACTIONS):
    """Positions at which clearance is enforced (knots, then interval fractions)."""
    F = traj.derivatives(params)
    t = [traj.times]
    for s in fractions:
        t.append(traj.times[:-1] + s * traj.h)
    X, _ = traj.interpolate(np.concatenate(t), params, F)
    return X[:, POS]


# -- reports and solving ---------------------------------------------------------------


@dataclass
class NlpReport:
    status: Status
    iterations: int
    outer_iterations: int
    solve_time: float
    max_defect: float
    max_violation: float
    warm_started: bool
    evaluations: int = 0
    eval_time: float = 0.0

    def to_text(self) -> str:
        rows = [
            ("status", self.status.value), ("iterations", self.iterations),
            ("outer_iterations", self.outer_iterations), ("solve_time", f"{self.solve_time:.6f}"),
            ("max_defect", f"{self.max_defect:.3e}"), ("max_violation", f"{self.max_violation:.3e}"),
            ("warm_started", str(self.warm_started).lower()), ("evaluations", self.evaluations),
            ("eval_time", f"{self.eval_time:.6f}"),
        ]
        return "".join(f"{k}: {v}\n" for k, v in rows)


@dataclass
class WarmStart:
    traj: Trajectory
    state: SolverState


def solve(problem: NlpProblem, init: Trajectory, warm: WarmStart | None = None,
          config: SolverConfig = SolverConfig()):
    """Solve the feasibility problem from ``init``.

    Returns ``(trajectory, report, warm_start)``; the warm start can seed a
    later :func:`resolve_warm`.  Soft failures return the best iterate.
    """
    if init.N != problem.N:
        raise ValueError(f"seed has N = {init.N}, problem has N = {problem.N}")
    lo, hi = problem.bounds()
    if np.any(lo > hi):
        # initial or final box lies outside the state limits
        traj = init
        report = NlpReport(Status.INFEASIBLE, 0, 0, 0.0, np.inf, float(np.max(lo - hi)), warm is not None)
        return traj, report, None
    tr = _Transcription(problem)
    margin = config.collision_margin

    def evaluate(z, jac):
        return tr.evaluate(z, jac, margin)

    z0 = warm.traj.pack() if warm is not None else init.pack()
    res = solve_feasibility(
        evaluate, z0, lo, hi, problem.variable_scale(), config,
        warm=None if warm is None else warm.state, dense_col=problem.n_vars - 1,
    )
    traj = Trajectory.unpack(res.z, problem.N, init.t0)
    # report tolerances against the true radius, without the solver margin
    ev = tr.evaluate(res.z, False, 0.0)
    defect = float(np.abs(ev.c).max()) if ev.c.size else 0.0
    viol = max(float(np.maximum(-ev.g, 0.0).max()) if ev.g.size else 0.0, res.max_violation if res.status is not Status.FEASIBLE else 0.0)
    status = res.status
    if status is Status.FEASIBLE and (defect > config.tol_defect or viol > config.tol_cons):
        status = Status.INFEASIBLE
    report = NlpReport(status, res.iterations, res.outer_iterations, res.solve_time, defect, viol,
                       warm is not None, res.evaluations, res.eval_time)
    return traj, report, WarmStart(traj, res.state)


def resolve_warm(problem: NlpProblem, previous: WarmStart, perturbed_x_i, config: SolverConfig = SolverConfig()):
    """Re-solve after the initial state moves, starting from the previous solution."""
    x_i = np.asarray(perturbed_x_i, float)
    prob = problem.with_initial_state(x_i)
    init = previous.traj
    X = init.states.copy()
    X[0] = np.clip(x_i, prob.x_min, prob.x_max)
    seeded = WarmStart(Trajectory(X, init.inputs, init.h, init.t0), previous.state)
    return solve(prob, seeded.traj, warm=seeded, config=config)


# -- feasibility certificate --------------------------------------------------------------


def check_feasibility(problem: NlpProblem, traj: Trajectory, tol_defect=1e-4, tol_cons=1e-6) -> dict:
    """Re-evaluate every constraint one knot at a time, independent of the solver.

    Returns the worst normalized defect, the worst bound violation and the
    worst clearance deficit, plus ``ok``.
    """
    params = problem.params
    X, U, h = traj.states, traj.inputs, traj.h
    scale = problem.state_scale
    defect = 0.0
    for k in range(traj.N):
        if problem.method is Method.HERMITE_SIMPSON:
            d = hermite_simpson_defect(X[k], U[k], X[k + 1], U[k + 1], h, params)
        else:
            d = euler_defect(X[k], U[k], X[k + 1], h, params)
        defect = max(defect, float(np.max(np.abs(d) / scale)))
    if problem.link_ailerons:
        defect = max(defect, float(np.max(np.abs(U[:, 0] + U[:, 1]))) / problem.input_scale[0])
    viol = 0.0
    viol = max(viol, float(np.max(problem.x_min - X, initial=0)), float(np.max(X - problem.x_max, initial=0)))
    viol = max(viol, float(np.max(problem.u_min - U, initial=0)), float(np.max(U - problem.u_max, initial=0)))
    viol = max(viol, float(np.max(np.abs(X[0] - problem.x_i) - problem.delta_i, initial=0)))
    viol = max(viol, float(np.max(np.abs(X[-1] - problem.x_f) - problem.delta_f, initial=0)))
    viol = max(viol, problem.h_min - h, h - problem.h_max, 0.0)
    clearance = np.inf
    if problem.field is not None:
        pts = collision_sample_points(traj, params)
        clearance = float(problem.field.min_distance(pts).min())
        viol = max(viol, problem.r - clearance)
    return {"defect": defect, "violation": viol, "clearance": clearance,
            "ok": defect <= tol_defect and viol <= tol_cons}


# -- seeds ------------------------------------------------------------------------------


def trim_guess(params: AircraftParams, speed: float) -> TrimGuess:
    """Level-flight trim at ``speed``; falls back to the default guess if none exists."""
    try:
        return level_trim(params, speed)
    except TrimInfeasible:
        return TrimGuess()


def _body_velocity(world_vel, yaw, pitch):
    R = euler_to_rotation(np.array([0.0, pitch, yaw]))
    return R.T @ world_vel


def seed_from_path(tp: TimeParamPath, N: int, params: AircraftParams, horizon=None, trim: TrimGuess | None = None,
                   h_min=H_MIN, h_max=H_MAX, t0=0.0) -> Trajectory:
    """Sample the time-parametrised path at ``N + 1`` uniform times.

    Yaw follows the path tangent (unwrapped), roll is zero, and pitch,
    elevator and thrust take the trim guess so the seed starts near level flight.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    trim = TrimGuess() if trim is None else trim
    span = tp.total_time if horizon is None else min(horizon, tp.total_time)
    h = float(np.clip(span / N, h_min, h_max))
    t = np.minimum(h * np.arange(N + 1), tp.total_time)
    pos, vel = tp.sample(t)
    yaw = np.unwrap(np.arctan2(vel[:, 1], vel[:, 0]))
    X = np.zeros((N + 1, NX))
    U = np.zeros((N + 1, NU))
    X[:, POS] = pos
    X[:, ATT.start + 1] = trim.alpha
    X[:, ATT.start + 2] = yaw
    X[:, DEFL.start + 2] = trim.elevator
    X[:, THRUST] = trim.thrust
    speed = np.linalg.norm(vel, axis=1)
    X[:, VEL.start] = speed * np.cos(trim.alpha)
    X[:, VEL.start + 2] = speed * np.sin(trim.alpha)
    U[:, 4] = -params.thrust_a * trim.thrust / params.thrust_b
    return Trajectory(X, U, h, t0)


def linear_seed(x_i, x_f, N, h, params: AircraftParams, t0=0.0) -> Trajectory:
    """Naive seed: states interpolated linearly from ``x_i`` to ``x_f``, constant throttle."""
    w = np.linspace(0.0, 1.0, N + 1)[:, None]
    X = (1 - w) * np.asarray(x_i, float) + w * np.asarray(x_f, float)
    U = np.zeros((N + 1, NU))
    U[:, 4] = -params.thrust_a * X[:, THRUST] / params.thrust_b
    U[:, 4] = np.clip(U[:, 4], 0.0, 1.0)
    return Trajectory(X, U, h, t0)


def terminal_state(position, world_velocity, trim: TrimGuess, yaw_ref=None) -> np.ndarray:
    """Target final state: trim attitude aligned with the velocity, trim body velocity."""
    v = np.asarray(world_velocity, float)
    yaw = float(np.arctan2(v[1], v[0]))
    if yaw_ref is not None:
        yaw = yaw_ref + float(np.angle(np.exp(1j * (yaw - yaw_ref))))
    speed = float(np.linalg.norm(v))
    x = np.zeros(NX)
    x[POS] = position
    x[ATT] = [0.0, trim.alpha, yaw]
    x[DEFL.start + 2] = trim.elevator
    x[THRUST] = trim.thrust
    x[VEL] = [speed * np.cos(trim.alpha), 0.0, speed * np.sin(trim.alpha)]
    return x

