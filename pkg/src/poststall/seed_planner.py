"""Seed path generation: RRT, pruning, curvature-capped smoothing, timing.

The smoothing replaces every interior corner of the pruned path with a pair of
symmetric cubic Bezier spirals whose curvature peaks at exactly ``kappa_max``
at their shared apex and falls to zero where they meet the straight legs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .environment import DistanceField, segment_clear
from .errors import CornerTooTight, DomainError, PlanTimeout, VelocityUnderflow

RRT_STEP = 0.35
GOAL_TOL = 0.3
GOAL_BIAS = 0.10
KAPPA_MAX = 2.0
V_MAX = 4.0
KAPPA_GAIN = 1.0
V_FLOOR = 0.5
DS = 0.01

# spiral construction constants
_C2 = 0.4 * (np.sqrt(6.0) - 1.0)
_C1 = (_C2 + 4.0) * (_C2 + 1.0)
_C3 = (_C2 + 4.0) / (_C1 + 6.0)
_C4 = (_C2 + 4.0) ** 2 / (54.0 * _C3)

_TURN_EPS = 1e-9


@dataclass(frozen=True)
class WaypointPath:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float).reshape(-1, 3)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    def __len__(self):
        return self.nodes.shape[0]

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.nodes, axis=0), axis=1).sum())


# -- Bezier primitives -----------------------------------------------------------


def _check_unit(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0) or np.any(s > 1.0) or not np.all(np.isfinite(s)):
        raise DomainError("Bezier parameter must lie in [0, 1]")
    return s


def bezier_eval(ctrl, s):
    """Cubic Bezier point(s) ``F(s)`` for control points ``ctrl`` (4, dim)."""
    P = np.asarray(ctrl, dtype=float)
    s = _check_unit(s)
    t = s[..., None]
    a = 1.0 - t
    return a**3 * P[0] + 3 * a**2 * t * P[1] + 3 * a * t**2 * P[2] + t**3 * P[3]


def bezier_d1(ctrl, s):
    P = np.asarray(ctrl, dtype=float)
    t = _check_unit(s)[..., None]
    a = 1.0 - t
    return 3 * (a**2 * (P[1] - P[0]) + 2 * a * t * (P[2] - P[1]) + t**2 * (P[3] - P[2]))


def bezier_d2(ctrl, s):
    P = np.asarray(ctrl, dtype=float)
    t = _check_unit(s)[..., None]
    return 6 * ((1.0 - t) * (P[2] - 2 * P[1] + P[0]) + t * (P[3] - 2 * P[2] + P[1]))


def bezier_curvature(ctrl, s):
    """Curvature of the Bezier at parameter ``s`` from first and second derivatives."""
    d1, d2 = bezier_d1(ctrl, s), bezier_d2(ctrl, s)
    x1, y1, z1 = d1[..., 0], d1[..., 1], d1[..., 2]
    x2, y2, z2 = d2[..., 0], d2[..., 1], d2[..., 2]
    num = np.sqrt((z2 * y1 - y2 * z1) ** 2 + (x2 * z1 - z2 * x1) ** 2 + (y2 * x1 - x2 * y1) ** 2)
    return num / (x1 * x1 + y1 * y1 + z1 * z1) ** 1.5


# -- smooth path ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Line:
    p: np.ndarray
    q: np.ndarray

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.q - self.p))

    def point(self, u):
        u = np.asarray(u, float)[..., None]
        return self.p + u * (self.q - self.p)

    def tangent(self, u):
        d = (self.q - self.p) / self.length
        return np.broadcast_to(d, np.shape(u) + (3,)).copy()

    def curvature(self, u):
        return np.zeros(np.shape(u))


_TABLE_SAMPLES = 2001


@dataclass(frozen=True, eq=False)
class CubicBezier:
    ctrl: np.ndarray
    _u: np.ndarray = field(init=False, repr=False)
    _s: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ctrl = np.array(self.ctrl, dtype=float)
        object.__setattr__(self, "ctrl", ctrl)
        u = np.linspace(0.0, 1.0, _TABLE_SAMPLES)
        speed = np.linalg.norm(bezier_d1(ctrl, u), axis=1)
        # Simpson on each pair of sub-intervals, then fill odd nodes by trapezoid
        s = np.zeros_like(u)
        h = u[1] - u[0]
        s[2::2] = np.cumsum(h / 3 * (speed[:-2:2] + 4 * speed[1:-1:2] + speed[2::2]))
        s[1::2] = s[:-1:2] + h / 2 * (speed[:-1:2] + speed[1::2])
        object.__setattr__(self, "_u", u)
        object.__setattr__(self, "_s", s)

    @property
    def length(self) -> float:
        return float(self._s[-1])

    def param_of(self, sl):
        """Bezier parameter at local arclength ``sl`` (table lookup)."""
        return np.clip(np.interp(sl, self._s, self._u), 0.0, 1.0)

    def point(self, u):
        return bezier_eval(self.ctrl, u)

    def tangent(self, u):
        d = bezier_d1(self.ctrl, u)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature(self, u):
        return bezier_curvature(self.ctrl, u)


@dataclass(frozen=True, eq=False)
class SmoothPath:
    pieces: tuple
    breaks: np.ndarray = field(init=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("smooth path needs at least one piece")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "breaks", np.concatenate([[0.0], np.cumsum([p.length for p in pieces])]))

    @property
    def length(self) -> float:
        return float(self.breaks[-1])

    @property
    def start(self):
        return self.pieces[0].point(0.0)

    @property
    def end(self):
        return self.pieces[-1].point(1.0)

    def _locate(self, s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, self.length)
        idx = np.clip(np.searchsorted(self.breaks, s, side="right") - 1, 0, len(self.pieces) - 1)
        return s, idx

    def _per_piece(self, s, fn, width):
        s, idx = self._locate(s)
        flat_s, flat_i = np.atleast_1d(s), np.atleast_1d(idx)
        out = np.zeros(flat_s.shape + ((width,) if width else ()))
        for k in np.unique(flat_i):
            mask = flat_i == k
            piece = self.pieces[k]
            sl = flat_s[mask] - self.breaks[k]
            if isinstance(piece, CubicBezier):
                u = piece.param_of(sl)
            else:
                u = np.clip(sl / piece.length, 0.0, 1.0)
            out[mask] = fn(piece, u)
        return out.reshape(np.shape(s) + ((width,) if width else ()))

    def position(self, s):
        return self._per_piece(s, lambda p, u: p.point(u), 3)

    def tangent(self, s):
        return self._per_piece(s, lambda p, u: p.tangent(u), 3)

    def curvature(self, s):
        return self._per_piece(s, lambda p, u: p.curvature(u), 0)

    def spline_pairs(self):
        """``(B, E)`` control-point pairs, E reversed so both start on a leg."""
        splines = [p for p in self.pieces if isinstance(p, CubicBezier)]
        return [(splines[i].ctrl, splines[i + 1].ctrl[::-1]) for i in range(0, len(splines), 2)]


def path_curvature(smooth: SmoothPath, s):
    """Curvature at arclength ``s``; exactly zero on straight pieces."""
    return smooth.curvature(s)


def _corner_offset(turn, kappa_max):
    beta = 0.5 * turn
    return _C4 * np.sin(beta) / (kappa_max * np.cos(beta) ** 2)


def _corner_splines(W1, W2, W3, d):
    u1 = (W1 - W2) / np.linalg.norm(W1 - W2)
    u2 = (W3 - W2) / np.linalg.norm(W3 - W2)
    B0 = W2 + d * u1
    B1 = B0 - _C2 * _C3 * d * u1
    B2 = B1 - _C3 * d * u1
    E0 = W2 + d * u2
    E1 = E0 - _C2 * _C3 * d * u2
    E2 = E1 - _C3 * d * u2
    apex = 0.5 * (B2 + E2)
    return np.array([B0, B1, B2, apex]), np.array([apex, E2, E1, E0])


def g2cbs_smooth(path: WaypointPath, kappa_max: float = KAPPA_MAX) -> SmoothPath:
    """Replace every corner with a symmetric curvature-capped spiral pair.

    The pair is built in the plane of the two corner legs, which is the 2D
    construction expressed directly with 3D leg directions.

    Raises:
        CornerTooTight: if the spirals of adjacent corners do not fit on their legs.
    """
    if not kappa_max > 0:
        raise ValueError("kappa_max must be positive")
    W = np.asarray(path.nodes, dtype=float)
    if W.shape[0] < 2:
        raise ValueError("smoothing needs at least two nodes")
    n = W.shape[0]
    d = np.zeros(n)
    for i in range(1, n - 1):
        a, b = W[i] - W[i - 1], W[i + 1] - W[i]
        cosang = np.clip(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)), -1.0, 1.0)
        turn = np.arccos(cosang)
        if turn > _TURN_EPS:
            if turn >= np.pi - 1e-6:
                raise CornerTooTight(f"node {i} reverses direction")
            d[i] = _corner_offset(turn, kappa_max)
    legs = np.linalg.norm(np.diff(W, axis=0), axis=1)
    need = d[:-1] + d[1:]
    bad = np.nonzero(need > legs + 1e-12)[0]
    if bad.size:
        k = bad[0]
        raise CornerTooTight(f"leg {k} is {legs[k]:.3f} m but the spirals need {need[k]:.3f} m")

    pieces = []
    cursor = W[0]
    for i in range(1, n - 1):
        if d[i] == 0.0:
            continue
        b, e = _corner_splines(W[i - 1], W[i], W[i + 1], d[i])
        if np.linalg.norm(b[0] - cursor) > 1e-12:
            pieces.append(Line(cursor, b[0]))
        pieces.append(CubicBezier(b))
        pieces.append(CubicBezier(e))
        cursor = e[-1]
    if np.linalg.norm(W[-1] - cursor) > 1e-12 or not pieces:
        pieces.append(Line(cursor, W[-1].copy()))
    return SmoothPath(pieces)


# -- RRT and pruning -----------------------------------------------------------------


def rrt_plan(
    field: DistanceField, start, goal, radius, seed=0, max_iters=20000,
    step=RRT_STEP, goal_tol=GOAL_TOL, goal_bias=GOAL_BIAS, bounds=None,
) -> WaypointPath:
    """Goal-biased RRT in 3D; the returned path ends exactly at ``goal``.

    Raises:
        PlanTimeout: if the goal ball is not reached in ``max_iters`` samples.
    """
    start, goal = np.asarray(start, float), np.asarray(goal, float)
    if np.linalg.norm(goal - start) <= 1e-12:
        return WaypointPath([start])
    rng = np.random.default_rng(seed)
    lo, hi = (field.origin, field.upper) if bounds is None else (np.asarray(bounds[0]), np.asarray(bounds[1]))
    nodes = np.empty((max_iters + 2, 3))
    parent = np.empty(max_iters + 2, dtype=int)
    nodes[0], parent[0] = start, -1
    count = 1

    def close_out(k):
        if np.linalg.norm(nodes[k] - goal) <= goal_tol and segment_clear(field, nodes[k], goal, radius):
            return True
        return False

    if close_out(0):
        return WaypointPath([start, goal])
    for _ in range(max_iters):
        target = goal if rng.random() < goal_bias else rng.uniform(lo, hi)
        dist = np.einsum("ij,ij->i", nodes[:count] - target, nodes[:count] - target)
        near = int(np.argmin(dist))
        delta = target - nodes[near]
        gap = np.sqrt(dist[near])
        if gap < 1e-12:
            continue
        new = nodes[near] + delta * min(1.0, step / gap)
        if not segment_clear(field, nodes[near], new, radius):
            continue
        nodes[count], parent[count] = new, near
        count += 1
        if close_out(count - 1):
            chain = [goal]
            k = count - 1
            if np.linalg.norm(nodes[k] - goal) <= 1e-12:
                k = parent[k]
            while k >= 0:
                chain.append(nodes[k])
                k = parent[k]
            return WaypointPath(chain[::-1])
    raise PlanTimeout(f"no path to the goal ball after {max_iters} iterations")


def prune_path(path: WaypointPath, field: DistanceField, radius) -> WaypointPath:
    """Shortcut to the farthest visible node, then drop removable nodes to a fixed point."""
    W = [np.asarray(p) for p in path.nodes]
    if len(W) <= 2:
        return WaypointPath(W)
    out = [0]
    i = 0
    while i < len(W) - 1:
        j = len(W) - 1
        while j > i + 1 and not segment_clear(field, W[i], W[j], radius):
            j -= 1
        out.append(j)
        i = j
    kept = [W[k] for k in out]
    changed = True
    while changed and len(kept) > 2:
        changed = False
        for k in range(1, len(kept) - 1):
            if segment_clear(field, kept[k - 1], kept[k + 1], radius):
                del kept[k]
                changed = True
                break
    return WaypointPath(kept)


# -- time parametrisation ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TimeParamPath:
    smooth: SmoothPath
    v_max: float
    kappa_gain: float
    s_grid: np.ndarray
    t_grid: np.ndarray

    @property
    def total_time(self) -> float:
        return float(self.t_grid[-1])

    def t_of_s(self, s):
        return np.interp(s, self.s_grid, self.t_grid)

    def s_of_t(self, t):
        return np.interp(t, self.t_grid, self.s_grid)

    def speed(self, s):
        return self.v_max - self.smooth.curvature(s) * self.kappa_gain

    def sample(self, t):
        """Position and velocity at times ``t``."""
        s = self.s_of_t(np.asarray(t, float))
        return self.smooth.position(s), self.speed(s)[..., None] * self.smooth.tangent(s)


def reparametrize_time(smooth: SmoothPath, v_max=V_MAX, kappa_gain=KAPPA_GAIN, v_floor=V_FLOOR, ds=DS) -> TimeParamPath:
    """Map curvature to speed and integrate ``dt = ds / v`` by trapezoid on a dense grid.

    Raises:
        VelocityUnderflow: if the mapped speed drops to ``v_floor`` or below.
    """
    if not v_floor > 0:
        raise ValueError("v_floor must be positive")
    L = smooth.length
    # dense grid that also contains every piece break
    n = max(int(np.ceil(L / ds)), 1)
    s = np.unique(np.concatenate([np.linspace(0.0, L, n + 1), smooth.breaks]))
    v = v_max - smooth.curvature(s) * kappa_gain
    if np.any(v <= v_floor):
        raise VelocityUnderflow(f"mapped speed falls to {v.min():.3f} m/s (floor {v_floor})")
    inv = 1.0 / v
    t = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(s))])
    return TimeParamPath(smooth=smooth, v_max=float(v_max), kappa_gain=float(kappa_gain), s_grid=s, t_grid=t)


def select_endpoint(tp: TimeParamPath, T_H: float):
    """Seed-path position and velocity ``T_H`` seconds ahead (clamped to the path end)."""
    if not T_H > 0:
        raise ValueError("horizon must be positive")
    s = tp.smooth.length if T_H >= tp.total_time else float(tp.s_of_t(T_H))
    v = float(tp.speed(s))
    return tp.smooth.position(s), v * tp.smooth.tangent(s)


def plan_seed(field: DistanceField, start, goal, radius, seed=0, kappa_max=KAPPA_MAX, v_max=V_MAX,
              kappa_gain=KAPPA_GAIN, max_iters=20000, attempts=5) -> TimeParamPath:
    """RRT, prune, smooth and time-parametrise in one call.

    Corners that cannot fit the spiral are retried with fresh RRT seeds.
    """
    last = None
    for k in range(attempts):
        raw = rrt_plan(field, start, goal, radius, seed=seed + 7919 * k, max_iters=max_iters)
        pruned = prune_path(raw, field, radius)
        if len(pruned) < 2:
            pruned = WaypointPath([pruned.nodes[0], pruned.nodes[0] + [1e-3, 0, 0]])
        try:
            smooth = g2cbs_smooth(pruned, kappa_max)
        except CornerTooTight as exc:
            last = exc
            continue
        return reparametrize_time(smooth, v_max, kappa_gain)
    raise last


def write_plan_csv(path, tp: TimeParamPath, dt=0.02) -> None:
    """Write ``t, x, y, z, vx, vy, vz, kappa`` rows sampled every ``dt`` seconds."""
    t = np.append(np.arange(0.0, tp.total_time, dt), tp.total_time)
    s = tp.s_of_t(t)
    pos, vel = tp.sample(t)
    kap = tp.smooth.curvature(s)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z", "vx", "vy", "vz", "kappa"])
        for row in zip(t, *pos.T, *vel.T, kap):
            w.writerow([f"{v:.6f}" for v in row])
