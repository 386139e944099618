"""Trim computations: level flight and minimum-radius steady turns.

The turn analysis uses the airframe without its control surfaces and balances
forces only: a steady, level, coordinated turn at speed ``V``, body angle of
attack ``alpha``, bank ``phi``, thrust ``T`` and turn rate ``Omega``.  Pitch is
fixed by the requirement that the velocity stays horizontal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize

from .dynamics import (
    ATT,
    DEFL,
    NU,
    NX,
    RATE,
    THRUST,
    VEL,
    derivative_batch,
    surface_aoas,
    throttle_for_thrust,
)
from .errors import TrimInfeasible
from .params import ACTUATORS, AircraftParams
from .rotations import euler_to_rotation

TRIM_TOL = 1e-8


@dataclass(frozen=True)
class TrimGuess:
    """Constant seed values for channels a geometric path does not determine."""

    alpha: float = 0.39
    elevator: float = -0.28
    thrust: float = 0.44


def level_state(speed, alpha, elevator=0.0, thrust=0.0, yaw=0.0) -> np.ndarray:
    x = np.zeros(NX)
    x[ATT] = [0.0, alpha, yaw]
    x[DEFL.start + 2] = elevator
    x[THRUST] = thrust
    x[VEL] = [speed * np.cos(alpha), 0.0, speed * np.sin(alpha)]
    return x


def level_trim(params: AircraftParams, speed: float) -> TrimGuess:
    """Wings-level trim at ``speed``: ``alpha``, elevator and thrust with zero accelerations.

    Raises:
        TrimInfeasible: if the residual cannot be driven below ``1e-8``.
    """
    P = params.packed

    def resid(z):
        a, de, t = z
        x = level_state(speed, a, de, t)
        u = np.zeros(NU)
        u[4] = throttle_for_thrust(t, params)
        f = derivative_batch(x[None], u[None], P)[0]
        return np.array([f[VEL.start], f[VEL.start + 2], f[RATE.start + 1]])

    sol = least_squares(resid, [0.3, -0.2, 0.5], bounds=([-0.5, -0.8, 0.0], [1.5, 0.8, params.max_thrust]),
                        xtol=1e-14, ftol=1e-14, gtol=1e-14)
    if np.abs(sol.fun).max() > TRIM_TOL:
        raise TrimInfeasible(f"no level trim at {speed} m/s (residual {np.abs(sol.fun).max():.2e})")
    a, de, t = sol.x
    return TrimGuess(float(a), float(de), float(t))


# -- steady turns ------------------------------------------------------------------------


@dataclass(frozen=True)
class TrimResult:
    alpha_cap: float
    radius: float
    speed: float
    alpha: float
    bank: float
    pitch: float
    turn_rate: float
    thrust: float
    wing_aoa: float
    residual: float
    state: np.ndarray


def _turn_state(z):
    V, a, phi, T, W = z
    theta = np.arctan(np.cos(phi) * np.tan(a))
    R = euler_to_rotation(np.array([phi, theta, 0.0]))
    x = np.zeros(NX)
    x[ATT] = [phi, theta, 0.0]
    x[THRUST] = T
    x[VEL] = [V * np.cos(a), 0.0, V * np.sin(a)]
    x[RATE] = R.T @ np.array([0.0, 0.0, W])
    return x


class _TurnModel:
    def __init__(self, params: AircraftParams):
        self.params = params.without(ACTUATORS)
        self.P = self.params.packed
        self.u = np.zeros((1, NU))

    def accel(self, z):
        x = _turn_state(z)
        return derivative_batch(x[None], self.u, self.P)[0, VEL]

    def wing_aoa(self, z):
        return surface_aoas(_turn_state(z), self.params)["wing"]


def trim_turn_radius(alpha_caps, speed_bounds=(0.5, 15.0), params: AircraftParams | None = None,
                     max_turn_rate=None) -> list:
    """Minimum steady-turn radius for each wing angle-of-attack cap.

    Caps are solved in increasing order, each warm-started from the previous
    optimum (feasible for every larger cap).  ``max_turn_rate = 0`` pins the
    turn rate and yields the straight-flight sentinel ``radius = inf``.

    Raises:
        TrimInfeasible: if a cap admits no steady turn within the bounds.
    """
    from .params import load_params

    params = load_params() if params is None else params
    caps = np.asarray(alpha_caps, dtype=float)
    if np.any(caps <= 0) or np.any(caps >= np.pi / 2):
        raise ValueError("angle-of-attack caps must lie in (0, pi/2)")
    model = _TurnModel(params)
    t_max = params.max_thrust
    w_max = 50.0 if max_turn_rate is None else float(max_turn_rate)
    order = np.argsort(caps)
    results = [None] * len(caps)
    z_prev = None
    for i in order:
        cap = caps[i]
        if w_max <= 1e-12:
            results[i] = _straight(model, cap, speed_bounds, t_max)
            continue
        results[i] = _solve_turn(model, cap, speed_bounds, t_max, w_max, z_prev)
        z_prev = np.array([results[i].speed, results[i].alpha, results[i].bank, results[i].thrust,
                           results[i].turn_rate])
    return results


def _bounds(speed_bounds, t_max, w_max):
    return [(speed_bounds[0], speed_bounds[1]), (-0.2, 1.55), (-1.5, 1.5), (0.0, t_max), (0.0, w_max)]


def _solve_turn(model, cap, speed_bounds, t_max, w_max, z_prev):
    bounds = _bounds(speed_bounds, t_max, w_max)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    cons = [
        {"type": "eq", "fun": model.accel},
        {"type": "ineq", "fun": lambda z: cap - model.wing_aoa(z)},
    ]
    starts = []
    if z_prev is not None:
        starts.append(np.clip(z_prev, lo, hi))
    starts.append(np.array([4.0, min(cap, 0.3), 0.5, 0.5 * t_max, 1.0]))
    starts.append(np.array([2.0, 0.8 * cap, 1.0, t_max, 2.0]))
    best = None
    for z0 in starts:
        sol = minimize(lambda z: z[0] / max(z[4], 1e-9), z0, method="SLSQP", bounds=bounds, constraints=cons,
                       options={"ftol": 1e-12, "maxiter": 500})
        z = _polish(model, sol.x, cap, lo, hi)
        if z is None:
            continue
        radius = z[0] / z[4]
        if best is None or radius < best[0] - 1e-12:
            best = (radius, z)
    if best is None:
        raise TrimInfeasible(f"no steady turn with wing angle of attack <= {np.degrees(cap):.1f} deg")
    return _result(model, cap, best[1])


def _polish(model, z, cap, lo, hi):
    """Gauss-Newton on the force balance plus active bounds until the residual is below tolerance."""
    z = np.clip(z, lo, hi)
    for _ in range(30):
        act_aoa = model.wing_aoa(z) >= cap - 1e-6
        pinned = (z <= lo + 1e-9) | (z >= hi - 1e-9)
        r = [model.accel(z)]
        if act_aoa:
            r.append([model.wing_aoa(z) - cap])
        r = np.concatenate(r)
        if np.abs(r).max() < 1e-12:
            break
        J = np.zeros((r.size, 5))
        for j in range(5):
            e = np.zeros(5)
            e[j] = 1e-7
            rp = [model.accel(z + e)]
            rm = [model.accel(z - e)]
            if act_aoa:
                rp.append([model.wing_aoa(z + e) - cap])
                rm.append([model.wing_aoa(z - e) - cap])
            J[:, j] = (np.concatenate(rp) - np.concatenate(rm)) / 2e-7
        J[:, pinned] = 0.0
        try:
            dz = -np.linalg.lstsq(J, r, rcond=None)[0]
        except np.linalg.LinAlgError:
            return None
        z = np.clip(z + dz, lo, hi)
    res = max(np.abs(model.accel(z)).max(), max(model.wing_aoa(z) - cap, 0.0))
    return z if res < TRIM_TOL and z[4] > 0 else None


def _result(model, cap, z):
    x = _turn_state(z)
    res = float(max(np.abs(model.accel(z)).max(), max(model.wing_aoa(z) - cap, 0.0)))
    return TrimResult(
        alpha_cap=float(cap), radius=float(z[0] / z[4]), speed=float(z[0]), alpha=float(z[1]),
        bank=float(z[2]), pitch=float(x[ATT.start + 1]), turn_rate=float(z[4]), thrust=float(z[3]),
        wing_aoa=float(model.wing_aoa(z)), residual=res, state=x,
    )


def _straight(model, cap, speed_bounds, t_max):
    """Straight level flight under the cap: the zero-turn-rate limit."""

    def resid(y):
        V, a, T = y
        return model.accel(np.array([V, a, 0.0, T, 0.0]))[[0, 2]]

    best = None
    for V0 in (3.0, 5.0, 8.0):
        sol = least_squares(lambda y: np.r_[resid(y), 0.0], [V0, min(0.3, cap), 0.5],
                            bounds=([speed_bounds[0], -0.2, 0.0], [speed_bounds[1], cap, t_max]),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.abs(sol.fun).max() < TRIM_TOL:
            best = sol.x
            break
    if best is None:
        raise TrimInfeasible("no straight level flight under the cap")
    z = np.array([best[0], best[1], 0.0, best[2], 0.0])
    x = _turn_state(z)
    return TrimResult(
        alpha_cap=float(cap), radius=float("inf"), speed=float(z[0]), alpha=float(z[1]), bank=0.0,
        pitch=float(x[ATT.start + 1]), turn_rate=0.0, thrust=float(z[3]), wing_aoa=float(model.wing_aoa(z)),
        residual=float(np.abs(model.accel(z)).max()), state=x,
    )
