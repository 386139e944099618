"""Time-varying LQR around a knot trajectory.

The regulator acts on four channels ``[aileron, elevator, rudder, throttle]``;
the aileron channel drives the right and left aileron rates with opposite
signs (linked ailerons), so the 5-entry model input is ``M @ v`` for a
4-channel command ``v``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ATT, NU, NX, STATE_NAMES, jacobians_batch
from .errors import RiccatiBlowup
from .params import AircraftParams
from .trajopt import U_MAX, U_MIN, Trajectory

CHANNELS = ("aileron", "elevator", "rudder", "throttle")

Q_DIAG = 1.0 / np.array([25, 25, 25, 50, 50, 50] + [2] * 11, dtype=float)
R_DIAG = 1.0 / np.array([0.1, 0.1, 0.1, 25], dtype=float)
QF_DIAG = 1.0 / np.array([100] * 6 + [1] * 11, dtype=float)

S_CAP = 1e8
REFINEMENT = 8

# 5 model inputs from 4 channels: w_ar = a, w_al = -a, w_e, w_r, u_t
INPUT_MAP = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
])


def default_weights():
    """``(Q, R, Q_f)`` diagonal weight matrices."""
    return np.diag(Q_DIAG), np.diag(R_DIAG), np.diag(QF_DIAG)


def _riccati_rhs(S, A, B, Rinv, Q):
    """``dS/dt`` for the backward sweep: ``-(A'S + SA - S B R^-1 B' S + Q)``."""
    SB = S @ B
    return -(A.T @ S + S @ A - SB @ Rinv @ SB.T + Q)


def _lagrange3(s):
    """Quadratic Lagrange weights through ``s = 0, 1/2, 1``."""
    return 2 * (s - 0.5) * (s - 1), -4 * s * (s - 1), 2 * s * (s - 0.5)


def riccati_sweep(times, A_half, B_half, Q, R, Q_f, s_cap=S_CAP, rate_step=0.5):
    """Integrate the Riccati equation backward from ``S(times[-1]) = Q_f`` with RK4.

    ``A_half``/``B_half`` hold the linearisation at every grid point and every
    interval midpoint (``2 M + 1`` entries for ``M + 1`` grid times).  Each
    grid interval takes enough equal RK4 sub-steps to keep ``dt`` times the
    closed-loop rate ``|A - B R^-1 B' S|`` below ``rate_step`` (one when not
    stiff, which is plain RK4 on the grid); the throttle channel makes the
    sweep stiff right after the terminal condition.  Inside an interval ``A`` and ``B`` are
    interpolated quadratically through the three samples.  Returns ``S`` at
    the grid times.

    Raises:
        RiccatiBlowup: if any ``|S|`` entry exceeds ``s_cap``.
    """
    times = np.asarray(times, float)
    M = times.size - 1
    Q = np.asarray(Q, float)
    Rinv = np.linalg.inv(np.asarray(R, float))
    n = Q.shape[0]
    S = np.empty((M + 1, n, n))
    S[M] = Q_f
    cur = np.array(Q_f, dtype=float)
    for j in range(M - 1, -1, -1):
        span = times[j] - times[j + 1]  # negative: backward in time
        As = (A_half[2 * j + 2], A_half[2 * j + 1], A_half[2 * j])
        Bs = (B_half[2 * j + 2], B_half[2 * j + 1], B_half[2 * j])

        def ab(s):
            w = _lagrange3(s)
            return w[0] * As[0] + w[1] * As[1] + w[2] * As[2], w[0] * Bs[0] + w[1] * Bs[1] + w[2] * Bs[2]

        B0 = Bs[0]
        L = As[0] - B0 @ Rinv @ B0.T @ cur
        rate = 2.0 * np.abs(L).sum(axis=1).max()
        n_sub = max(1, int(np.ceil(abs(span) * rate / rate_step)))
        dt = span / n_sub
        for q in range(n_sub):
            s0 = q / n_sub
            a0, b0 = ab(s0)
            am, bm = ab(s0 + 0.5 / n_sub)
            a1, b1 = ab(s0 + 1.0 / n_sub)
            k1 = _riccati_rhs(cur, a0, b0, Rinv, Q)
            k2 = _riccati_rhs(cur + 0.5 * dt * k1, am, bm, Rinv, Q)
            k3 = _riccati_rhs(cur + 0.5 * dt * k2, am, bm, Rinv, Q)
            k4 = _riccati_rhs(cur + dt * k3, a1, b1, Rinv, Q)
            cur = cur + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            cur = 0.5 * (cur + cur.T)
            if not np.all(np.isfinite(cur)) or np.abs(cur).max() > s_cap:
                raise RiccatiBlowup(f"cost-to-go exceeded {s_cap:g} at t = {times[j]:.3f}")
        S[j] = cur
    return S


@dataclass(frozen=True, eq=False)
class TvlqrPolicy:
    times: np.ndarray
    S: np.ndarray
    K: np.ndarray  # (M+1, 4, 17)
    A: np.ndarray
    B: np.ndarray  # (M+1, 17, 4) in channel space
    traj: Trajectory
    F: np.ndarray  # knot derivatives of the nominal, for Hermite interpolation
    Q: np.ndarray
    R: np.ndarray
    Q_f: np.ndarray
    u_min: np.ndarray = field(default_factory=lambda: U_MIN.copy())
    u_max: np.ndarray = field(default_factory=lambda: U_MAX.copy())

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def K_inputs(self) -> np.ndarray:
        """Gains in model-input space, ``(M+1, 5, 17)``."""
        return INPUT_MAP @ self.K

    def nominal(self, t):
        """``(x0(t), u0(t))``, clamped to the trajectory span."""
        X, U = self.traj.interpolate(t, None, self.F)
        return X[0], U[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *(f"S_{s}" for s in STATE_NAMES),
                        *(f"K_{c}_{s}" for c in CHANNELS for s in STATE_NAMES)])
            for t, S, K in zip(self.times, self.S, self.K):
                w.writerow([f"{t:.6f}", *(f"{v:.9g}" for v in np.diag(S)), *(f"{v:.9g}" for v in K.ravel())])


def riccati_backward(traj: Trajectory, params: AircraftParams, Q=None, R=None, Q_f=None,
                     grid_refinement: int = REFINEMENT, s_cap=S_CAP) -> TvlqrPolicy:
    """TVLQR policy along ``traj`` on a grid refining each knot interval ``grid_refinement`` times.

    Raises:
        GimbalLock: if the nominal passes through the Euler singularity.
        RiccatiBlowup: if the cost-to-go exceeds ``s_cap``.
    """
    if grid_refinement < 1:
        raise ValueError("grid_refinement must be at least 1")
    Qd, Rd, Qfd = default_weights()
    Q = Qd if Q is None else np.asarray(Q, float)
    R = Rd if R is None else np.asarray(R, float)
    Q_f = Qfd if Q_f is None else np.asarray(Q_f, float)
    M = traj.N * grid_refinement
    half = traj.t0 + traj.duration * np.arange(2 * M + 1) / (2 * M)
    F = traj.derivatives(params)
    Xh, Uh = traj.interpolate(half, params, F)
    A5, B5 = jacobians_batch(Xh, Uh, params.packed)
    Bh = B5 @ INPUT_MAP
    times = half[::2]
    S = riccati_sweep(times, A5, Bh, Q, R, Q_f, s_cap)
    A, B = A5[::2], Bh[::2]
    K = np.linalg.solve(R, np.transpose(B, (0, 2, 1)) @ S)
    return TvlqrPolicy(times=times, S=S, K=K, A=A, B=B, traj=traj, F=F, Q=Q, R=R, Q_f=Q_f)


def gain_at(policy: TvlqrPolicy, t) -> np.ndarray:
    """First-order hold between grid gains; clamped outside the span."""
    times = policy.times
    if t <= times[0]:
        return policy.K[0]
    if t >= times[-1]:
        return policy.K[-1]
    j = int(np.searchsorted(times, t, side="right")) - 1
    w = (t - times[j]) / (times[j + 1] - times[j])
    if w == 0.0:
        return policy.K[j]
    return (1.0 - w) * policy.K[j] + w * policy.K[j + 1]


@dataclass
class Telemetry:
    calls: int = 0
    saturations: int = 0


def wrap_angle(a):
    """Wrap to ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(a, float), 2 * np.pi)


def state_error(x, x0) -> np.ndarray:
    dx = np.asarray(x, float) - x0
    dx[ATT] = wrap_angle(dx[ATT])
    return dx


def feedback_control(policy: TvlqrPolicy, t, x, telemetry: Telemetry | None = None) -> np.ndarray:
    """``u = u0(t) - K(t) (x - x0(t))`` mapped to the model input and saturated."""
    x0, u0 = policy.nominal(t)
    dv = -gain_at(policy, t) @ state_error(x, x0)
    u = u0 + INPUT_MAP @ dv
    clipped = np.clip(u, policy.u_min, policy.u_max)
    if telemetry is not None:
        telemetry.calls += 1
        if np.any(clipped != u):
            telemetry.saturations += 1
    return clipped


def open_loop_control(policy: TvlqrPolicy, t) -> np.ndarray:
    _, u0 = policy.nominal(t)
    return np.clip(u0, policy.u_min, policy.u_max)


__all__ = [
    "CHANNELS",
    "INPUT_MAP",
    "NU",
    "NX",
    "QF_DIAG",
    "Q_DIAG",
    "R_DIAG",
    "Telemetry",
    "TvlqrPolicy",
    "default_weights",
    "feedback_control",
    "gain_at",
    "open_loop_control",
    "riccati_backward",
    "riccati_sweep",
    "state_error",
    "wrap_angle",
]
