"""17-state flat-plate aircraft model.

State layout (flattened): ``[r(3), theta(3), delta(4), delta_t, v(3), omega(3)]``
with ``r`` in a z-down world frame, ``theta`` z-y-x Euler angles, ``delta`` the
deflections of (right aileron, left aileron, elevator, rudder), ``delta_t`` the
thrust in newtons and ``v``, ``omega`` in body axes.

Input layout: ``[w_ar, w_al, w_e, w_r, u_t]`` -- four surface rates and the
normalised throttle.

The heavy lifting happens in :func:`derivative_batch`, which works on stacked
``(n, 17)`` / ``(n, 5)`` arrays so finite-difference Jacobians can be taken in
one call.  The per-surface helpers exist for testing and inspection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVelocity, NegativeThrust
from .params import AircraftParams
from .rotations import GIMBAL_EPS, check_gimbal, euler_rate_map, euler_to_rotation

NX = 17
NU = 5

POS = slice(0, 3)
ATT = slice(3, 6)
DEFL = slice(6, 10)
THRUST = 10
VEL = slice(11, 14)
RATE = slice(14, 17)

STATE_NAMES = (
    "x", "y", "z", "phi", "theta", "psi",
    "d_ar", "d_al", "d_e", "d_r", "d_t",
    "vx", "vy", "vz", "wx", "wy", "wz",
)
INPUT_NAMES = ("w_ar", "w_al", "w_e", "w_r", "u_t")

EPS_V = 1e-9


@dataclass
class AircraftState:
    r: np.ndarray
    theta: np.ndarray
    delta: np.ndarray
    delta_t: float
    v: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float).reshape(3)
        self.theta = np.asarray(self.theta, dtype=float).reshape(3)
        self.delta = np.asarray(self.delta, dtype=float).reshape(4)
        self.delta_t = float(self.delta_t)
        self.v = np.asarray(self.v, dtype=float).reshape(3)
        self.omega = np.asarray(self.omega, dtype=float).reshape(3)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.r, self.theta, self.delta, [self.delta_t], self.v, self.omega])

    @classmethod
    def from_vector(cls, x) -> AircraftState:
        x = np.asarray(x, dtype=float)
        if x.shape != (NX,):
            raise ValueError(f"state vector must have shape ({NX},), got {x.shape}")
        return cls(x[POS], x[ATT], x[DEFL], x[THRUST], x[VEL], x[RATE])

    @classmethod
    def zeros(cls) -> AircraftState:
        return cls.from_vector(np.zeros(NX))

    def __array__(self, dtype=None, copy=None):
        return self.to_vector().astype(dtype or float)


@dataclass
class ControlInput:
    surface_rates: np.ndarray
    u_t: float

    def __post_init__(self):
        self.surface_rates = np.asarray(self.surface_rates, dtype=float).reshape(4)
        self.u_t = float(self.u_t)

    def to_vector(self) -> np.ndarray:
        return np.append(self.surface_rates, self.u_t)

    @classmethod
    def from_vector(cls, u) -> ControlInput:
        u = np.asarray(u, dtype=float)
        if u.shape != (NU,):
            raise ValueError(f"input vector must have shape ({NU},), got {u.shape}")
        return cls(u[:4], u[4])

    def __array__(self, dtype=None, copy=None):
        return self.to_vector().astype(dtype or float)


# -- single-surface helpers -------------------------------------------------


def backwash_velocity(v_p, delta_t, params: AircraftParams) -> float:
    """Momentum-theory propwash speed behind the disk."""
    if delta_t < 0:
        raise NegativeThrust(f"thrust must be non-negative, got {delta_t}")
    vp2 = float(np.dot(v_p, v_p)) if np.ndim(v_p) else float(v_p) ** 2
    return np.sqrt(vp2 + 2.0 * delta_t / (params.rho * params.disk_area)) - np.sqrt(vp2)


def _deflection_rotation(angle):
    """Body-of-surface rotation for a deflection about the surface y axis."""
    c, s = np.cos(angle), np.sin(angle)
    # transpose of Ry(angle): maps mount-frame coordinates to deflected frame
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def surface_rotation(surface, deflection=0.0) -> np.ndarray:
    """Body-to-surface rotation including the surface's deflection."""
    return _deflection_rotation(deflection) @ surface.mount_rotation


def surface_velocity(state, surface, params: AircraftParams, surface_rate=0.0) -> np.ndarray:
    """Velocity of the surface's centre of pressure, in surface axes."""
    x = np.asarray(state, dtype=float)
    v, w = x[VEL], x[RATE]
    deflection = x[DEFL][surface.actuation] if surface.actuation is not None else 0.0
    rate = surface_rate if surface.actuation is not None else 0.0
    Rs = surface_rotation(surface, deflection)
    vbw = 0.0
    if surface.backwash_gain:
        vbw = backwash_velocity(_prop_inflow(x, params.packed), max(x[THRUST], 0.0), params)
    hinge_vel = v + np.cross(w, surface.hinge_offset) + surface.backwash_gain * vbw * np.array([1.0, 0, 0])
    spin = Rs @ w + np.array([0.0, rate, 0.0])
    return Rs @ hinge_vel + np.cross(spin, [surface.chord_offset, 0.0, 0.0])


def surface_aoa(v_s, eps_v=EPS_V) -> float:
    """Angle of attack ``atan2(v_z, v_x)`` in surface axes."""
    v_s = np.asarray(v_s, dtype=float)
    if np.hypot(v_s[0], v_s[2]) < eps_v:
        raise DegenerateVelocity("no planar flow over surface")
    return float(np.arctan2(v_s[2], v_s[0]))


def surface_force(v_s, area, rho, eps_v=EPS_V) -> float:
    """Flat-plate normal force ``0.5 * Cn * rho * |v|^2 * S`` with ``Cn = 2 sin(alpha)``.

    Degenerate planar flow gives zero force.
    """
    try:
        alpha = surface_aoa(v_s, eps_v)
    except DegenerateVelocity:
        return 0.0
    v_s = np.asarray(v_s, dtype=float)
    return 0.5 * (2.0 * np.sin(alpha)) * rho * float(v_s @ v_s) * area


# -- batched model ------------------------------------------------------------


def _prop_inflow(X, P):
    """Axial inflow speed at the propeller, ``|(v + w x r_p) . t|``."""
    v, w = X[..., VEL], X[..., RATE]
    vp = v + np.cross(w, P.prop_offset)
    return np.abs(vp @ P.thrust_axis)


def _surface_terms(X, U, P):
    """Per-surface rotations, flow velocities and normal forces.

    Returns ``(Rs, v_s, f_n, cp)`` with shapes ``(n, ns, 3, 3)``, ``(n, ns, 3)``,
    ``(n, ns)`` and ``(n, ns, 3)``.
    """
    v, w = X[:, VEL], X[:, RATE]
    n = X.shape[0]
    defl = np.where(P.actuated, X[:, DEFL][:, P.act_index], 0.0)
    rates = np.where(P.actuated, U[:, :4][:, P.act_index], 0.0)
    c, s = np.cos(defl), np.sin(defl)
    D = np.zeros(defl.shape + (3, 3))
    D[..., 0, 0] = c
    D[..., 0, 2] = -s
    D[..., 1, 1] = 1.0
    D[..., 2, 0] = s
    D[..., 2, 2] = c
    Rs = D @ P.mount  # (n, ns, 3, 3)

    vp = _prop_inflow(X, P)
    dt = np.maximum(X[:, THRUST], 0.0)
    vbw = np.sqrt(vp * vp + 2.0 * dt / (P.rho * P.disk_area)) - vp  # (n,)

    hinge_vel = v[:, None, :] + np.cross(w[:, None, :], P.hinge[None, :, :])
    hinge_vel[..., 0] += P.gamma[None, :] * vbw[:, None]
    vs = np.einsum("nsij,nsj->nsi", Rs, hinge_vel)
    spin = np.einsum("nsij,nj->nsi", Rs, w)
    spin[..., 1] += rates
    # spin x (l, 0, 0) = l * (0, spin_z, -spin_y)
    vs[..., 1] += P.chord * spin[..., 2]
    vs[..., 2] -= P.chord * spin[..., 1]

    planar = np.hypot(vs[..., 0], vs[..., 2])
    ok = planar >= EPS_V
    speed2 = np.einsum("nsi,nsi->ns", vs, vs)
    sin_alpha = np.where(ok, vs[..., 2] / np.where(ok, planar, 1.0), 0.0)
    fn = P.rho * speed2 * P.area * sin_alpha
    cp = P.hinge[None, :, :] + P.chord[None, :, None] * Rs[..., 0, :]
    assert fn.shape == (n, P.area.shape[0])
    return Rs, vs, fn, cp


def forces_moments_batch(X, U, P):
    """Body-frame total force and moment for stacked states."""
    Rs, _, fn, cp = _surface_terms(X, U, P)
    # surface force is -f_n along the surface normal; normal in body = Rs[2, :]
    F_s = -fn[..., None] * Rs[..., 2, :]
    force = F_s.sum(axis=1)
    moment = np.cross(cp, F_s).sum(axis=1)

    R = euler_to_rotation(X[:, ATT])
    force += P.mass * P.gravity * R[:, 2, :]
    thrust = X[:, THRUST][:, None] * P.thrust_axis[None, :]
    force += thrust
    moment += np.cross(P.prop_offset, thrust)
    return force, moment, R


def derivative_batch(X, U, P, eps_gimbal=GIMBAL_EPS):
    """State derivatives for ``X (n, 17)`` and ``U (n, 5)`` using packed params ``P``."""
    X = np.atleast_2d(X)
    U = np.atleast_2d(U)
    check_gimbal(X[:, ATT], eps_gimbal)
    force, moment, R = forces_moments_batch(X, U, P)
    v, w = X[:, VEL], X[:, RATE]
    dX = np.empty_like(X)
    dX[:, POS] = np.einsum("nij,nj->ni", R, v)
    dX[:, ATT] = euler_rate_map(X[:, ATT], w, eps_gimbal)
    dX[:, DEFL] = U[:, :4]
    dX[:, THRUST] = P.thrust_a * X[:, THRUST] + P.thrust_b * U[:, 4]
    dX[:, VEL] = force / P.mass - np.cross(w, v)
    Jw = w @ P.inertia.T
    dX[:, RATE] = (moment - np.cross(w, Jw)) @ P.inertia_inv.T
    return dX


# -- public single-state API ----------------------------------------------------


def _as_state(state):
    return np.asarray(state, dtype=float)


def total_forces_moments(state, params: AircraftParams, surface_rates=None):
    """Body-frame ``(force, moment)`` acting on the aircraft."""
    x = _as_state(state)
    u = np.zeros(NU)
    if surface_rates is not None:
        u[:4] = surface_rates
    f, m, _ = forces_moments_batch(x[None, :], u[None, :], params.packed)
    return f[0], m[0]


def state_derivative(state, control, params: AircraftParams) -> np.ndarray:
    """``dx/dt`` for a single state; raises :class:`GimbalLock` near +-90 deg pitch."""
    x = _as_state(state)
    u = np.asarray(control, dtype=float)
    if x.ndim == 1:
        return derivative_batch(x[None, :], u[None, :], params.packed)[0]
    return derivative_batch(x, u, params.packed)


def surface_aoas(state, params: AircraftParams, control=None) -> dict:
    """Angle of attack of every surface, by name (NaN where the flow is degenerate)."""
    x = _as_state(state)[None, :]
    u = np.zeros((1, NU)) if control is None else np.asarray(control, dtype=float)[None, :]
    _, vs, _, _ = _surface_terms(x, u, params.packed)
    out = {}
    for i, s in enumerate(params.surfaces):
        planar = np.hypot(vs[0, i, 0], vs[0, i, 2])
        out[s.name] = float(np.arctan2(vs[0, i, 2], vs[0, i, 0])) if planar >= EPS_V else float("nan")
    return out


def jacobians_batch(X, U, P, eps=1e-6):
    """Central-difference ``(A, B)`` for stacked states; shapes ``(n,17,17)``, ``(n,17,5)``."""
    X = np.atleast_2d(X)
    U = np.atleast_2d(U)
    n = X.shape[0]
    nz = NX + NU
    E = np.eye(nz) * eps
    Z = np.concatenate([X, U], axis=1)
    Zp = (Z[:, None, :] + E[None, :, :]).reshape(-1, nz)
    Zm = (Z[:, None, :] - E[None, :, :]).reshape(-1, nz)
    Zall = np.concatenate([Zp, Zm], axis=0)
    F = derivative_batch(Zall[:, :NX], Zall[:, NX:], P)
    Fp, Fm = F[: n * nz].reshape(n, nz, NX), F[n * nz :].reshape(n, nz, NX)
    Jt = (Fp - Fm) / (2 * eps)  # (n, nz, NX)
    J = np.transpose(Jt, (0, 2, 1))
    return J[:, :, :NX], J[:, :, NX:]


def linearize(state, control, params: AircraftParams, eps=1e-6):
    """Central finite-difference Jacobians ``A = df/dx`` (17x17), ``B = df/du`` (17x5)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    A, B = jacobians_batch(_as_state(state)[None, :], np.asarray(control, float)[None, :], params.packed, eps)
    return A[0], B[0]


def thrust_fixed_point(u_t, params: AircraftParams) -> float:
    """Steady thrust for constant throttle, ``-b u / a``."""
    return -params.thrust_b * u_t / params.thrust_a


def throttle_for_thrust(delta_t, params: AircraftParams) -> float:
    return -params.thrust_a * delta_t / params.thrust_b
