"""Bound-constrained feasibility solver.

Finds ``z`` in a box with ``c(z) = 0`` and ``g(z) >= 0``.  An augmented
Lagrangian outer loop shifts the residuals by their multipliers; the inner loop
is a projected Levenberg-Marquardt method on

    r(z, s) = [c(z) + lam / mu ;  g(z) - s - nu / mu]

Inequality rows far from their limit use the hinge ``min(0, g - nu / mu)``
and carry no slack.  A row within ``slack_band`` (leaving only past twice
that) gets a slack ``s >= 0`` and becomes a smooth equality, so the hinge
does not switch on and off from step to step near contact.  Variables are
scaled to unit ranges, with an active set for variables (slacks included)
pinned at their bounds.  With a zero objective the multipliers stay small and
the inner loop is plain Gauss-Newton on the constraint system near a solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import yaml
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import ConfigError, GimbalLock


class Status(str, Enum):
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    ITERATION_LIMIT = "IterationLimit"


@dataclass(frozen=True)
class SolverConfig:
    tol_defect: float = 1e-4
    tol_cons: float = 1e-6
    max_iters: int = 300
    max_outer: int = 8
    mu0: float = 1.0
    mu_growth: float = 10.0
    lm_init: float = 1e-3
    lm_min: float = 1e-9
    lm_max: float = 1e8
    stall_ratio: float = 1e-9
    collision_margin: float = 1e-4
    slack_band: float = 0.1

    def __post_init__(self):
        if not (self.tol_defect > 0 and self.tol_cons > 0):
            raise ConfigError("tolerances must be positive")
        if self.max_iters < 1 or self.max_outer < 1:
            raise ConfigError("iteration caps must be at least 1")

    @classmethod
    def from_dict(cls, doc) -> SolverConfig:
        if doc is None:
            return cls()
        if not isinstance(doc, dict):
            raise ConfigError("solver config must be a mapping")
        doc = dict(doc)
        doc.pop("format", None)
        doc.pop("version", None)
        names = set(cls.__dataclass_fields__)
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown solver options: {sorted(unknown)}")
        try:
            return cls(**{k: type(getattr(cls(), k))(v) for k, v in doc.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad solver option: {exc}") from exc


def load_solver_config(path=None) -> SolverConfig:
    if path is None:
        return SolverConfig()
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read solver config {path}: {exc}") from exc
    return SolverConfig.from_dict(doc)


@dataclass
class SolverState:
    """Multipliers and damping carried between solves for warm starts."""

    lam: np.ndarray
    nu: np.ndarray
    mu: float
    lm: float


@dataclass
class SolveResult:
    z: np.ndarray
    status: Status
    iterations: int
    outer_iterations: int
    solve_time: float
    max_defect: float
    max_violation: float
    state: SolverState
    evaluations: int = 0
    eval_time: float = 0.0


@dataclass
class Evaluation:
    c: np.ndarray
    g: np.ndarray
    Jc: np.ndarray | None = None
    Jg: np.ndarray | None = None


@dataclass
class _Counter:
    n: int = 0
    seconds: float = field(default=0.0)


def _measure(ev: Evaluation, lo, hi, z):
    defect = float(np.abs(ev.c).max()) if ev.c.size else 0.0
    viol = float(np.maximum(-ev.g, 0.0).max()) if ev.g.size else 0.0
    box = float(np.maximum(np.maximum(lo - z, z - hi), 0.0).max())
    return defect, max(viol, box)


class _NormalCache:
    """``J_f J_f^T`` products for the current iterate, keyed by free set."""

    def __init__(self, Jsp, dense_col):
        self.Jsp = Jsp
        self.dense_col = dense_col
        self.store = {}

    def get(self, free):
        key = free.tobytes()
        hit = self.store.get(key)
        if hit is None:
            sparse_free = free.copy()
            jd = None
            if self.dense_col is not None and free[self.dense_col]:
                sparse_free[self.dense_col] = False
                jd = self.Jsp[:, [self.dense_col]].toarray().ravel()
            S = self.Jsp[:, np.flatnonzero(sparse_free)]
            hit = ((S @ S.T).tocsc(), jd)
            self.store[key] = hit
        return hit


def _min_norm_solve(SST, jd, r, lm):
    """``y = -(J J^T + lm I)^{-1} r`` from a sparse factorisation.

    ``jd`` (or ``None``) is a column of ``J`` that touches every row; it is
    kept out of ``SST`` and restored as a rank-one Sherman-Morrison
    correction so the factor stays sparse.
    """
    M = SST + lm * sparse.identity(SST.shape[0], format="csc")
    try:
        lu = splu(M)
    except RuntimeError:
        return None
    x = lu.solve(-r)
    if jd is None:
        return x
    w = lu.solve(jd)
    return x - (jd @ x) / (1.0 + jd @ w) * w


def _active_set_step(Js, r, z, lo, hi, D, free, lm, cache: _NormalCache, rounds=6):
    """Damped minimum-norm step; variables the step would push past a bound are
    moved exactly onto it and the rest re-solved with the residual updated."""
    free = free.copy()
    step = np.zeros_like(z)
    r_eff = r.copy()
    for _ in range(rounds):
        idx = np.flatnonzero(free)
        SST, jd = cache.get(free)
        y = _min_norm_solve(SST, jd, r_eff, lm)
        if y is None or not np.all(np.isfinite(y)):
            return None
        trial = step.copy()
        trial[idx] = D[idx] * (Js[:, idx].T @ y)
        over = free & ((z + trial < lo) | (z + trial > hi))
        if not over.any():
            return trial
        clipped = np.clip(z + trial, lo, hi) - z
        step[over] = clipped[over]
        r_eff = r_eff + Js[:, over] @ (step[over] / D[over])
        free &= ~over
        if not free.any():
            return step
    step[free] = trial[free]
    return step


def solve_feasibility(evaluate, z0, lower, upper, scale, config: SolverConfig = SolverConfig(),
                      warm: SolverState | None = None, eq_tol=None, dense_col=None) -> SolveResult:
    """Drive ``evaluate(z, jac) -> Evaluation`` to feasibility inside ``[lower, upper]``.

    Jacobians are requested only at accepted iterates.

    ``scale`` gives a typical magnitude per variable.  ``eq_tol`` optionally
    overrides ``tol_defect`` per equality row; ``dense_col`` names a variable
    coupled to every constraint (kept out of the sparse factor).  ``evaluate``
    may raise :class:`GimbalLock`; such trial points are rejected like a
    failed step.
    """
    t_start = time.perf_counter()
    lo_z, hi_z = np.asarray(lower, float), np.asarray(upper, float)
    if np.any(lo_z > hi_z):
        raise ValueError("empty bound box")
    n = lo_z.size
    z = np.clip(np.asarray(z0, float), lo_z, hi_z)
    counter = _Counter()

    def run(zz, jac=False):
        t0 = time.perf_counter()
        try:
            return evaluate(zz, jac)
        finally:
            counter.n += 1
            counter.seconds += time.perf_counter() - t0

    ev = run(z, jac=True)
    m_eq, m_in = ev.c.size, ev.g.size
    tol_eq = np.full(m_eq, config.tol_defect) if eq_tol is None else np.asarray(eq_tol, float)
    # w = [z, s]: one slack per inequality, used while the row is inside the band
    lo = np.concatenate([lo_z, np.zeros(m_in)])
    hi = np.concatenate([hi_z, np.full(m_in, np.inf)])
    D = np.concatenate([np.asarray(scale, float), np.ones(m_in)])
    fixed = (hi - lo) <= 1e-12 * np.maximum(1.0, D)
    fixed[n:] = False
    if warm is not None and warm.lam.size == m_eq and warm.nu.size == m_in:
        lam, lam_s, mu, lm = warm.lam.copy(), -warm.nu, warm.mu, max(warm.lm, config.lm_init)
    else:
        lam, lam_s, mu, lm = np.zeros(m_eq), np.zeros(m_in), config.mu0, config.lm_init
    w = np.concatenate([z, np.maximum(ev.g + lam_s / mu, 0.0)])
    band = np.zeros(m_in, dtype=bool)
    slack_cols = -np.eye(m_in)

    def feasible(e, ww):
        ok_eq = np.all(np.abs(e.c) <= tol_eq)
        _, viol = _measure(e, lo_z, hi_z, ww[:n])
        return bool(ok_eq and viol <= config.tol_cons)

    def residual(e, ww):
        gi = e.g + lam_s / mu
        rs = np.where(band, gi - ww[n:], np.minimum(gi, 0.0))
        return np.concatenate([e.c + lam / mu, rs]), gi

    iters = outer = 0
    last_stall_defect = np.inf
    status = Status.FEASIBLE if feasible(ev, w) else Status.ITERATION_LIMIT
    while status is not Status.FEASIBLE and iters < config.max_iters and outer < config.max_outer:
        outer += 1
        stalled = False
        while iters < config.max_iters:
            gi = ev.g + lam_s / mu
            # hysteresis: rows enter the band below slack_band and leave above twice that
            entering = ~band & (gi < config.slack_band)
            w[n:][entering] = np.maximum(gi[entering], 0.0)
            band = (band | entering) & (gi < 2.0 * config.slack_band)
            r, gi = residual(ev, w)
            phi = 0.5 * r @ r
            rows = band | (gi < 0)
            Jz = np.vstack([ev.Jc, ev.Jg * rows[:, None]]) * D[None, :n]
            Js = np.hstack([Jz, np.vstack([np.zeros((m_eq, m_in)), slack_cols * band[None, :]])])
            grad = Js.T @ r
            free = ~fixed
            free[n:] &= band
            at_lo = w <= lo + 1e-12 * D
            at_hi = w >= hi - 1e-12 * D
            free &= ~((at_lo & (grad > 0)) | (at_hi & (grad < 0)))
            cache = _NormalCache(sparse.csc_matrix(Js), dense_col)
            accepted = False
            while lm <= config.lm_max:
                step = _active_set_step(Js, r, w, lo, hi, D, free, lm, cache)
                if step is None:
                    lm *= 10.0
                    continue
                trial = np.clip(w + step, lo, hi)
                try:
                    ev_t = run(trial[:n])
                    r_t, _ = residual(ev_t, trial)
                    phi_t = 0.5 * r_t @ r_t
                except GimbalLock:
                    phi_t = np.inf
                if phi_t < phi:
                    accepted = True
                    lm = max(lm / 3.0, config.lm_min)
                    break
                lm *= 4.0
            iters += 1
            if not accepted:
                stalled = True
                lm = config.lm_init
                break
            rel = (phi - phi_t) / max(phi, 1e-300)
            w, ev = trial, ev_t
            if feasible(ev, w):
                status = Status.FEASIBLE
                break
            ev = run(w[:n], jac=True)
            if rel < config.stall_ratio:
                stalled = True
                break
            # inner convergence of the shifted problem: go update multipliers
            if phi_t <= 1e-3 * (config.tol_defect**2):
                break
        if status is Status.FEASIBLE:
            break
        c_norm = np.abs(ev.c).max() if m_eq else 0.0
        lam = lam + mu * ev.c
        lam_s = np.where(band, lam_s + mu * (ev.g - w[n:]), np.minimum(0.0, lam_s + mu * ev.g))
        if stalled:
            # a second stall without defect progress: locally infeasible
            if c_norm > 10 * config.tol_defect and c_norm > 0.9 * last_stall_defect:
                status = Status.INFEASIBLE
                break
            last_stall_defect = c_norm
            mu *= config.mu_growth
    z = w[:n]
    defect, viol = _measure(ev, lo_z, hi_z, z)
    return SolveResult(
        z=z, status=status, iterations=iters, outer_iterations=outer,
        solve_time=time.perf_counter() - t_start, max_defect=defect, max_violation=viol,
        state=SolverState(lam=lam, nu=-lam_s, mu=mu, lm=lm), evaluations=counter.n,
        eval_time=counter.seconds,
    )


def with_overrides(config: SolverConfig, **kw) -> SolverConfig:
    return replace(config, **kw)
