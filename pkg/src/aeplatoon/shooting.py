"""Costate shooting: find J_d(0) such that the terminal costate vanishes.

Each iteration integrates position, separation, charge and costate forward
with the airspeed solving p = 0 at every step, then corrects the initial
costate by ``-beta * J_d(t_f)``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, InfeasibleEnvelopeError, SingularInitializationError
from .speed_solver import FTOL, MAXITER, XTOL, g_residual, solve_root


@dataclass(frozen=True)
class ShootingConfig:
    tol: float = 1e-6
    step_size: float = 0.5
    max_iterations: int = 30
    v_estimate: float = 120 / 3.6
    dt: float = 1.0

    def __post_init__(self):
        errs = []
        if not self.tol > 0:
            errs.append(f"tol must be > 0 (got {self.tol!r})")
        if not 0 < self.step_size <= 1:
            errs.append(f"step_size must be in (0, 1] (got {self.step_size!r})")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            errs.append(f"max_iterations must be an integer >= 1 (got {self.max_iterations!r})")
        if not self.dt > 0:
            errs.append(f"dt must be > 0 (got {self.dt!r})")
        if not (math.isfinite(self.v_estimate) and self.v_estimate > 0):
            errs.append(f"v_estimate must be positive (got {self.v_estimate!r})")
        if errs:
            raise DomainError("; ".join(errs))


@dataclass(frozen=True)
class Mission:
    """Follower start and end positions [m]."""

    x0: float
    xf: float

    def __post_init__(self):
        if not self.xf > self.x0:
            raise DomainError(f"xf ({self.xf}) must exceed x0 ({self.x0})")


@dataclass(frozen=True)
class CostateTrajectory:
    """Forward pass of one shooting iterate (read-only arrays)."""

    t: np.ndarray
    x: np.ndarray
    d: np.ndarray
    Q: np.ndarray
    J_d: np.ndarray
    v: np.ndarray

    @property
    def t_f(self):
        return float(self.t[-1])


@dataclass(frozen=True)
class ShootingResult:
    J_d0: float
    iterations: int
    terminal_error: float
    converged: bool
    trajectory: CostateTrajectory
    history: list = field(default_factory=list)  # (k, J_d0, eps1)
    monotone: bool = True


def initialize_costate(ctx, cfg):
    """J_d(0) making p vanish at the estimated airspeed.

    p is affine in the costate, so J_d0 = -g(v_est) / (v_prev + v_w).
    """
    f = ctx.follower
    if not (f.v_stall < cfg.v_estimate < f.v_max):
        raise DomainError(f"v_estimate {cfg.v_estimate:.6g} m/s outside the envelope "
                          f"({f.v_stall:.6g}, {f.v_max:.6g})")
    ground = ctx.v_prev + ctx.env.wind_speed
    if ground == 0.0:
        raise SingularInitializationError("v_prev + v_w = 0: costate term vanishes")
    return -g_residual(ctx, cfg.v_estimate) / ground


def _max_steps(ctx, mission, dt):
    slowest = ctx.follower.v_stall + ctx.env.wind_speed
    if slowest <= 0:
        raise DomainError("ground speed at v_stall must be positive")
    return int(math.ceil((mission.xf - mission.x0) / (slowest * dt))) + 2


def forward_pass(ctx, mission, j0, dt):
    """Integrate one iterate; returns ``(CostateTrajectory, J_d(t_f))``."""
    prm = ctx.packed()
    n_max = _max_steps(ctx, mission, dt)
    traj = np.empty((n_max + 1, 6))
    n, t_f, j_f, status, fail = K.shoot_pass(
        float(j0), float(mission.x0), float(mission.xf), float(ctx.d),
        float(ctx.follower.initial_charge), float(ctx.v_prev), float(ctx.env.wind_speed),
        prm, float(dt), n_max, FTOL, XTOL, MAXITER, traj)
    if status != K.OK:
        t_fail = fail * dt
        if status == K.ROOT_BELOW:
            bound, why = "v_stall", "below v_stall"
        elif status == K.ROOT_ABOVE:
            bound, why = "v_max", "above v_max"
        else:
            bound, why = None, "not reached before the step budget"
        raise InfeasibleEnvelopeError(
            f"p-root {why} at t={t_fail:.6g} s (J_d0={j0:.6g})", bound=bound, t=t_fail)
    cols = []
    for i in range(6):
        a = traj[:n, i].copy()
        a.flags.writeable = False
        cols.append(a)
    return CostateTrajectory(*cols), float(j_f)


def shoot(ctx, mission, cfg):
    """Run the shooting iteration; non-convergence is reported, not raised."""
    j0 = initialize_costate(ctx, cfg)
    history = []
    k = 0
    while True:
        traj, eps = forward_pass(ctx, mission, j0, cfg.dt)
        history.append((k, j0, eps))
        if abs(eps) < cfg.tol:
            converged = True
            break
        k += 1
        if k >= cfg.max_iterations:
            converged = False
            break
        j0 = j0 - cfg.step_size * eps
    errs = [abs(h[2]) for h in history]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))
    return ShootingResult(J_d0=j0, iterations=len(history), terminal_error=eps,
                          converged=converged, trajectory=traj, history=history,
                          monotone=monotone)


@dataclass(frozen=True)
class GapReport:
    t: np.ndarray
    v_opt: np.ndarray
    v_sub: np.ndarray
    max_rel_gap: float
    shooting: ShootingResult


def suboptimality_gap(ctx, mission, cfg, result=None):
    """Compare the shooting airspeed with the g-root along the same separation path."""
    if result is None:
        result = shoot(ctx, mission, cfg)
    if not result.converged:
        raise InfeasibleEnvelopeError("shooting did not converge; gap undefined")
    tr = result.trajectory
    v_sub = np.empty_like(tr.v)
    for i, d in enumerate(tr.d):
        v_sub[i], _ = solve_root(ctx.with_(d=float(d)))
    gap = float(np.max(np.abs(tr.v - v_sub) / v_sub))
    return GapReport(tr.t, tr.v, v_sub, gap, result)
