"""Fixed-step simulation of a heterogeneous predecessor-follower platoon.

Index 0 is the leader; follower ``i`` regulates on aircraft ``i - 1``.
Within a step every follower's airspeed is chosen from the pre-step state,
then all aircraft advance together. Airspeeds are held constant over a step.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .aero_energy import Environment, energy_rate
from .complexity import pdw_array
from .errors import (DomainError, InfeasibleEnvelopeError, NonTerminationError,
                     SafetyViolationError)
from .integrate import rk4_step
from .speed_solver import BOUNDARY, PairContext, solve_suboptimal
from .string_stability import certify_trace, disturbance, k_coefficient

INACTIVE, INTERIOR, BOUNDARY_ARC, CAPTURE = -1, 0, 1, 2
BRANCH_NAMES = {INACTIVE: "inactive", INTERIOR: "interior", BOUNDARY_ARC: "boundary",
                CAPTURE: "capture"}

ENVELOPE_MARGIN = 0.01  # m/s inside (v_stall, v_max) when clamping


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-constant airspeed: ``speeds[k]`` holds from ``times[k]`` on."""

    times: tuple
    speeds: tuple

    def __post_init__(self):
        if len(self.times) != len(self.speeds) or not self.times:
            raise DomainError("profile needs matching, non-empty times and speeds")
        if self.times[0] != 0:
            raise DomainError("profile must start at t = 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise DomainError("profile times must be strictly increasing")
        if any(not s > 0 for s in self.speeds):
            raise DomainError("profile speeds must be positive")

    @classmethod
    def constant(cls, v):
        return cls((0.0,), (float(v),))

    def __call__(self, t):
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.speeds[max(k, 0)]

    def sample(self, t):
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.times, t, side="right") - 1
        return np.asarray(self.speeds)[np.maximum(k, 0)]


@dataclass(frozen=True)
class PlatoonConfig:
    aircraft: tuple                      # AircraftParams, leader first
    costs: tuple                         # CostConfig per follower
    env: Environment
    x0: tuple
    xf: tuple
    leader_profile: SpeedProfile
    dt: float = 1.0
    leader_disturbance: object = None   # DisturbanceSpec
    time_guard_factor: float = 10.0

    def __post_init__(self):
        n = len(self.aircraft)
        errs = []
        if n < 1:
            errs.append("platoon needs at least one aircraft")
        if len(self.costs) != n - 1:
            errs.append(f"need {n - 1} follower cost entries, got {len(self.costs)}")
        if len(self.x0) != n or len(self.xf) != n:
            errs.append("x0 and xf need one entry per aircraft")
        if not self.dt > 0:
            errs.append(f"dt must be > 0 (got {self.dt!r})")
        if errs:
            raise DomainError("; ".join(errs))
        for i in range(n):
            if not self.xf[i] > self.x0[i]:
                errs.append(f"aircraft {i}: xf ({self.xf[i]}) must exceed x0 ({self.x0[i]})")
        for i in range(1, n):
            if not self.x0[i] < self.x0[i - 1]:
                errs.append(f"pair ({i},{i - 1}): follower x0 {self.x0[i]} m must be behind "
                            f"predecessor x0 {self.x0[i - 1]} m")
        if errs:
            raise DomainError("; ".join(errs))

    @property
    def n(self):
        return len(self.aircraft)

    def leader_speed(self, t):
        v = self.leader_profile(t)
        if self.leader_disturbance is not None:
            v += disturbance(self.leader_disturbance, t)
        return v

    def check_initial_separation(self):
        for i in range(1, self.n):
            d = self.x0[i - 1] - self.x0[i]
            c = self.costs[i - 1]
            if d < c.d_min - c.separation_tolerance:
                raise SafetyViolationError(
                    f"pair ({i},{i - 1}) starts at {d:.6g} m, below d_min {c.d_min:.6g} m",
                    pair=(i, i - 1), t=0.0)


@dataclass(frozen=True)
class PlatoonState:
    """Snapshot at time t together with the airspeeds chosen at t.

    ``ghost_x`` is the position used for pairing: it equals ``x`` while an
    aircraft flies and keeps advancing at its last airspeed once finished.
    """

    t: float
    x: np.ndarray
    v: np.ndarray
    Q: np.ndarray
    finished: np.ndarray
    ghost_x: np.ndarray
    d: np.ndarray
    ddot: np.ndarray
    branch: np.ndarray
    clamped: np.ndarray
    finish_time: np.ndarray = field(default=None)


def _controls(t, x, ghost_x, finished, v_last, config):
    n = config.n
    v = np.array(v_last, dtype=float)
    branch = np.full(n - 1, INACTIVE, dtype=np.int8)
    clamped = np.zeros(n - 1, dtype=bool)
    d = np.full(n - 1, np.nan)
    if not finished[0]:
        v[0] = config.leader_speed(t)
    for i in range(1, n):
        sep = ghost_x[i - 1] - x[i]
        if finished[i]:
            continue
        d[i - 1] = sep
        c = config.costs[i - 1]
        if sep < c.d_min - c.separation_tolerance:
            raise SafetyViolationError(
                f"pair ({i},{i - 1}) separation {sep:.6g} m below d_min {c.d_min:.6g} m "
                f"at t={t:.6g} s", pair=(i, i - 1), t=t)
    # synchronous: all followers see pre-step predecessor airspeeds
    v_pred = v.copy()
    for i in range(1, n):
        if finished[i]:
            continue
        f = config.aircraft[i]
        c = config.costs[i - 1]
        ctx = PairContext(f, config.env, c, float(v_pred[i - 1]), float(d[i - 1]))
        try:
            sol = solve_suboptimal(ctx)
            vi = sol.v
            branch[i - 1] = BOUNDARY_ARC if sol.branch == BOUNDARY else INTERIOR
        except InfeasibleEnvelopeError as exc:
            if exc.bound == "v_stall":
                vi = f.v_stall + ENVELOPE_MARGIN
            else:
                vi = f.v_max - ENVELOPE_MARGIN
            clamped[i - 1] = True
            near = d[i - 1] - c.d_min < c.separation_tolerance
            branch[i - 1] = BOUNDARY_ARC if near else INTERIOR
        # land exactly on d_min instead of stepping through it
        if d[i - 1] + (v_pred[i - 1] - vi) * config.dt < c.d_min:
            vi = v_pred[i - 1] + (d[i - 1] - c.d_min) / config.dt
            branch[i - 1] = CAPTURE
        v[i] = vi
    ddot = np.where(branch != INACTIVE, v_pred[:-1] - v[1:], np.nan)
    return v, d, ddot, branch, clamped


def initial_state(config):
    config.check_initial_separation()
    n = config.n
    x = np.array(config.x0, dtype=float)
    finished = np.zeros(n, dtype=bool)
    v_last = np.full(n, config.leader_profile(0.0))
    Q = np.array([a.initial_charge for a in config.aircraft], dtype=float)
    v, d, ddot, branch, clamped = _controls(0.0, x, x.copy(), finished, v_last, config)
    return PlatoonState(0.0, x, v, Q, finished, x.copy(), d, ddot, branch, clamped,
                        np.full(n, np.nan))


def step(state, config):
    """Advance one step with the airspeeds held in ``state``; choose new ones."""
    n = config.n
    dt = config.dt
    x = state.x.copy()
    Q = state.Q.copy()
    ghost = state.ghost_x.copy()
    finished = state.finished.copy()
    finish_time = state.finish_time.copy()
    vw = config.env.wind_speed
    for i in range(n):
        vi = float(state.v[i])
        ghost[i] += (vi + vw) * dt
        if finished[i]:
            continue
        rate = energy_rate(config.aircraft[i], config.env, vi)
        y = rk4_step(lambda _t, _y: np.array([vi + vw, rate]), state.t,
                     np.array([x[i], Q[i]]), dt)
        if y[0] >= config.xf[i]:
            finished[i] = True
            finish_time[i] = state.t + dt * (config.xf[i] - x[i]) / (y[0] - x[i])
        x[i], Q[i] = y
        ghost[i] = x[i]
    t = (int(round(state.t / dt)) + 1) * dt
    v, d, ddot, branch, clamped = _controls(t, x, ghost, finished, state.v, config)
    return PlatoonState(t, x, v, Q, finished, ghost, d, ddot, branch, clamped, finish_time)


@dataclass(frozen=True)
class SimulationTrace:
    """Immutable record of a run, one row per step.

    Per-aircraft arrays have shape (steps, aircraft); per-pair arrays have
    shape (steps, aircraft - 1), column ``j`` being pair (j + 1, j).
    Inactive pairs hold NaN (branch ``INACTIVE``).
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    Q: np.ndarray
    finished: np.ndarray
    d: np.ndarray
    ddot: np.ndarray
    pdw: np.ndarray
    K: np.ndarray
    branch: np.ndarray
    clamped: np.ndarray
    dt: float
    finish_time: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        for name in ("t", "x", "v", "Q", "finished", "d", "ddot", "pdw", "K",
                     "branch", "clamped", "finish_time"):
            getattr(self, name).flags.writeable = False

    @property
    def n_aircraft(self):
        return self.x.shape[1]

    @classmethod
    def from_kinematics(cls, t, v, x0, wind_speed=0.0, d_dot_max=np.inf):
        """Trace of prescribed airspeed profiles (no control law, no battery)."""
        t = np.asarray(t, dtype=float)
        v = np.asarray(v, dtype=float)
        dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
        inc = np.vstack([np.zeros((1, v.shape[1])), (v[:-1] + wind_speed) * dt])
        x = np.asarray(x0, dtype=float) + np.cumsum(inc, axis=0)
        d = x[:, :-1] - x[:, 1:]
        ddot = v[:, :-1] - v[:, 1:]
        nan = np.full_like(d, np.nan)
        return cls(t, x, v, np.full_like(v, np.nan), np.zeros(v.shape, dtype=bool), d, ddot,
                   pdw_array(d, ddot, d_dot_max) if np.isfinite(d_dot_max) else nan.copy(),
                   nan, np.full(d.shape, INTERIOR, dtype=np.int8),
                   np.zeros(d.shape, dtype=bool), dt, np.full(v.shape[1], np.nan))


def _pair_diagnostics(state, config):
    n = config.n
    pdw = np.full(n - 1, np.nan)
    k = np.full(n - 1, np.nan)
    for j in range(n - 1):
        if state.branch[j] == INACTIVE:
            continue
        c = config.costs[j]
        pdw[j] = pdw_array(state.d[j], state.ddot[j], c.d_dot_max)
        ctx = PairContext(config.aircraft[j + 1], config.env, c, float(state.v[j]),
                          float(state.d[j]))
        k[j] = k_coefficient(ctx, float(state.v[j + 1]))
    return pdw, k


def run_scenario(config, labels=None):
    """Step until every aircraft reaches its final position."""
    lead_v = config.leader_profile(0.0) + config.env.wind_speed
    if not lead_v > 0:
        raise DomainError("leader ground speed must be positive")
    t_guard = config.time_guard_factor * (config.xf[0] - config.x0[0]) / lead_v
    rows = []
    state = initial_state(config)
    while True:
        pdw, k = _pair_diagnostics(state, config)
        rows.append((state, pdw, k))
        if state.finished.all():
            break
        if state.t > t_guard:
            raise NonTerminationError(f"simulation exceeded {t_guard:.6g} s without finishing")
        state = step(state, config)

    def stack(attr):
        return np.array([getattr(r[0], attr) for r in rows])

    return SimulationTrace(
        t=stack("t"), x=stack("x"), v=stack("v"), Q=stack("Q"), finished=stack("finished"),
        d=stack("d"), ddot=stack("ddot"), pdw=np.array([r[1] for r in rows]),
        K=np.array([r[2] for r in rows]), branch=stack("branch"), clamped=stack("clamped"),
        dt=float(config.dt), finish_time=state.finish_time.copy(),
        labels=tuple(labels) if labels else tuple(a.name for a in config.aircraft))


def summarize(trace, config):
    """Headline numbers for the run summary document."""
    cert = certify_trace(trace)
    min_sep = []
    for j in range(trace.d.shape[1]):
        col = trace.d[:, j]
        col = col[np.isfinite(col)]
        min_sep.append(float(col.min()) if col.size else math.nan)
    used = [float(config.aircraft[i].initial_charge - trace.Q[-1, i])
            for i in range(trace.n_aircraft)]
    return {
        "aircraft": list(trace.labels),
        "min_separation_m": min_sep,
        "final_time_s": [float(t) for t in trace.finish_time],
        "max_K": list(cert.max_k),
        "string_stable": cert.certified,
        "charge_used_C": used,
        "boundary_steps": [int((trace.branch[:, j] == BOUNDARY_ARC).sum())
                           for j in range(trace.d.shape[1])],
        "clamped_steps": [int(trace.clamped[:, j].sum()) for j in range(trace.d.shape[1])],
        "steps": int(len(trace.t)),
    }


@dataclass(frozen=True)
class SweepSlice:
    """Follower response over one swept parameter with the others held."""

    d: float
    complexity_scale: float
    cost_index: float
    param: str
    values: np.ndarray
    v: np.ndarray
    K: np.ndarray


def sweep_slice(follower, env, cost, v_prev, d, param, values):
    """Solve the follower airspeed and K for each value of ``param`` ("vw" or "alpha")."""
    if param not in ("vw", "alpha"):
        raise DomainError(f"sweep parameter must be 'vw' or 'alpha' (got {param!r})")
    vals = np.asarray(values, dtype=float)
    v = np.empty_like(vals)
    k = np.empty_like(vals)
    for n, val in enumerate(vals):
        if param == "vw":
            ctx = PairContext(follower, replace(env, wind_speed=float(val)), cost, v_prev, d)
        else:
            ctx = PairContext(follower, env, replace(cost, complexity_scale=float(val)),
                              v_prev, d)
        v[n] = solve_suboptimal(ctx).v
        k[n] = k_coefficient(ctx, float(v[n]))
    for arr in (vals, v, k):
        arr.flags.writeable = False
    return SweepSlice(float(d), cost.complexity_scale, cost.cost_index, param, vals, v, k)


def sweep_grid(sweep, param="vw", values=None):
    """Every (separation, alpha, CI) slice of a configured sweep."""
    if values is None:
        values = sweep.winds if param == "vw" else sweep.alpha_values
    out = []
    for d in sweep.separations:
        for alpha in (sweep.complexity_scales if param == "vw" else [None]):
            for ci in sweep.cost_indices:
                cost = replace(sweep.base_cost, cost_index=ci)
                if alpha is not None:
                    cost = replace(cost, complexity_scale=alpha)
                out.append(sweep_slice(sweep.follower, sweep.env, cost,
                                       sweep.predecessor_speed, d, param, values))
    return out


def prescribed_trace(profiles, x0, duration, dt=1.0, wind_speed=0.0, d_dot_max=np.inf):
    """Trace of aircraft flying fixed ``SpeedProfile`` schedules on ``[0, duration)``."""
    if not (duration > 0 and dt > 0):
        raise DomainError("duration and dt must be > 0")
    t = np.arange(int(round(duration / dt))) * dt
    v = np.column_stack([p.sample(t) for p in profiles])
    return SimulationTrace.from_kinematics(t, v, x0, wind_speed, d_dot_max)
