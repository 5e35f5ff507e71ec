"""Follower airspeed from the suboptimal control law, plus optimal-law residuals.

The suboptimal law freezes the separation costate at its terminal value of
zero. In the interior (d > d_min) the airspeed is the root of ``g``; on the
separation boundary the follower flies ``v_prev - v_eps`` where ``v_eps``
is the root of ``y`` (``g`` evaluated at ``v_prev - v_eps``), or zero when
matching the predecessor already satisfies the law.
"""
import math
from dataclasses import dataclass, replace

from . import _kernels as K
from .aero_energy import AircraftParams, Environment, coefficients
from .errors import DomainError, InfeasibleEnvelopeError, SeparationViolationError

FTOL = 1e-9       # C/s
XTOL = 1e-6       # m/s
MAXITER = 200

INTERIOR = "interior"
BOUNDARY = "boundary"


@dataclass(frozen=True)
class CostConfig:
    """Cost weights and separation limits for one follower.

    ``separation_tolerance`` is the distance [m] within which d counts as
    equal to d_min.
    """

    cost_index: float
    complexity_scale: float
    d_dot_max: float
    d_min: float
    separation_tolerance: float = 0.1

    def __post_init__(self):
        errs = self.violations()
        if errs:
            raise DomainError("; ".join(errs))

    def violations(self, prefix=""):
        errs = []
        for f, strict in (("cost_index", False), ("complexity_scale", False),
                          ("d_dot_max", True), ("d_min", True),
                          ("separation_tolerance", False)):
            val = getattr(self, f)
            ok = isinstance(val, (int, float)) and math.isfinite(val)
            ok = ok and (val > 0 if strict else val >= 0)
            if not ok:
                rel = ">" if strict else ">="
                errs.append(f"{prefix}{f} must be finite and {rel} 0 (got {val!r})")
        return errs


@dataclass(frozen=True)
class PairContext:
    """Everything the follower needs at one instant."""

    follower: AircraftParams
    env: Environment
    cost: CostConfig
    v_prev: float
    d: float

    def __post_init__(self):
        if not (math.isfinite(self.v_prev) and self.v_prev > 0):
            raise DomainError(f"v_prev must be positive (got {self.v_prev!r})")
        if not (math.isfinite(self.d) and self.d > 0):
            raise DomainError(f"separation d must be positive (got {self.d!r})")

    def with_(self, **kw):
        return replace(self, **kw)

    def packed(self):
        a, b = coefficients(self.follower, self.env)
        c = self.cost
        return K.pack(c.cost_index, c.complexity_scale, c.d_dot_max, a, b,
                      self.follower.v_stall, self.follower.v_max)


@dataclass(frozen=True)
class CostateValue:
    """Separation costate J_d [C/m] at time t [s]."""

    J_d: float
    t: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.J_d):
            raise DomainError(f"costate must be finite (got {self.J_d!r})")


@dataclass(frozen=True)
class SpeedSolution:
    v: float
    branch: str
    v_eps: float
    residual: float
    iterations: int


def _check_v(v):
    if not (v > 0):
        raise DomainError(f"airspeed must be positive (got {v!r})")


def g_residual(ctx, v):
    """Suboptimal control-law residual g [C/s] at follower airspeed v."""
    _check_v(v)
    return K.p_value(float(v), ctx.v_prev, ctx.env.wind_speed, ctx.d, 0.0, ctx.packed())


def g_dv(ctx, v):
    """Analytic dg/dv [C/m]: -(v+vw)/(eta*U) * (3 rho S CD0 v + 4 CD2 W^2/(rho S v^3))."""
    _check_v(v)
    return K.p_dv(float(v), ctx.env.wind_speed, ctx.packed())


def g_dv_prev(ctx):
    """dg/dv_prev = -alpha / (d * d_dot_max)."""
    return -ctx.cost.complexity_scale / (ctx.d * ctx.cost.d_dot_max)


def p_residual(ctx, v, costate):
    """Optimal-law residual p: g plus the costate term J_d * (v_prev + v_w)."""
    _check_v(v)
    return K.p_value(float(v), ctx.v_prev, ctx.env.wind_speed, ctx.d,
                     costate.J_d, ctx.packed())


def y_residual(ctx, v_eps):
    """Boundary residual y(v_eps) = g(v_prev - v_eps)."""
    v = ctx.v_prev - v_eps
    if not (v > 0):
        raise DomainError(f"v_prev - v_eps must be positive (got {v!r})")
    return K.p_value(v, ctx.v_prev, ctx.env.wind_speed, ctx.d, 0.0, ctx.packed())


def _bracket_error(status, lo, hi, which):
    if status == K.ROOT_BELOW:
        return InfeasibleEnvelopeError(
            f"{which} root lies below v_stall: residual negative at {lo:.6g} m/s",
            bound="v_stall")
    return InfeasibleEnvelopeError(
        f"{which} root lies above v_max: residual positive at {hi:.6g} m/s",
        bound="v_max")


def solve_root(ctx, jd=0.0, lo=None, hi=None):
    """Root of p (g when ``jd == 0``) on [lo, hi], default the flight envelope.

    Returns ``(v, iterations)``; raises :class:`InfeasibleEnvelopeError`
    when the residual does not change sign on the bracket.
    """
    lo = ctx.follower.v_stall if lo is None else lo
    hi = ctx.follower.v_max if hi is None else hi
    if lo + ctx.env.wind_speed <= 0:
        raise DomainError("ground speed must stay positive on the bracket "
                          f"(v_stall {lo} m/s, wind {ctx.env.wind_speed} m/s)")
    v, it, status = K.solve_root(lo, hi, ctx.v_prev, ctx.env.wind_speed, ctx.d, jd,
                                 ctx.packed(), FTOL, XTOL, MAXITER)
    if status in (K.ROOT_BELOW, K.ROOT_ABOVE):
        raise _bracket_error(status, lo, hi, "g" if jd == 0 else "p")
    if status == K.NO_CONVERGENCE:  # pragma: no cover - bisection always terminates
        raise RuntimeError("root solver exhausted its iteration budget")
    return v, it


def solve_epsilon(ctx):
    """Airspeed adjustment on the boundary.

    Returns ``(v_eps, iterations)``. ``v_eps`` is 0 when the unconstrained
    root is at or above ``v_prev`` (the follower rides the boundary at the
    predecessor's speed).
    """
    hi = min(ctx.v_prev, ctx.follower.v_max)
    if ctx.v_prev <= ctx.follower.v_stall:
        raise InfeasibleEnvelopeError(
            f"boundary speed v_prev={ctx.v_prev:.6g} m/s is not above v_stall",
            bound="v_stall")
    if g_residual(ctx, hi) >= 0.0:
        if hi < ctx.v_prev:
            raise InfeasibleEnvelopeError(
                f"boundary speed v_prev={ctx.v_prev:.6g} m/s exceeds v_max", bound="v_max")
        return 0.0, 0
    v, it = solve_root(ctx, 0.0, ctx.follower.v_stall, hi)
    return ctx.v_prev - v, it


def solve_suboptimal(ctx):
    """Airspeed from the suboptimal law, with the branch that produced it."""
    c = ctx.cost
    gap = ctx.d - c.d_min
    if gap < -c.separation_tolerance:
        raise SeparationViolationError(
            f"separation {ctx.d:.6g} m below d_min {c.d_min:.6g} m")
    if gap < c.separation_tolerance:
        v_eps, it = solve_epsilon(ctx)
        v = ctx.v_prev - v_eps
        return SpeedSolution(v, BOUNDARY, v_eps, g_residual(ctx, v), it)
    v, it = solve_root(ctx)
    return SpeedSolution(v, INTERIOR, 0.0, g_residual(ctx, v), it)


def costate_rate(ctx, v, mu=0.0):
    """Right-hand side of the separation costate equation [C/m/s]."""
    if not (ctx.d > 0):
        raise DomainError("separation must be positive")
    if mu < 0:
        raise DomainError(f"multiplier mu must be >= 0 (got {mu!r})")
    c = ctx.cost
    return c.complexity_scale / ctx.d**2 * (1.0 + (v - ctx.v_prev) / c.d_dot_max) + mu


def _contact_terms(ctx_before, ctx_at, v_before, v_at):
    for v in (v_before, v_at):
        _check_v(v)
    f, env = ctx_at.follower, ctx_at.env
    rs = env.air_density * f.wing_area
    eu = f.efficiency * f.voltage
    lin = (v_before - v_at) * (-3.0 * rs * f.cd0 / (2.0 * eu) * v_before**2
                               + 2.0 * f.cd2 * f.weight**2 / (eu * rs * v_before))
    cub = -rs * f.cd0 / eu * (v_at**3 - v_before**3)
    inv = -2.0 * f.cd2 * f.weight**2 / (eu * rs) * (1.0 / v_at - 1.0 / v_before)
    jump = ctx_at.cost.complexity_scale / ctx_before.d * (ctx_at.v_prev - ctx_before.v_prev)
    return lin, cub, inv, jump


def q_residual(ctx_before, ctx_at, v_before, v_at, J_d_before, J_d_at):
    """Residual of the instantaneous boundary-contact condition.

    ``ctx_before`` describes the instant just before contact, ``ctx_at`` the
    contact instant. Evaluation only; the simulator never solves it.
    """
    lin, cub, inv, jump = _contact_terms(ctx_before, ctx_at, v_before, v_at)
    return (lin + cub + inv + jump
            - J_d_at * (ctx_at.v_prev - v_at)
            + J_d_before * (ctx_before.v_prev - v_at))


def entry_residual(ctx_before, ctx_at, v_before, v_at, J_d_before, J_d_at):
    """Residual of the boundary-arc entry condition (same terms, entry ordering)."""
    lin, cub, inv, jump = _contact_terms(ctx_before, ctx_at, v_before, v_at)
    return (lin + cub + inv + jump
            + J_d_before * (ctx_before.v_prev - v_at)
            - J_d_at * (ctx_at.v_prev - v_at))
