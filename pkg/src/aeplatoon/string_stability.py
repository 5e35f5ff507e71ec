"""String-stability coefficient and empirical disturbance attenuation."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, TraceMismatchError


@dataclass(frozen=True)
class DisturbanceSpec:
    """Half-sine pulse added to the leader's airspeed.

    ``amplitude`` [m/s], ``start_time`` and ``duration`` [s].
    """

    amplitude: float
    start_time: float
    duration: float

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise DomainError(f"amplitude must be finite (got {self.amplitude!r})")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise DomainError(f"duration must be > 0 (got {self.duration!r})")


def disturbance(spec, t):
    """amplitude * sin(pi (t - t0) / dt) inside [t0, t0 + dt], zero outside."""
    t = np.asarray(t, dtype=float)
    tau = (t - spec.start_time) / spec.duration
    inside = (tau >= 0.0) & (tau <= 1.0)
    out = np.where(inside, spec.amplitude * np.sin(np.pi * np.clip(tau, 0.0, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def k_coefficient(ctx, v):
    """Analytic bound on |dv_follower / dv_predecessor| at airspeed ``v``.

    K = eta U alpha rho S v^3 / (d d_dot_max (v + v_w) [3 (rho S)^2 CD0 v^4 + 4 CD2 W^2]),
    which equals |dg/dv_prev| / |dg/dv| for the suboptimal law g.
    """
    f, env, c = ctx.follower, ctx.env, ctx.cost
    if not v > 0:
        raise DomainError(f"airspeed must be positive (got {v!r})")
    ground = v + env.wind_speed
    if ground == 0.0:
        raise DomainError("K is singular at zero ground speed (v + v_w = 0)")
    rs = env.air_density * f.wing_area
    num = f.efficiency * f.voltage * c.complexity_scale * rs * v**3
    den = ctx.d * c.d_dot_max * ground * (3.0 * rs**2 * f.cd0 * v**4 + 4.0 * f.cd2 * f.weight**2)
    return abs(-num / den)


@dataclass(frozen=True)
class Certificate:
    max_k: tuple
    certified: bool

    def summary(self):
        ks = ", ".join(f"K_{i + 1},{i}={k:.3e}" for i, k in enumerate(self.max_k))
        return f"string stable: {'yes' if self.certified else 'no'} ({ks})"


def certify_trace(trace):
    """String-stability certificate from the K series stored in a trace."""
    max_k = []
    for j in range(trace.K.shape[1]):
        col = trace.K[:, j]
        col = col[np.isfinite(col)]
        max_k.append(float(col.max()) if col.size else 0.0)
    return Certificate(tuple(max_k), all(k <= 1.0 for k in max_k))


@dataclass(frozen=True)
class Attenuation:
    t: np.ndarray
    dv: np.ndarray          # (n, aircraft) disturbed minus baseline airspeed
    max_abs: tuple
    attenuates: bool


def attenuation_check(disturbed, baseline, amplitude=None, rtol=1e-9):
    """Compare a disturbed run against its undisturbed baseline.

    The verdict holds when the peak speed deviation does not grow down the
    chain. With ``amplitude`` given, the leader's peak must not exceed it.
    Rows where an aircraft is finished in either run are excluded.
    """
    if not math.isclose(disturbed.dt, baseline.dt, rel_tol=0, abs_tol=1e-12):
        raise TraceMismatchError(f"time steps differ ({disturbed.dt} vs {baseline.dt})")
    n = min(len(disturbed.t), len(baseline.t))
    if n == 0 or not np.array_equal(disturbed.t[:n], baseline.t[:n]):
        raise TraceMismatchError("traces do not share a time grid")
    if disturbed.v.shape[1] != baseline.v.shape[1]:
        raise TraceMismatchError("traces have different platoon sizes")
    active = ~(disturbed.finished[:n] | baseline.finished[:n])
    dv = np.where(active, disturbed.v[:n] - baseline.v[:n], 0.0)
    max_abs = tuple(float(m) for m in np.abs(dv).max(axis=0))
    ok = all(b <= a * (1 + rtol) + 1e-12 for a, b in zip(max_abs, max_abs[1:]))
    if amplitude is not None:
        ok = ok and max_abs[0] <= abs(amplitude) * (1 + rtol) + 1e-12
    return Attenuation(disturbed.t[:n], dv, max_abs, ok)
