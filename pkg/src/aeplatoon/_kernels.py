"""Scalar numeric kernels shared by the solver, shooting and simulator.

Every function here is plain scalar Python compiled by numba when available
(see ``_jit``). Keep them free of Python objects: floats, ints and float64
arrays only.

Pair parameters are packed into a float64 vector ``prm`` with the layout
given by the ``P_*`` indices below.
"""
import numpy as np

from ._jit import njit

P_CI = 0        # cost index [C/s]
P_ALPHA = 1     # complexity scale [C m/s]
P_DDMAX = 2     # maximum separation rate [m/s]
P_A = 3         # rho*S*CD0/(eta*U)
P_B = 4         # 2*CD2*W^2/(eta*U*rho*S)
P_VSTALL = 5
P_VMAX = 6
N_PRM = 7

# solve_root status codes
OK = 0
ROOT_BELOW = 1  # residual negative on the whole bracket
ROOT_ABOVE = 2  # residual positive on the whole bracket
NO_CONVERGENCE = 3


@njit
def p_value(v, vp, vw, d, jd, prm):
    """Optimality residual; with ``jd == 0`` this is the suboptimal law g."""
    a = prm[P_A]
    b = prm[P_B]
    return (prm[P_CI] + jd * (vp + vw)
            + prm[P_ALPHA] / d * (1.0 - (vp + vw) / prm[P_DDMAX])
            - a * v * v * (v + 1.5 * vw)
            + b / (v * v) * (2.0 * v + vw))


@njit
def p_dv(v, vw, prm):
    """Partial of the residual in v (independent of the costate)."""
    return -(v + vw) * (3.0 * prm[P_A] * v + 2.0 * prm[P_B] / (v * v * v))


@njit
def solve_root(lo, hi, vp, vw, d, jd, prm, ftol, xtol, maxiter):
    """Root of the residual on [lo, hi] by Newton steps guarded by bisection.

    The residual is strictly decreasing in v whenever v + vw > 0, so a valid
    bracket has f(lo) >= 0 >= f(hi). Returns ``(v, iterations, status)``.
    """
    flo = p_value(lo, vp, vw, d, jd, prm)
    fhi = p_value(hi, vp, vw, d, jd, prm)
    if flo < 0.0:
        return lo, 0, ROOT_BELOW
    if fhi > 0.0:
        return hi, 0, ROOT_ABOVE
    if flo == 0.0:
        return lo, 0, OK
    if fhi == 0.0:
        return hi, 0, OK
    a = lo
    b = hi
    # secant start is close for the near-linear residual
    x = a + (b - a) * flo / (flo - fhi)
    for it in range(1, maxiter + 1):
        fx = p_value(x, vp, vw, d, jd, prm)
        if abs(fx) < ftol:
            return x, it, OK
        if fx > 0.0:
            a = x
        else:
            b = x
        if b - a < xtol:
            x = 0.5 * (a + b)
            return x, it, OK
        dfx = p_dv(x, vw, prm)
        xn = x - fx / dfx if dfx != 0.0 else 0.5 * (a + b)
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        x = xn
    return x, maxiter, NO_CONVERGENCE


@njit
def charge_rate(v, prm):
    return -(0.5 * prm[P_A] * v * v * v + prm[P_B] / v)


@njit
def costate_rhs(v, vp, d, prm):
    return prm[P_ALPHA] / (d * d) * (1.0 + (v - vp) / prm[P_DDMAX])


@njit
def _rhs(s, v, vp, vw, prm, out):
    # state s = (x, d, Q, J)
    out[0] = v + vw
    out[1] = vp - v
    out[2] = charge_rate(v, prm)
    out[3] = costate_rhs(v, vp, s[1], prm)


@njit
def rk4_step_held(s, v, vp, vw, prm, dt, out):
    """One classical RK4 step of (x, d, Q, J) with the airspeed held over the step."""
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    _rhs(s, v, vp, vw, prm, k1)
    for i in range(4):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    _rhs(tmp, v, vp, vw, prm, k2)
    for i in range(4):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    _rhs(tmp, v, vp, vw, prm, k3)
    for i in range(4):
        tmp[i] = s[i] + dt * k3[i]
    _rhs(tmp, v, vp, vw, prm, k4)
    for i in range(4):
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit
def shoot_pass(j0, x0, xf, d0, q0, vp, vw, prm, dt, max_steps, ftol, xtol, maxiter, traj):
    """Forward pass of the costate shooting iteration.

    At each step the airspeed solves p = 0 for the current costate and
    separation, then (x, d, Q, J) advance by one RK4 step. The horizon ends at
    the first step with x >= xf; terminal values are linearly interpolated
    over that last partial step.

    ``traj`` has shape (max_steps + 1, 6) and receives rows
    (t, x, d, Q, J, v). Returns ``(n_rows, t_f, J_f, status, fail_step)``;
    status is 0 on success, otherwise a ``solve_root`` code (or 4 when the
    step budget is exhausted).
    """
    s = np.empty(4)
    s_new = np.empty(4)
    s[0] = x0
    s[1] = d0
    s[2] = q0
    s[3] = j0
    t = 0.0
    for k in range(max_steps):
        v, it, status = solve_root(prm[P_VSTALL], prm[P_VMAX], vp, vw, s[1], s[3],
                                   prm, ftol, xtol, maxiter)
        if status != OK:
            return k, t, s[3], status, k
        traj[k, 0] = t
        traj[k, 1] = s[0]
        traj[k, 2] = s[1]
        traj[k, 3] = s[2]
        traj[k, 4] = s[3]
        traj[k, 5] = v
        rk4_step_held(s, v, vp, vw, prm, dt, s_new)
        if s_new[0] >= xf:
            theta = (xf - s[0]) / (s_new[0] - s[0])
            t_f = t + theta * dt
            traj[k + 1, 0] = t_f
            for i in range(4):
                traj[k + 1, i + 1] = s[i] + theta * (s_new[i] - s[i])
            traj[k + 1, 5] = v
            return k + 2, t_f, traj[k + 1, 4], OK, -1
        for i in range(4):
            s[i] = s_new[i]
        t = (k + 1) * dt
    return max_steps, t, s[3], 4, max_steps


def pack(ci, alpha, d_dot_max, a, b, v_stall, v_max):
    prm = np.empty(N_PRM)
    prm[P_CI] = ci
    prm[P_ALPHA] = alpha
    prm[P_DDMAX] = d_dot_max
    prm[P_A] = a
    prm[P_B] = b
    prm[P_VSTALL] = v_stall
    prm[P_VMAX] = v_max
    return prm

