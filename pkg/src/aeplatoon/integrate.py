"""Classical fixed-step Runge-Kutta integration."""
import numpy as np


def rk4_step(f, t, y, dt):
    """Advance ``y' = f(t, y)`` by one fourth-order Runge-Kutta step."""
    y = np.asarray(y, dtype=float)
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(f, t0, y0, dt, n_steps):
    """Fixed-step trajectory; returns ``(t, y)`` with ``n_steps + 1`` rows."""
    y = np.empty((n_steps + 1, np.size(y0)))
    y[0] = y0
    t = t0 + dt * np.arange(n_steps + 1)
    for k in range(n_steps):
        y[k + 1] = rk4_step(f, t[k], y[k], dt)
    return t, y
