"""Drag polar and battery charge-rate model of a cruising all-electric aircraft.

All quantities are SI: m/s, N, C, s. Weight is constant in cruise because the
aircraft burns no fuel, and the battery is ideal (constant voltage, no
internal resistance).
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

DEFAULT_V_STALL = 25.0  # m/s (90 km/h)


@dataclass(frozen=True)
class AircraftParams:
    """Physical and electrical constants of one airframe.

    Attributes
    ----------
    wing_area : float
        Reference wing area S [m^2].
    weight : float
        Weight W [N].
    cd0, cd2 : float
        Parasitic and lift-induced drag coefficients.
    voltage : float
        Battery voltage U [V].
    efficiency : float
        Powertrain efficiency eta, 0 < eta <= 1.
    v_stall, v_max : float
        Envelope airspeeds [m/s].
    initial_charge : float
        Battery charge at t=0 [C].
    name : str
        Label used in reports.
    """

    wing_area: float
    weight: float
    cd0: float
    cd2: float
    voltage: float
    efficiency: float
    v_stall: float
    v_max: float
    initial_charge: float
    name: str = ""

    def __post_init__(self):
        errs = self.violations()
        if errs:
            raise DomainError("; ".join(errs))

    def violations(self, prefix=""):
        errs = []
        for f in ("wing_area", "weight", "cd0", "cd2", "voltage", "efficiency",
                  "v_stall", "v_max", "initial_charge"):
            val = getattr(self, f)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                errs.append(f"{prefix}{f} must be a finite positive number (got {val!r})")
        if not errs:
            if self.efficiency > 1:
                errs.append(f"{prefix}efficiency must be <= 1 (got {self.efficiency!r})")
            if self.v_stall >= self.v_max:
                errs.append(f"{prefix}v_stall ({self.v_stall}) must be below v_max ({self.v_max})")
        return errs


@dataclass(frozen=True)
class Environment:
    """Air density [kg/m^3] and constant longitudinal wind [m/s], >0 tailwind."""

    air_density: float
    wind_speed: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.air_density) and self.air_density > 0):
            raise DomainError(f"air_density must be positive (got {self.air_density!r})")
        if not math.isfinite(self.wind_speed):
            raise DomainError(f"wind_speed must be finite (got {self.wind_speed!r})")


# Reference airframes. No stall speed is published for either, so both use DEFAULT_V_STALL.
E430 = AircraftParams(wing_area=11.37, weight=4610.0, cd0=0.035, cd2=0.009,
                      voltage=133.2, efficiency=0.7, v_stall=DEFAULT_V_STALL,
                      v_max=150 / 3.6, initial_charge=3.6e5, name="A1")
VELIS_ELECTRO = AircraftParams(wing_area=9.5, weight=5400.0, cd0=0.039, cd2=0.008,
                               voltage=200.0, efficiency=0.7, v_stall=DEFAULT_V_STALL,
                               v_max=172 / 3.6, initial_charge=3.0e5, name="A2")


def _check_speed(v):
    v = np.asarray(v, dtype=float)
    if np.any(~(v > 0)):
        raise DomainError(f"airspeed must be positive (got {v!r})")
    return v


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def drag(params, env, v):
    """Drag force [N]: parasitic 0.5*rho*S*CD0*v^2 plus induced 2*CD2*W^2/(rho*S*v^2)."""
    v = _check_speed(v)
    rs = env.air_density * params.wing_area
    return _out(0.5 * rs * params.cd0 * v**2 + 2.0 * params.cd2 * params.weight**2 / (rs * v**2))


def energy_rate(params, env, v):
    """Battery charge rate [C/s]; always negative in cruise."""
    v = _check_speed(v)
    rs = env.air_density * params.wing_area
    power = 0.5 * rs * params.cd0 * v**3 + 2.0 * params.cd2 * params.weight**2 / (rs * v)
    return _out(-power / (params.efficiency * params.voltage))


def energy_rate_dv(params, env, v):
    """Derivative of :func:`energy_rate` with respect to airspeed [C/s per m/s]."""
    v = _check_speed(v)
    rs = env.air_density * params.wing_area
    bracket = 1.5 * rs * params.cd0 * v**2 - 2.0 * params.cd2 * params.weight**2 / (rs * v**2)
    return _out(-bracket / (params.efficiency * params.voltage))


def min_drag_speed(params, env):
    """Airspeed of minimum drag, (4*CD2*W^2 / (rho^2 S^2 CD0))^(1/4)."""
    rs = env.air_density * params.wing_area
    return (4.0 * params.cd2 * params.weight**2 / (rs**2 * params.cd0)) ** 0.25


def min_power_speed(params, env):
    """Airspeed where the charge rate is stationary (minimum current draw)."""
    rs = env.air_density * params.wing_area
    return (4.0 * params.cd2 * params.weight**2 / (3.0 * rs**2 * params.cd0)) ** 0.25


def coefficients(params, env):
    """Grouped constants used by the kernels.

    Returns ``(a, b)`` with ``a = rho*S*CD0/(eta*U)`` and
    ``b = 2*CD2*W^2/(eta*U*rho*S)`` so that the charge rate is
    ``-(a*v^3/2 + b/v)``.
    """
    rs = env.air_density * params.wing_area
    eu = params.efficiency * params.voltage
    return rs * params.cd0 / eu, 2.0 * params.cd2 * params.weight**2 / (eu * rs)
