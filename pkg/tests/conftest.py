import os
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from aeplatoon import config as cfgmod
from aeplatoon.aero_energy import E430, VELIS_ELECTRO, Environment
from aeplatoon.speed_solver import CostConfig, PairContext

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "aeplatoon" / "fixtures"

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def fixture_path(name):
    return FIXTURES / name


@pytest.fixture(scope="session")
def fixture_cfg():
    cache = {}

    def load(name):
        if name not in cache:
            cache[name] = cfgmod.load(FIXTURES / name)
        return cache[name]
    return load


RHO = 1.112


def pair(follower=E430, rho=RHO, vw=0.0, ci=90.0, alpha=1e4, ddmax=20.0, d_min=1000.0,
         v_prev=100 / 3.6, d=4000.0, v_stall=None, v_max=None):
    """PairContext builder with keyword overrides."""
    f = follower
    if v_stall is not None or v_max is not None:
        f = replace(f, v_stall=v_stall if v_stall is not None else f.v_stall,
                    v_max=v_max if v_max is not None else f.v_max)
    return PairContext(f, Environment(rho, vw), CostConfig(ci, alpha, ddmax, d_min),
                       v_prev, d)


# Wide envelope so a root almost always exists; v + v_w stays positive.
WIDE_STALL, WIDE_MAX = 12.0, 90.0


@st.composite
def contexts(draw, vw=st.floats(-10, 10), alpha=st.floats(0, 3e4), ci=st.floats(0, 200)):
    base = draw(st.sampled_from([E430, VELIS_ELECTRO]))
    scale = draw(st.floats(0.8, 1.25))
    f = replace(base, wing_area=base.wing_area * scale,
                weight=base.weight * draw(st.floats(0.8, 1.25)),
                v_stall=WIDE_STALL, v_max=WIDE_MAX)
    return PairContext(
        f, Environment(draw(st.floats(0.9, 1.25)), draw(vw)),
        CostConfig(draw(ci), draw(alpha), draw(st.floats(10, 60)), 1000.0),
        draw(st.floats(25, 50)), draw(st.floats(1500, 20000)))


def g_printed(ctx, v):
    """Independent evaluation of the suboptimal law, written out term by term."""
    f, e, c = ctx.follower, ctx.env, ctx.cost
    rs = e.air_density * f.wing_area
    eu = f.efficiency * f.voltage
    v = np.asarray(v, dtype=float)
    return (c.cost_index
            + (c.complexity_scale / ctx.d) * (1 - (ctx.v_prev + e.wind_speed) / c.d_dot_max)
            - (rs * f.cd0 * v**2 / eu) * (v + 1.5 * e.wind_speed)
            + (2 * f.cd2 * f.weight**2 / (eu * rs * v**2)) * (2 * v + e.wind_speed))


def grid_root(ctx, lo, hi, step=1e-3, fn=None):
    """Midpoint of the first sign-change cell of a uniform scan, or None."""
    grid = np.arange(lo, hi + step / 2, step)
    vals = (fn or (lambda v: g_printed(ctx, v)))(grid)
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if idx.size == 0:
        return None
    k = idx[0]
    return 0.5 * (grid[k] + grid[k + 1])
