import json
import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import FIXTURES

PROBE = r"""
import json, sys
import numpy as np
from aeplatoon import _jit, config, platoon_sim, shooting
from aeplatoon.speed_solver import solve_suboptimal

fx = sys.argv[1]
c = config.load(fx + "/shooting_table4.cfg")
res = shooting.shoot(c.pair, c.mission, c.shooting[1])
sol = solve_suboptimal(c.pair)
pc = config.load(fx + "/scenario2.cfg").platoon
tr = platoon_sim.run_scenario(pc)
print(json.dumps({
    "jit": _jit.JIT_ENABLED,
    "J_d0": res.J_d0, "iterations": res.iterations,
    "v": sol.v,
    "x_end": tr.x[-1].tolist(), "Q_end": tr.Q[-1].tolist(),
    "d_min": np.nanmin(tr.d, axis=0).tolist(),
}))
"""


def probe(disable):
    env = dict(os.environ)
    env.pop("AEPLATOON_DISABLE_JIT", None)
    if disable:
        env["AEPLATOON_DISABLE_JIT"] = "1"
    r = subprocess.run([sys.executable, "-c", PROBE, str(FIXTURES)], capture_output=True,
                       text=True, env=env, timeout=600)
    assert r.returncode == 0, r.stderr
    return json.loads(r.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def both():
    return probe(False), probe(True)


def test_flag_selects_path(both):
    jit, pure = both
    assert jit["jit"] is True
    assert pure["jit"] is False


def test_paths_agree(both):
    jit, pure = both
    assert jit["iterations"] == pure["iterations"]
    for key in ("J_d0", "v", "x_end", "Q_end", "d_min"):
        np.testing.assert_allclose(jit[key], pure[key], rtol=1e-10, err_msg=key)


@pytest.mark.parametrize("value,expected", [("", False), ("0", False), ("false", False),
                                            ("1", True), ("yes", True)])
def test_flag_parsing(value, expected):
    env = dict(os.environ, AEPLATOON_DISABLE_JIT=value)
    r = subprocess.run([sys.executable, "-c",
                        "from aeplatoon import _jit; print(_jit.DISABLED_BY_ENV)"],
                       capture_output=True, text=True, env=env)
    assert r.stdout.strip() == str(expected)
