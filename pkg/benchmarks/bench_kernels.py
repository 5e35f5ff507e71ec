"""Compare the numba kernels against the interpreted fallback.

Each mode runs in its own interpreter because the JIT choice is fixed at
import time by ``AEPLATOON_DISABLE_JIT``. Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, time
from importlib.resources import files
from aeplatoon import _jit, config, platoon_sim, shooting
from aeplatoon.speed_solver import solve_suboptimal

repeat = int(sys.argv[1])
fx = files("aeplatoon") / "fixtures"
shoot_cfg = config.load(fx / "shooting_table4.cfg")
scen = config.load(fx / "scenario3.cfg").platoon


def timed(fn):
    fn()  # warm-up: compilation or cache load
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


out = {
    "jit": _jit.JIT_ENABLED,
    "solve x1000": timed(lambda: [solve_suboptimal(shoot_cfg.pair) for _ in range(1000)]),
    "shoot": timed(lambda: shooting.shoot(shoot_cfg.pair, shoot_cfg.mission,
                                          shoot_cfg.shooting[1])),
    "simulate scenario3": timed(lambda: platoon_sim.run_scenario(scen)),
}
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ)
    env.pop("AEPLATOON_DISABLE_JIT", None)
    if disable:
        env["AEPLATOON_DISABLE_JIT"] = "1"
    r = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                       capture_output=True, text=True, check=True)
    return json.loads(r.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    jit, pure = run(False, args.repeat), run(True, args.repeat)
    print(f"{'workload':<22}{'numba [s]':>12}{'python [s]':>12}{'speed-up':>10}")
    for key in jit:
        if key == "jit":
            continue
        print(f"{key:<22}{jit[key]:>12.4f}{pure[key]:>12.4f}{pure[key] / jit[key]:>9.1f}x")


if __name__ == "__main__":
    main()
