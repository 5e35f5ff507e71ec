"""Command-line front end.

Every subcommand reads one ``.cfg`` document, writes its outputs into a fresh
run directory ``<out>/<subcommand>_<config stem>`` and prints a short report.
Files are staged in a hidden directory under ``--out`` and renamed into place
once complete, so a run directory is either absent or whole.

Exit codes: 0 success, 1 configuration error, 2 solver infeasibility,
3 separation (safety) violation, 4 shooting non-convergence.
"""
import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import complexity, config as cfgmod, platoon_sim as ps, shooting, string_stability as ss
from .errors import (ConfigError, DomainError, InfeasibleEnvelopeError, NonTerminationError,
                     SeparationViolationError)
from .speed_solver import INTERIOR, CostateValue, p_residual, solve_root, solve_suboptimal
from .units import format_speed_kmh

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_SAFETY, EXIT_NO_CONVERGENCE = 0, 1, 2, 3, 4


class NonConvergenceError(RuntimeError):
    pass


def _num(x):
    """Shortest round-trip text for a float; blank for NaN."""
    x = float(x)
    return "" if x != x else repr(x)


class RunWriter:
    """Collects output files and commits them into the run directory at once."""

    def __init__(self, out, name):
        self.root = Path(out)
        self.target = self.root / name
        self.files = {}

    def text(self, name, content):
        self.files[name] = content

    def json(self, name, obj):
        self.files[name] = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"

    def csv(self, name, header, rows):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(c if isinstance(c, str) else _num(c) for c in row))
        self.files[name] = "\n".join(lines) + "\n"

    def commit(self):
        self.root.mkdir(parents=True, exist_ok=True)
        stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.root))
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(stage, 0o777 & ~umask)
        try:
            for name, content in self.files.items():
                (stage / name).write_text(content, encoding="utf-8")
            old = None
            if self.target.exists():
                old = Path(tempfile.mkdtemp(prefix=".old-", dir=self.root))
                os.replace(self.target, old / "run")
            os.replace(stage, self.target)
            if old is not None:
                shutil.rmtree(old)
        except BaseException:
            shutil.rmtree(stage, ignore_errors=True)
            raise
        return self.target


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and obj != obj:
        return None
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _json_safe(obj.item())
    return obj


# ---------------------------------------------------------------- subcommands

def _need(loaded, attr, section):
    if getattr(loaded, attr) is None:
        raise ConfigError(f"{loaded.source}: [{section}] section required for this subcommand")
    return getattr(loaded, attr)


def _trace_rows(trace):
    n = trace.n_aircraft
    header = ["t_s"]
    for i in range(n):
        header += [f"x{i}_m", f"v{i}_mps", f"Q{i}_C"]
    for j in range(n - 1):
        p = f"{j + 1}_{j}"
        header += [f"d{p}_m", f"ddot{p}_mps", f"pdw{p}_perm", f"K{p}", f"branch{p}",
                   f"clamped{p}"]
    rows = []
    for r in range(len(trace.t)):
        row = [trace.t[r]]
        for i in range(n):
            row += [trace.x[r, i], trace.v[r, i], trace.Q[r, i]]
        for j in range(n - 1):
            row += [trace.d[r, j], trace.ddot[r, j], trace.pdw[r, j], trace.K[r, j],
                    ps.BRANCH_NAMES[int(trace.branch[r, j])], str(int(trace.clamped[r, j]))]
        rows.append(row)
    return header, rows


def cmd_simulate(loaded, args, w):
    pc = _need(loaded, "platoon", "platoon")
    trace = ps.run_scenario(pc)
    summary = ps.summarize(trace, pc)
    w.csv("trace.csv", *_trace_rows(trace))
    w.json("summary.json", _json_safe(summary))
    seps = ", ".join(f"{d:.1f} m" for d in summary["min_separation_m"])
    return [f"steps: {summary['steps']}  min separation: {seps}",
            ss.certify_trace(trace).summary()]


def cmd_stability(loaded, args, w):
    pc = _need(loaded, "platoon", "platoon")
    if pc.leader_disturbance is None:
        raise ConfigError(f"{loaded.source}: [disturbance] section required for stability")
    disturbed = ps.run_scenario(pc)
    baseline = ps.run_scenario(replace(pc, leader_disturbance=None))
    att = ss.attenuation_check(disturbed, baseline, amplitude=pc.leader_disturbance.amplitude)
    cert = ss.certify_trace(disturbed)
    n = disturbed.n_aircraft
    header = ["t_s"] + [f"dv{i}_mps" for i in range(n)] + [f"K{j + 1}_{j}" for j in range(n - 1)]
    rows = [[att.t[r]] + list(att.dv[r]) + list(disturbed.K[r]) for r in range(len(att.t))]
    w.csv("stability.csv", header, rows)
    w.json("summary.json", _json_safe({
        "max_abs_dv_mps": list(att.max_abs), "attenuates": att.attenuates,
        "max_K": list(cert.max_k), "string_stable": cert.certified,
        "disturbance_amplitude_mps": pc.leader_disturbance.amplitude}))
    dv = ", ".join(f"{m:.4g}" for m in att.max_abs)
    return [cert.summary(),
            f"attenuation: {'yes' if att.attenuates else 'no'} (max |dv| = {dv} m/s)"]


def cmd_sweep(loaded, args, w):
    sw = _need(loaded, "sweep", "sweep")
    slices = ps.sweep_grid(sw, param=args.param)
    header = ["param", "value", "d_m", "complexity_scale", "cost_index", "v_mps", "K"]
    rows = []
    for s in slices:
        for val, v, k in zip(s.values, s.v, s.K):
            rows.append([s.param, val, s.d, s.complexity_scale, s.cost_index, v, k])
    w.csv("sweep.csv", header, rows)
    mono = [bool(np.all(np.diff(s.v) < 0)) for s in slices]
    w.json("summary.json", {"param": args.param, "slices": len(slices),
                            "v_strictly_decreasing": mono})
    if args.param == "vw":
        return [f"{len(slices)} slices, follower speed strictly decreasing in wind: "
                f"{sum(mono)}/{len(slices)}"]
    return [f"{len(slices)} slices over complexity_scale"]


def cmd_metrics(loaded, args, w):
    st = _need(loaded, "metrics", "metrics")
    report = {}
    for sc in st.scenarios:
        tr = ps.prescribed_trace([sc.predecessor, sc.follower], [st.initial_separation, 0.0],
                                 st.duration, st.dt)
        tab = complexity.metric_table(tr, st.d_dot_max, window=st.window,
                                      speed_change_threshold=st.speed_change_threshold,
                                      unsafe_distance=st.unsafe_distance)
        w.csv(f"metrics_{sc.name}.csv", complexity.MetricTable.columns, tab.rows())
        report[sc.name] = {"pdw_min": float(tab.pdw_raw.min()),
                           "pdw_max": float(tab.pdw_raw.max()),
                           "dd_max": float(tab.dd_raw.max())}
    w.json("summary.json", report)
    return [f"{name}: PDW in [{r['pdw_min']:.4g}, {r['pdw_max']:.4g}] 1/m, "
            f"max DD {r['dd_max']:.0f}" for name, r in report.items()]


def cmd_solve(loaded, args, w):
    ctx = _need(loaded, "pair", "pair")
    lines = []
    if loaded.costate:
        v, its = solve_root(ctx, jd=loaded.costate)
        out = {"law": "p", "J_d": loaded.costate, "v_mps": v, "iterations": its,
               "residual": p_residual(ctx, v, CostateValue(loaded.costate)), "branch": INTERIOR}
    else:
        sol = solve_suboptimal(ctx)
        v = sol.v
        out = {"law": "g", "v_mps": v, "branch": sol.branch, "v_eps_mps": sol.v_eps,
               "residual": sol.residual, "iterations": sol.iterations}
    out["K"] = ss.k_coefficient(ctx, v)
    w.json("summary.json", _json_safe(out))
    lines.append(f"v = {format_speed_kmh(v)} ({out['branch']}), K = {out['K']:.4g}")
    return lines


def cmd_shoot(loaded, args, w):
    ctx = _need(loaded, "pair", "pair")
    mission = _need(loaded, "mission", "shooting")
    runs, lines, failed = [], [], []
    for n, sc in enumerate(loaded.shooting):
        res = shooting.shoot(ctx, mission, sc)
        entry = {"v_estimate_mps": sc.v_estimate, "J_d0": res.J_d0,
                 "iterations": res.iterations, "terminal_error": res.terminal_error,
                 "converged": res.converged, "monotone": res.monotone}
        if res.converged:
            gap = shooting.suboptimality_gap(ctx, mission, sc, result=res)
            entry["max_rel_gap"] = gap.max_rel_gap
            tr = res.trajectory
            w.csv(f"shooting_{n}.csv", ["t_s", "x_m", "d_m", "Q_C", "J_d", "v_opt_mps",
                                       "v_sub_mps"],
                  zip(tr.t, tr.x, tr.d, tr.Q, tr.J_d, gap.v_opt, gap.v_sub))
        else:
            failed.append(sc.v_estimate)
        w.csv(f"history_{n}.csv", ["iteration", "J_d0", "terminal_costate"], res.history)
        runs.append(entry)
        lines.append(f"v_est {format_speed_kmh(sc.v_estimate)}: J_d0 = {res.J_d0:.6g} C/m "
                     f"after {res.iterations} iterations"
                     + ("" if res.converged else " (not converged)"))
    w.json("summary.json", _json_safe({"runs": runs}))
    if failed:
        raise NonConvergenceError(
            "shooting did not converge for v_estimate "
            + ", ".join(format_speed_kmh(v) for v in failed)
            + f" within max_iterations={loaded.shooting[0].max_iterations}")
    return lines


COMMANDS = {"simulate": cmd_simulate, "stability": cmd_stability, "sweep": cmd_sweep,
            "metrics": cmd_metrics, "solve": cmd_solve, "shoot": cmd_shoot}


# ---------------------------------------------------------------- plumbing

def build_parser():
    ap = argparse.ArgumentParser(prog="aeplatoon", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {"simulate": "run a platoon scenario and write its trace",
             "stability": "disturbed vs baseline run, K certificate and attenuation",
             "sweep": "follower airspeed and K over wind or complexity scale",
             "metrics": "PDW and dynamic density on prescribed speed profiles",
             "solve": "solve the follower airspeed for a single pair",
             "shoot": "costate shooting for a single pair"}
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("config", help="path to a .cfg document")
        p.add_argument("--out", default="out", help="output root directory (default: out)")
        p.add_argument("--dt", type=float, help="override the time step [s]")
        p.add_argument("--strict", action="store_true",
                       help="reject documents that rely on defaulted d_dot_max or v_stall")
        if name == "sweep":
            p.add_argument("--param", choices=("vw", "alpha"), default="vw")
            p.add_argument("--range", dest="range_", metavar="A:B:N",
                           help="swept values: wind in km/h or complexity scale in C m/s")
    return ap


def _overrides(args, text):
    ov = {}
    if args.dt is not None:
        if not args.dt > 0:
            raise ConfigError(f"--dt must be > 0 (got {args.dt!r})")
        ov[("run", "dt", "time")] = args.dt
        for sec in ("shooting", "metrics"):
            if f"[{sec}]" in text:
                ov[(sec, "dt", "time")] = args.dt
    if getattr(args, "range_", None):
        cfgmod.parse_range(args.range_)
        key = "wind_range_kmh" if args.param == "vw" else "alpha_range"
        ov[("sweep", key, None)] = args.range_
    return ov


def run(args):
    path = Path(args.config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from exc
    loaded = cfgmod.ingest(text, strict=args.strict, source=str(path),
                           overrides=_overrides(args, text))
    w = RunWriter(args.out, f"{args.command}_{path.stem}")
    w.text("config_snapshot.cfg", loaded.snapshot_text())
    start = time.perf_counter()
    manifest = {"subcommand": args.command, "config": str(path),
                "output_dir": str(w.target), "version": __version__,
                "warnings": loaded.warnings}
    try:
        lines = COMMANDS[args.command](loaded, args, w)
    except NonConvergenceError as exc:
        # partial shooting results are still worth keeping
        manifest["error"] = str(exc)
        manifest["wall_clock_s"] = time.perf_counter() - start
        w.json("manifest.json", manifest)
        w.commit()
        raise
    manifest["wall_clock_s"] = time.perf_counter() - start
    w.json("manifest.json", manifest)
    w.commit()
    return lines, w.target


def dispatch(argv=None):
    """Run one command line; return the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which would read as infeasibility
        if exc.code in (0, None):
            raise
        return EXIT_CONFIG
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        lines, target = run(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SeparationViolationError as exc:
        print(f"safety violation: {exc}", file=sys.stderr)
        return EXIT_SAFETY
    except (InfeasibleEnvelopeError, NonTerminationError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NonConvergenceError as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    for line in lines:
        print(line)
    print(f"outputs: {target}")
    return EXIT_OK


def main():
    sys.exit(dispatch())
