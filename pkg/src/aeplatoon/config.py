"""Configuration documents: INI-style ``.cfg`` files with unit-suffixed keys.

Quantities carry their unit in the key name (``wind_kmh``, ``wind_mps``,
``d_min_km``, ``weight_kn`` ...); ingestion converts everything to SI. The
resolved configuration can be written back as a snapshot using SI keys only,
which re-ingests to bit-identical values.

Sections::

    [run]            dt_s
    [env]            air_density_kgm3, wind_*
    [airframe.NAME]  wing_area_m2, weight_*, cd0, cd2, voltage_v, efficiency,
                     v_stall_*, v_max_*, initial_charge_c
    [cost]           defaults for every follower; [cost.I] overrides follower I
    [platoon]        models, x0_*, xf_*, leader_speed_* | leader_profile_<t>_<v>
    [disturbance]    amplitude_*, start_*, duration_*
    [pair]           model, predecessor_speed_*, separation_*, costate_cpm
    [shooting]       x0_*, xf_*, tol_cpm, step_size, max_iterations, v_estimates_*
    [metrics]        study settings; [metrics.NAME] one scenario each
    [sweep]          model, predecessor_speed_*, separations_*, complexity_scales,
                     cost_indices, wind_range_kmh = a:b:n, alpha_range = a:b:n
"""
import configparser
import io
import logging
from dataclasses import dataclass, field

from .aero_energy import DEFAULT_V_STALL, AircraftParams, Environment
from .errors import ConfigError, DomainError
from .platoon_sim import PlatoonConfig, SpeedProfile
from .shooting import Mission, ShootingConfig
from .speed_solver import CostConfig, PairContext
from .string_stability import DisturbanceSpec

log = logging.getLogger(__name__)

DEFAULT_D_DOT_MAX = 20.0  # m/s; never stated numerically in the source model

UNITS = {
    "speed": {"mps": 1.0, "kmh": 1 / 3.6},
    "length": {"m": 1.0, "km": 1000.0},
    "force": {"n": 1.0, "kn": 1000.0},
    "time": {"s": 1.0, "min": 60.0, "h": 3600.0},
}
SI = {"speed": "mps", "length": "m", "force": "n", "time": "s"}


def _fmt(x):
    return repr(float(x)) if not isinstance(x, str) else x


class _Reader:
    """Reads typed values, records SI values for the snapshot, collects errors."""

    def __init__(self, parser, strict):
        self.p = parser
        self.strict = strict
        self.errors = []
        self.warnings = []
        self.snapshot = {}

    def _record(self, section, key, value):
        self.snapshot.setdefault(section, {})[key] = value

    def has(self, section):
        return self.p.has_section(section)

    def _raw(self, section, key):
        if not self.p.has_section(section) or not self.p.has_option(section, key):
            return None
        return self.p.get(section, key).strip()

    def _float(self, section, key, text):
        try:
            return float(text)
        except ValueError:
            self.errors.append(f"[{section}] {key}: not a number ({text!r})")
            return None

    def _find_unit(self, section, base, dim):
        found = [(u, s) for u, s in UNITS[dim].items()
                 if self._raw(section, f"{base}_{u}") is not None]
        if len(found) > 1:
            keys = ", ".join(f"{base}_{u}" for u, _ in found)
            self.errors.append(f"[{section}] {base}: given more than once ({keys})")
        return found[0] if found else (None, None)

    def _missing(self, section, base, default, soft, unit_hint):
        if default is None:
            self.errors.append(f"[{section}] {base}: required field missing{unit_hint}")
            return None
        if soft and self.strict:
            self.errors.append(f"[{section}] {base}: required in strict mode{unit_hint} "
                               f"(permissive default would be {default!r} SI)")
            return None
        if soft:
            msg = f"[{section}] {base}: not given, using default {default!r} (SI)"
            log.warning(msg)
            self.warnings.append(msg)
        return default

    def quantity(self, section, base, dim, default=None, soft=False):
        unit, scale = self._find_unit(section, base, dim)
        hint = f" (use {base}_<{'|'.join(UNITS[dim])}>)"
        if unit is None:
            val = self._missing(section, base, default, soft, hint)
        else:
            val = self._float(section, f"{base}_{unit}", self._raw(section, f"{base}_{unit}"))
            val = None if val is None else val * scale
        if val is not None:
            self._record(section, f"{base}_{SI[dim]}", _fmt(val))
        return val

    def number(self, section, key, default=None, soft=False):
        text = self._raw(section, key)
        if text is None:
            val = self._missing(section, key, default, soft, "")
        else:
            val = self._float(section, key, text)
        if val is not None:
            self._record(section, key, _fmt(val))
        return val

    def text(self, section, key, default=None):
        val = self._raw(section, key)
        if val is None:
            val = self._missing(section, key, default, False, "")
        if val is not None:
            self._record(section, key, val)
        return val

    def _split(self, text):
        return [s.strip() for s in text.split(",") if s.strip()]

    def quantity_list(self, section, base, dim, default=None):
        unit, scale = self._find_unit(section, base, dim)
        if unit is None:
            if default is None:
                self.errors.append(f"[{section}] {base}: required list missing "
                                   f"(use {base}_<{'|'.join(UNITS[dim])}>)")
                return None
            vals = list(default)
        else:
            key = f"{base}_{unit}"
            vals = [self._float(section, key, s) for s in self._split(self._raw(section, key))]
            if any(v is None for v in vals):
                return None
            vals = [v * scale for v in vals]
        self._record(section, f"{base}_{SI[dim]}", ", ".join(_fmt(v) for v in vals))
        return vals

    def number_list(self, section, key, default=None):
        text = self._raw(section, key)
        if text is None:
            if default is None:
                self.errors.append(f"[{section}] {key}: required list missing")
                return None
            vals = list(default)
        else:
            vals = [self._float(section, key, s) for s in self._split(text)]
            if any(v is None for v in vals):
                return None
        self._record(section, key, ", ".join(_fmt(v) for v in vals))
        return vals

    def text_list(self, section, key):
        text = self._raw(section, key)
        if text is None:
            self.errors.append(f"[{section}] {key}: required list missing")
            return None
        vals = self._split(text)
        self._record(section, key, ", ".join(vals))
        return vals

    def profile(self, section, base):
        """Piecewise profile ``<base>_<timeunit>_<speedunit> = t:v, t:v, ...``."""
        hits = []
        for tu, ts in UNITS["time"].items():
            for vu, vs in UNITS["speed"].items():
                key = f"{base}_{tu}_{vu}"
                if self._raw(section, key) is not None:
                    hits.append((key, ts, vs))
        if not hits:
            return None
        if len(hits) > 1:
            self.errors.append(f"[{section}] {base}: given more than once")
        key, ts, vs = hits[0]
        times, speeds = [], []
        for item in self._split(self._raw(section, key)):
            parts = item.split(":")
            if len(parts) != 2:
                self.errors.append(f"[{section}] {key}: entry {item!r} is not time:speed")
                return None
            t, v = self._float(section, key, parts[0]), self._float(section, key, parts[1])
            if t is None or v is None:
                return None
            times.append(t * ts)
            speeds.append(v * vs)
        self._record(section, f"{base}_s_mps",
                     ", ".join(f"{_fmt(t)}:{_fmt(v)}" for t, v in zip(times, speeds)))
        try:
            return SpeedProfile(tuple(times), tuple(speeds))
        except DomainError as exc:
            self.errors.append(f"[{section}] {key}: {exc}")
            return None


@dataclass
class MetricScenario:
    name: str
    predecessor: SpeedProfile
    follower: SpeedProfile


@dataclass
class MetricStudy:
    scenarios: list
    initial_separation: float
    d_dot_max: float
    window: float
    speed_change_threshold: float
    unsafe_distance: float
    duration: float
    dt: float


@dataclass
class WindSweep:
    follower: AircraftParams
    env: Environment
    base_cost: CostConfig
    predecessor_speed: float
    separations: list
    complexity_scales: list
    cost_indices: list
    winds: list
    alpha_values: list


@dataclass
class LoadedConfig:
    """Everything a subcommand may need, resolved to SI objects."""

    source: str
    dt: float
    env: Environment = None
    airframes: dict = field(default_factory=dict)
    platoon: PlatoonConfig = None
    pair: PairContext = None
    costate: float = 0.0
    mission: Mission = None
    shooting: list = field(default_factory=list)   # ShootingConfig per v estimate
    metrics: MetricStudy = None
    sweep: WindSweep = None
    snapshot: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def snapshot_text(self):
        return dump_snapshot(self.snapshot)


def dump_snapshot(snapshot):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section, items in snapshot.items():
        cp[section] = items
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _build(r, where, cls, *args, **kw):
    try:
        return cls(*args, **kw)
    except DomainError as exc:
        r.errors.append(f"{where} {exc}")
        return None


def _airframe(r, name):
    sec = f"airframe.{name}"
    if not r.has(sec):
        r.errors.append(f"[{sec}]: airframe {name!r} is referenced but not defined")
        return None
    vals = dict(
        wing_area=r.number(sec, "wing_area_m2"),
        weight=r.quantity(sec, "weight", "force"),
        cd0=r.number(sec, "cd0"),
        cd2=r.number(sec, "cd2"),
        voltage=r.number(sec, "voltage_v"),
        efficiency=r.number(sec, "efficiency"),
        v_stall=r.quantity(sec, "v_stall", "speed", default=DEFAULT_V_STALL, soft=True),
        v_max=r.quantity(sec, "v_max", "speed"),
        initial_charge=r.number(sec, "initial_charge_c"),
    )
    if any(v is None for v in vals.values()):
        return None
    return _build(r, f"[{sec}]", AircraftParams, name=name, **vals)


def _cost(r, follower_index=None):
    """Follower cost settings; ``[cost.I]`` keys override the shared ``[cost]``."""
    override = f"cost.{follower_index}" if follower_index is not None else None

    def sec_for(base):
        if override and r.has(override) and any(
                k == base or k.startswith(base + "_") for k in r.p.options(override)):
            return override
        return "cost"

    ci = r.number(sec_for("cost_index"), "cost_index")
    alpha = r.number(sec_for("complexity_scale"), "complexity_scale")
    ddmax = r.quantity(sec_for("d_dot_max"), "d_dot_max", "speed",
                       default=DEFAULT_D_DOT_MAX, soft=True)
    dmin = r.quantity(sec_for("d_min"), "d_min", "length")
    tol = r.quantity(sec_for("separation_tolerance"), "separation_tolerance", "length",
                     default=0.1)
    if None in (ci, alpha, ddmax, dmin, tol):
        return None
    where = f"[{override}]" if override else "[cost]"
    return _build(r, where, CostConfig, ci, alpha, ddmax, dmin, tol)


def _env(r):
    rho = r.number("env", "air_density_kgm3")
    vw = r.quantity("env", "wind", "speed", default=0.0)
    if rho is None or vw is None:
        return None
    if not rho > 0:
        r.errors.append(f"[env] air_density_kgm3 must be > 0 (got {rho!r})")
        return None
    return Environment(rho, vw)


def _platoon(r, env, dt):
    sec = "platoon"
    models = r.text_list(sec, "models")
    x0 = r.quantity_list(sec, "x0", "length")
    xf = r.quantity_list(sec, "xf", "length")
    profile = r.profile(sec, "leader_profile")
    if profile is None:
        v0 = r.quantity(sec, "leader_speed", "speed")
        if v0 is not None:
            if v0 > 0:
                profile = SpeedProfile.constant(v0)
            else:
                r.errors.append(f"[{sec}] leader_speed must be > 0 (got {v0!r})")
    if models is None or x0 is None or xf is None or profile is None:
        return None
    n = len(models)
    if len(x0) != n or len(xf) != n:
        r.errors.append(f"[{sec}] x0/xf need {n} entries (one per model), "
                        f"got {len(x0)} and {len(xf)}")
        return None
    for i in range(1, n):
        if not x0[i] < x0[i - 1]:
            r.errors.append(f"[{sec}] x0: pair ({i},{i - 1}) is out of order: follower "
                            f"{i} at {x0[i]:.6g} m is not behind aircraft {i - 1} "
                            f"at {x0[i - 1]:.6g} m")
    for i in range(n):
        if not xf[i] > x0[i]:
            r.errors.append(f"[{sec}] xf: aircraft {i} final position must exceed x0")
    frames = [_airframe(r, m) for m in models]
    costs = [_cost(r, i) for i in range(1, n)]
    dist = None
    if r.has("disturbance"):
        amp = r.quantity("disturbance", "amplitude", "speed")
        t0 = r.quantity("disturbance", "start", "time")
        dur = r.quantity("disturbance", "duration", "time")
        if None not in (amp, t0, dur):
            try:
                dist = DisturbanceSpec(amp, t0, dur)
            except DomainError as exc:
                r.errors.append(f"[disturbance] {exc}")
    if r.errors or env is None:
        return None
    return PlatoonConfig(tuple(frames), tuple(costs), env, tuple(x0), tuple(xf), profile,
                         dt, dist)


def _pair(r, env):
    sec = "pair"
    model = r.text(sec, "model")
    vp = r.quantity(sec, "predecessor_speed", "speed")
    d = r.quantity(sec, "separation", "length")
    jd = r.number(sec, "costate_cpm", default=0.0)
    frame = _airframe(r, model) if model else None
    cost = _cost(r)
    if None in (frame, cost, vp, d, env):
        return None, 0.0
    if not vp > 0:
        r.errors.append(f"[{sec}] predecessor_speed must be > 0")
    if not d > 0:
        r.errors.append(f"[{sec}] separation must be > 0")
    if r.errors:
        return None, 0.0
    return PairContext(frame, env, cost, vp, d), jd


def _shooting(r, dt):
    sec = "shooting"
    x0 = r.quantity(sec, "x0", "length", default=0.0)
    xf = r.quantity(sec, "xf", "length")
    tol = r.number(sec, "tol_cpm", default=1e-6)
    beta = r.number(sec, "step_size", default=0.5)
    kmax = r.number(sec, "max_iterations", default=30)
    sdt = r.quantity(sec, "dt", "time", default=dt)
    ests = r.quantity_list(sec, "v_estimates", "speed")
    if None in (x0, xf, tol, beta, kmax, sdt, ests):
        return None, []
    cfgs = []
    try:
        mission = Mission(x0, xf)
        for v in ests:
            cfgs.append(ShootingConfig(tol, beta, int(kmax), v, sdt))
        if kmax != int(kmax):
            raise DomainError(f"max_iterations must be an integer (got {kmax!r})")
    except DomainError as exc:
        r.errors.append(f"[{sec}] {exc}")
        return None, []
    return mission, cfgs


def _metrics(r):
    sec = "metrics"
    vals = dict(
        initial_separation=r.quantity(sec, "initial_separation", "length"),
        d_dot_max=r.quantity(sec, "d_dot_max", "speed", default=DEFAULT_D_DOT_MAX, soft=True),
        window=r.quantity(sec, "window", "time", default=120.0),
        speed_change_threshold=r.quantity(sec, "speed_change_threshold", "speed", default=1.0),
        unsafe_distance=r.quantity(sec, "unsafe_distance", "length", default=1000.0),
        duration=r.quantity(sec, "duration", "time"),
        dt=r.quantity(sec, "dt", "time", default=1.0),
    )
    scenarios = []
    for name in r.p.sections():
        if not name.startswith("metrics."):
            continue
        pred = r.profile(name, "predecessor_profile")
        foll = r.profile(name, "follower_profile")
        if pred is None or foll is None:
            r.errors.append(f"[{name}] needs predecessor_profile_* and follower_profile_*")
            continue
        scenarios.append(MetricScenario(name.split(".", 1)[1], pred, foll))
    if not scenarios:
        r.errors.append("[metrics] no [metrics.NAME] scenario sections")
    if any(v is None for v in vals.values()):
        return None
    for k in ("initial_separation", "d_dot_max", "window", "duration", "dt"):
        if not vals[k] > 0:
            r.errors.append(f"[{sec}] {k} must be > 0 (got {vals[k]!r})")
    if r.errors:
        return None
    return MetricStudy(scenarios=scenarios, **vals)


def parse_range(text):
    """``"a:b:n"`` -> n evenly spaced values from a to b inclusive."""
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError as exc:
        raise ConfigError(f"range {text!r} must look like a:b:n") from exc
    if n < 2:
        raise ConfigError(f"range {text!r} needs n >= 2")
    return [a + (b - a) * k / (n - 1) for k in range(n)]


def _sweep(r, env):
    sec = "sweep"
    model = r.text(sec, "model")
    frame = _airframe(r, model) if model else None
    cost = _cost(r)
    vp = r.quantity(sec, "predecessor_speed", "speed")
    seps = r.quantity_list(sec, "separations", "length")
    alphas = r.number_list(sec, "complexity_scales")
    cis = r.number_list(sec, "cost_indices")
    winds = alpha_values = None
    try:
        winds = [w / 3.6 for w in parse_range(r.text(sec, "wind_range_kmh",
                                                     default="-30:30:13"))]
    except ConfigError as exc:
        r.errors.append(f"[{sec}] wind_range_kmh: {exc}")
    try:
        alpha_values = parse_range(r.text(sec, "alpha_range", default="5e3:2e4:7"))
    except ConfigError as exc:
        r.errors.append(f"[{sec}] alpha_range: {exc}")
    if None in (frame, cost, vp, seps, alphas, cis, winds, alpha_values, env):
        return None
    return WindSweep(frame, env, cost, vp, seps, alphas, cis, winds, alpha_values)


def _apply_overrides(parser, overrides):
    for (section, base, dim), value in overrides.items():
        if not parser.has_section(section):
            parser.add_section(section)
        if dim is None:
            parser.set(section, base, str(value))
            continue
        for unit in UNITS[dim]:
            parser.remove_option(section, f"{base}_{unit}")
        parser.set(section, f"{base}_{SI[dim]}", _fmt(value))


def ingest(text, strict=False, source="<string>", overrides=None):
    """Parse and validate a configuration document; raise ConfigError listing every problem.

    ``overrides`` maps ``(section, base, dimension)`` to an SI value (or, with
    dimension ``None``, to raw text) and replaces whatever the document says.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: malformed document: {exc}") from exc
    _apply_overrides(parser, overrides or {})
    r = _Reader(parser, strict)
    dt = r.quantity("run", "dt", "time", default=1.0)
    if dt is not None and not dt > 0:
        r.errors.append(f"[run] dt must be > 0 (got {dt!r})")
    out = LoadedConfig(source=source, dt=dt)
    out.env = _env(r) if r.has("env") else None
    if r.has("platoon"):
        out.platoon = _platoon(r, out.env, dt)
    if r.has("pair"):
        out.pair, out.costate = _pair(r, out.env)
    if r.has("shooting"):
        if not r.has("pair"):
            r.errors.append("[shooting] requires a [pair] section")
        out.mission, out.shooting = _shooting(r, dt)
    if r.has("metrics"):
        out.metrics = _metrics(r)
    if r.has("sweep"):
        out.sweep = _sweep(r, out.env)
    if (r.has("platoon") or r.has("pair") or r.has("sweep")) and not r.has("env"):
        r.errors.append("[env]: section missing")
    known = {"run", "env", "cost", "platoon", "disturbance", "pair", "shooting", "metrics",
             "sweep"}
    for s in parser.sections():
        head = s.split(".", 1)[0]
        if head not in known and head != "airframe":
            r.errors.append(f"[{s}]: unknown section")
    if r.errors:
        raise ConfigError([f"{source}: {e}" for e in r.errors])
    out.snapshot = r.snapshot
    out.warnings = r.warnings
    return out


def load(path, strict=False, overrides=None):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from exc
    return ingest(text, strict=strict, source=str(path), overrides=overrides)
