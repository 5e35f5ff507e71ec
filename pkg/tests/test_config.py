import logging

import pytest

from aeplatoon import config as cfgmod
from aeplatoon.aero_energy import E430
from aeplatoon.errors import ConfigError
from aeplatoon.units import format_speed_kmh, kmh_to_mps
from conftest import FIXTURES

SCEN1 = (FIXTURES / "scenario1.cfg").read_text()


def edit(text, old, new):
    assert old in text
    return text.replace(old, new)


def test_speed_round_trip():
    pc = cfgmod.ingest(SCEN1).platoon
    v = pc.leader_profile(0.0)
    assert v == pytest.approx(27.7778, abs=1e-4)
    assert format_speed_kmh(v) == "100 km/h"


def test_airframe_matches_builtin():
    a1 = cfgmod.ingest(SCEN1).platoon.aircraft[0]
    for f in ("wing_area", "weight", "cd0", "cd2", "voltage", "efficiency", "v_max",
              "initial_charge"):
        assert getattr(a1, f) == pytest.approx(getattr(E430, f), rel=1e-15)


def test_ordering_violation_names_pair():
    bad = edit(SCEN1, "x0_km = 10, 6, 4", "x0_km = 10, 4, 6")
    with pytest.raises(ConfigError, match=r"pair \(2,1\)"):
        cfgmod.ingest(bad)


def test_missing_d_dot_max_strict_and_permissive(caplog):
    text = edit(SCEN1, "d_dot_max_mps = 20\n", "")
    with pytest.raises(ConfigError) as exc:
        cfgmod.ingest(text, strict=True)
    assert any("d_dot_max" in e and "strict" in e for e in exc.value.errors)
    with caplog.at_level(logging.WARNING):
        loaded = cfgmod.ingest(text, strict=False)
    assert loaded.platoon.costs[0].d_dot_max == 20.0
    assert any("d_dot_max" in w for w in loaded.warnings)
    assert "d_dot_max" in caplog.text


def test_missing_stall_speed_defaults_in_permissive_mode():
    text = SCEN1.replace("v_stall_kmh = 90\n", "")
    with pytest.raises(ConfigError, match="v_stall"):
        cfgmod.ingest(text, strict=True)
    assert cfgmod.ingest(text).platoon.aircraft[0].v_stall == 25.0


def test_every_violation_reported():
    text = edit(SCEN1, "d_min_km = 1", "d_min_km = -1")
    text = edit(text, "cd0 = 0.035\n", "")
    text = edit(text, "air_density_kgm3 = 1.112", "air_density_kgm3 = zero")
    with pytest.raises(ConfigError) as exc:
        cfgmod.ingest(text)
    msg = " | ".join(exc.value.errors)
    for needle in ("d_min", "cd0", "air_density_kgm3"):
        assert needle in msg


def test_duplicate_unit_variants_rejected():
    text = edit(SCEN1, "wind_kmh = 0", "wind_kmh = 0\nwind_mps = 0")
    with pytest.raises(ConfigError, match="more than once"):
        cfgmod.ingest(text)


def test_unit_variants_equivalent():
    a = cfgmod.ingest(SCEN1).platoon
    b = cfgmod.ingest(SCEN1.replace("weight_kn = 4.61", "weight_n = 4610")
                      .replace("x0_km = 10, 6, 4", "x0_m = 10000, 6000, 4000")).platoon
    assert a.aircraft[0].weight == b.aircraft[0].weight
    assert a.x0 == b.x0


def test_unknown_section_and_missing_airframe():
    with pytest.raises(ConfigError, match="unknown section"):
        cfgmod.ingest(SCEN1 + "\n[bogus]\nx = 1\n")
    with pytest.raises(ConfigError, match="airframe.A3"):
        cfgmod.ingest(edit(SCEN1, "models = A1, A1, A2", "models = A1, A1, A3"))


def test_malformed_document():
    with pytest.raises(ConfigError, match="malformed"):
        cfgmod.ingest("no section header\n")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        cfgmod.load(tmp_path / "nope.cfg")


@pytest.mark.parametrize("name", sorted(p.name for p in FIXTURES.glob("*.cfg")))
def test_snapshot_reingests_identically(name):
    first = cfgmod.load(FIXTURES / name)
    second = cfgmod.ingest(first.snapshot_text(), strict=True)
    assert second.snapshot_text() == first.snapshot_text()
    for attr in ("platoon", "pair", "mission", "shooting", "metrics", "sweep"):
        assert getattr(second, attr) == getattr(first, attr)


def test_range_parsing():
    assert cfgmod.parse_range("-30:30:13")[6] == 0.0
    assert len(cfgmod.parse_range("0:1:5")) == 5
    for bad in ("1:2", "a:b:c", "0:1:1"):
        with pytest.raises(ConfigError):
            cfgmod.parse_range(bad)


def test_overrides_reflected_in_snapshot():
    loaded = cfgmod.ingest(SCEN1, overrides={("run", "dt", "time"): 0.5})
    assert loaded.platoon.dt == 0.5
    assert "dt_s = 0.5" in loaded.snapshot_text()


def test_metric_profiles_in_minutes():
    m = cfgmod.load(FIXTURES / "metrics_study.cfg").metrics
    s1 = m.scenarios[0]
    assert s1.predecessor.times[1] == 600.0
    assert s1.predecessor.speeds[1] == pytest.approx(kmh_to_mps(650))
