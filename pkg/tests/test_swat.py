import csv
import io
import math

import pytest

from enforcemint.calculus import ctrl_steps, validate, Var
from enforcemint.swat.attacks import AttackError, AttackSpec, Schedule, apply_attack, offset_mapping
from enforcemint.swat.plant import (
    PlantConfig, PlantConfigError, PlantState, Thresholds, actuate, derive_timings, offset_signal, plant_tick,
    sample_sensors, signal,
)
from enforcemint.swat.plcs import build_plc, plc_alphabet, plc_maxa
from enforcemint.swat.properties import build_property, canonical, parameters, plc_of, property_text
from enforcemint.swat.scenario import ConfigError, config_from_dict, load_config
from enforcemint.trace import END, TICK, act, parse_trace, send, sens

THR = Thresholds()


# -- plant --------------------------------------------------------------------------

def test_idle_plant():
    cfg = PlantConfig()
    s = plant_tick(PlantState(), cfg)
    assert s.t1 == 50
    assert s.t2 == pytest.approx(50 - cfg.drain2)


def test_pumps_fill_t1_against_open_valve():
    s = PlantState(pump1=True, pump2=True)
    assert plant_tick(s).t1 > s.t1
    s = PlantState(pump1=True, pump2=True, valve=True)
    assert plant_tick(s).t1 > s.t1


def test_overflow_latches():
    s = plant_tick(PlantState(t2=100, valve=True))
    assert s.overflow[1]
    s = plant_tick(plant_tick(s, PlantConfig()), PlantConfig())
    s = PlantState(t2=50, overflow=s.overflow)
    assert plant_tick(s).overflow[1]


def test_levels_clamped():
    cfg = PlantConfig()
    s = PlantState(t2=104.9, valve=True)
    for _ in range(10):
        s = plant_tick(s, cfg)
    assert s.t2 == 100 + cfg.overflow_margin
    # The pump can only draw what the tank holds.
    s = plant_tick(PlantState(t2=0, t3=0.5, pump3=True), cfg)
    assert s.t3 == pytest.approx(cfg.divert2)
    assert s.t2 == 0


def test_pump_dry():
    s = PlantState(t3=5.5, pump3=True)
    s = plant_tick(s)
    assert s.pump_dry
    assert plant_tick(PlantState(t3=50, pump_dry=True)).pump_dry


def test_actuation_waits_for_next_tick():
    s = actuate(PlantState(), act("open_v"))
    assert s.valve and s.levels == PlantState().levels
    assert plant_tick(s).t2 > plant_tick(PlantState()).t2
    assert actuate(s, sens("l1")) == s


def test_config_constraints():
    with pytest.raises(PlantConfigError):
        PlantConfig(in1=0.2, in2=0.2, out_valve=1.0)
    with pytest.raises(PlantConfigError):
        PlantConfig(drain2=-1)
    with pytest.raises(PlantConfigError):
        Thresholds(low=80, high=20)
    with pytest.raises(PlantConfigError):
        PlantConfig(back3_share=0.5).check(THR)


def test_sensor_signals():
    assert signal(10, THR) == "l"
    assert signal(50, THR) == "m"
    assert signal(THR.high, THR) == "m"
    assert signal(THR.low, THR) == "m"
    assert signal(90, THR) == "h"
    assert sample_sensors(PlantState(t1=10, t2=50, t3=90), THR) == (sens("l1"), sens("m2"), sens("h3"))


def test_derived_timings_closed_form():
    # Constant net rates: T1 -1.2, T2 -0.8, T3 -0.7 / +0.3 per cycle.
    def ticks(start, stop, rate):
        return math.floor(abs(start - stop) / rate) + 1

    t = derive_timings(PlantConfig(), THR)
    assert t.n == ticks(80, 20, 1.2)
    assert t.v == ticks(80, 20, 0.8)
    assert t.z == ticks(80, 20, 0.7)
    assert t.z_fill == ticks(20, 80, 0.3)
    assert parameters() == {"m": 25, "u": 38, "w": 43, "w_off": 100, "window": 10}


# -- PLCs -------------------------------------------------------------------------------

def walk(i, start, trace):
    P, d = build_plc(i)
    J = Var(start)
    for a in parse_trace(trace):
        (J,) = [J2 for b, J2 in ctrl_steps(J, d) if b == a]
    return J, d


def offered(J, d):
    return [a for a, _ in ctrl_steps(J, d)]


def test_plc3_high_switches_pump_on():
    J, d = walk(3, "P3off", "tick s:h3 a:on3 end")
    assert J == Var("P3on")


def test_plc2_high_requests_close():
    J, d = walk(2, "P2up", "tick s:h2")
    assert offered(J, d) == [send("close"), TICK]


def test_plc1_low_starts_pumps():
    J, d = walk(1, "P1off", "tick s:l1 a:on1 a:on2 a:close_v end")
    assert J == Var("P1on")


@pytest.mark.parametrize("i", [1, 2, 3])
def test_plcs_validate(i):
    r = validate(*build_plc(i))
    assert r.time_guarded and r.maxa == plc_maxa(i)
    assert r.alphabet <= set(plc_alphabet(i))


def test_unknown_plc():
    with pytest.raises(ValueError):
        build_plc(4)


# -- attacks ------------------------------------------------------------------------------

def test_schedule():
    s = Schedule.after(3)
    assert [s.next(k) for k in range(4)] == [1, 2, 3, 3]
    assert [s.active(k) for k in range(4)] == [False, False, False, True]
    p = Schedule.periodic(2, 2)
    assert [p.next(k) for k in range(4)] == [1, 2, 3, 0]


def test_attack_spec_checks():
    assert AttackSpec(1).cycles(500) == 500
    assert AttackSpec(3).schedule() == Schedule.periodic(70, 30)
    with pytest.raises(AttackError):
        AttackSpec(6)
    with pytest.raises(AttackError):
        AttackSpec(1, target=2)
    with pytest.raises(AttackError):
        AttackSpec(3, active=0.01)


def test_attack1_drops_close_after_silence():
    P, d = apply_attack(build_plc(1), AttackSpec(1, silent=3))
    run = "tick s:l1 a:on1 a:on2 a:close_v end"
    J = P
    for _ in range(3):
        for a in parse_trace(run):
            (J,) = [J2 for b, J2 in ctrl_steps(J, d) if b == a]
    for a in parse_trace("tick s:l1 a:on1 a:on2"):
        (J,) = [J2 for b, J2 in ctrl_steps(J, d) if b == a]
    assert offered(J, d) == [END]


def test_attack2_offset():
    low30 = Thresholds(low=30, high=80)
    assert offset_signal(50, -30, low30) == "l"
    assert offset_mapping(2, -30, low30)["m2"] == "l2"
    assert offset_mapping(2, -30, THR) == {"l2": "l2", "m2": "m2", "h2": "m2"}


def test_attack5_pump_on_at_low():
    P, d = apply_attack(build_plc(3), AttackSpec(5, silent=1))
    J = P
    for a in parse_trace("tick s:l3 a:off3 end tick s:l3"):
        (J,) = [J2 for b, J2 in ctrl_steps(J, d) if b == a]
    assert offered(J, d) == [act("on3")]


def test_attacked_programs_keep_phases():
    for k in range(1, 6):
        spec = AttackSpec(k, silent=20, standby=50, active=40)
        P, d = apply_attack(build_plc(spec.target), spec)
        assert validate(P, d).time_guarded


# -- properties -------------------------------------------------------------------------------

def test_property_names():
    assert canonical("e1p") == "e1'" and canonical("e1pp") == "e1''"
    assert plc_of("e3'") == 3
    with pytest.raises(KeyError):
        canonical("e9")


@pytest.mark.parametrize("name", ["e1", "e1'", "e1''", "e2", "e3", "e3'"])
def test_properties_fit_their_plc(name):
    e = build_property(property_text(name), plc_of(name))
    from enforcemint.props import events_of
    assert events_of(e) <= set(plc_alphabet(plc_of(name)))


# -- configs -------------------------------------------------------------------------------------

def test_bundled_configs_load():
    from importlib import resources
    files = sorted(p for p in resources.files("enforcemint").joinpath("scenarios").iterdir() if p.name.endswith(".yaml"))
    assert len(files) == 11
    for f in files:
        cfg = load_config(f)
        assert cfg.expect


@pytest.mark.parametrize("data", [
    {"plants": {}},
    {"plant": {"in1": -1}},
    {"plant": {"speed": 3}},
    {"plcs": {4: "e1"}},
    {"plcs": {1: "e3"}},
    {"plcs": {1: "nope"}},
    {"attack": 9},
    {"run": {"horizon": 0}},
    {"run": {"tie_break": "coin"}},
    {"expect": {"flooded": True}},
    {"properties": {"x": 3}},
    [],
])
def test_malformed_configs(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_custom_property_in_config():
    cfg = config_from_dict({"properties": {"quiet": "(tick . BA(a:on3, 1))*"}, "plcs": {"plc3": "quiet"}})
    assert cfg.enforce[3] == "quiet"


# -- runs ------------------------------------------------------------------------------------------

def test_baseline_stays_in_band(swat_run):
    r = swat_run()
    margin = PlantConfig().overflow_margin
    rows = list(csv.DictReader(io.StringIO(r.levels_csv)))
    assert len(rows) == 2001
    for k in ("t1", "t2", "t3"):
        vals = [float(x[k]) for x in rows]
        assert THR.low - margin <= min(vals) and max(vals) <= THR.high + margin
    assert not any(r.indicators.values())


def first_divergence(a, b):
    # A full diff of two multi-thousand-action logs is too slow to render.
    out = {}
    for plc in sorted(set(a) | set(b)):
        x, y = a.get(plc, []), b.get(plc, [])
        if x != y:
            k = next((i for i, (p, q) in enumerate(zip(x, y)) if p != q), min(len(x), len(y)))
            out[plc] = (k, x[k:k + 3], y[k:k + 3])
    return out


@pytest.mark.parametrize("name", [
    "e1", "e1'", "e2", "e3", "e3'",
    pytest.param("e1''", marks=pytest.mark.xfail(
        strict=True, reason="PLC1 writes the valve every cycle, so each genuine valve switch "
                            "puts both commands inside one mutual-exclusion window")),
])
def test_enforcement_transparent_on_baseline(swat_run, name):
    base = swat_run()
    r = swat_run(plcs={plc_of(name): name})
    assert first_divergence(r.emitted, base.emitted) == {}
    assert r.mitigations == base.mitigations


def test_attack1_examples(swat_run):
    assert swat_run(1).overflow[1]
    assert not swat_run(1, True).overflow[1]


def test_attack3_chattering_removed(swat_run):
    assert swat_run(3).chattering > 0
    assert swat_run(3, True).chattering == 0
