import random

import pytest
from hypothesis import given, strategies as st

from enforcemint import gen
from enforcemint.calculus import (
    ActOut, ControllerError, ControllerSyntaxError, Defs, EndThen, PhaseError, SensTimeout, TickPrefix, Var,
    ctrl_steps, format_controller, parse_controller, validate,
)
from enforcemint.swat.plcs import build_plc
from enforcemint.trace import END, TICK, act, parse_trace, recv, send, sens


def test_sleep_step():
    W = EndThen("X")
    assert ctrl_steps(TickPrefix(W), Defs({"X": TickPrefix(W)})) == ((TICK, W),)


def test_sensing_offers_branches_and_timeout():
    S1, S2, D = EndThen("X"), ActOut(act("on"), EndThen("X")), EndThen("X")
    J = SensTimeout(((sens("l"), S1), (sens("h"), S2)), D)
    assert set(ctrl_steps(J, Defs({"X": TickPrefix(J)}))) == {(sens("l"), S1), (sens("h"), S2), (TICK, D)}


def test_end_step():
    assert ctrl_steps(EndThen("X"), Defs({"X": TickPrefix(EndThen("X"))})) == ((END, Var("X")),)


def test_channel_steps():
    P, d = parse_controller("X = tick . in{ c?open -> end . X } else out c!close . end . X else end . X")
    J = d["X"].cont
    assert [a for a, _ in ctrl_steps(J, d)] == [recv("open"), TICK]
    (_, after_timeout), = [s for s in ctrl_steps(J, d) if s[0] == TICK]
    assert [a for a, _ in ctrl_steps(after_timeout, d)] == [send("close"), TICK]


def test_unresolved_variable():
    with pytest.raises(ControllerError):
        ctrl_steps(Var("Y"), Defs({}))


def test_validate_examples():
    r = validate(*parse_controller("X = tick . end . X"))
    assert r.time_guarded and r.maxa == 2
    assert not validate(Var("X"), Defs({"X": EndThen("X")})).time_guarded
    P3 = validate(*build_plc(3))
    assert set(parse_trace("s:l3 s:m3 s:h3 a:on3 a:off3 tick end")) <= P3.alphabet


def test_parse_examples():
    P, d = parse_controller("X = tick . end . X")
    assert P == Var("X")
    P, d = parse_controller("X = tick . sens{ l3 -> act a:off3 . end . X } else end . X")
    J = d["X"].cont
    assert isinstance(J, SensTimeout) and len(J.branches) == 1
    with pytest.raises(PhaseError):
        parse_controller("X = tick . act a:on . sens{ l -> end . X } else end . X")


def test_syntax_errors_have_locations():
    with pytest.raises(ControllerSyntaxError) as info:
        parse_controller("X = tick .\n  sens{ l -> end . X }")
    assert "2:" in str(info.value)
    with pytest.raises(ControllerError):
        parse_controller("X = end . X")


def test_duplicate_sensor_guards_rejected():
    with pytest.raises(ControllerError):
        parse_controller("X = tick . sens{ l -> end . X, l -> act a:on . end . X } else end . X")


def test_raw_mode_lifts_phases_only():
    text = "X = tick . act a:on . sens{ l -> end . X } else end . X"
    P, d = parse_controller(text, raw=True)
    assert validate(P, d, raw=True).time_guarded


def test_print_parse_round_trip():
    P, d = build_plc(1)
    again = parse_controller(format_controller(d))
    assert again[1].equations == d.equations


# -- invariants ------------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _controller(seed):
    r = random.Random(seed)
    A = gen.alphabet(r, 5)
    return gen.controller(r, A, equations=r.randint(1, 3), sleep=r.randint(1, 3), budget=r.randint(2, 5))


def _reachable(P, d, limit=2000):
    seen, todo = {P}, [P]
    while todo and len(seen) < limit:
        J = todo.pop()
        for _, J2 in ctrl_steps(J, d):
            if J2 not in seen:
                seen.add(J2)
                todo.append(J2)
    return seen


@given(seeds)
def test_controllers_never_deadlock(seed):
    P, d = _controller(seed)
    for J in _reachable(P, d):
        assert ctrl_steps(J, d)


@given(seeds)
def test_cycles_end_within_maxa(seed):
    # From the start of any cycle, every path reaches end within maxa
    # actions (ticks included), so no run is zeno.
    P, d = _controller(seed)
    report = validate(P, d)
    for X in map(Var, report.equations):
        layer = {X}
        for _ in range(report.maxa):
            layer = {J2 for J in layer for a, J2 in ctrl_steps(J, d) if a != END}
        assert not layer
