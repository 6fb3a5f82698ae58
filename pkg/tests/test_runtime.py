import random

import pytest
from hypothesis import given, strategies as st

from enforcemint import checks, gen
from enforcemint.automata import Allow, EditAutomaton, Insert, Suppress
from enforcemint.calculus import parse_controller, validate
from enforcemint.parser import parse_property
from enforcemint.props import events_of
from enforcemint.runtime import Monitored, Network, SchedulerPolicy, mstep, net_steps, run
from enforcemint.synthesis import synthesize
from enforcemint.trace import END, TAU, TICK, act, parse_trace, recv, send, sens


def T(text):
    return parse_trace(text)


def node(ctrl, prop=None, alphabet=None, raw=False):
    P, d = parse_controller(ctrl, raw=raw)
    A = set(validate(P, d, raw=True).alphabet) | set(alphabet or ())
    if prop is None:
        a = EditAutomaton.go(A)
    else:
        e = parse_property(prop)
        a = synthesize(e, A | set(events_of(e)))
    return Monitored.start(a, P, d)


def after_tick(m):
    (mv,) = [mv for mv in mstep(m) if mv.action == TICK]
    return mv.target


# -- monitored controller ------------------------------------------------------------------

def test_go_allows_controller_action():
    m = after_tick(node("X = tick . sens{ l1 -> end . X } else end . X"))
    moves = [mv for mv in mstep(m) if mv.action == sens("l1")]
    assert len(moves) == 1 and moves[0].target.automaton.is_go(moves[0].target.state)


def test_suppress_emits_tau_and_advances_both():
    P, d = parse_controller("X = tick . act a:on1 . end . X")
    a = EditAutomaton({"s": ((Suppress(act("on1")), "t"),), "t": ((Allow(END), "s"),)}, "s", {act("on1"), END, TICK})
    m = Monitored(a, "s", d["X"].cont, d)
    (mv,) = mstep(m)
    assert (mv.action, mv.rule, mv.target.state) == (TAU, "suppress", "t")
    assert mv.target.proc != m.proc


def test_insert_keeps_controller():
    P, d = parse_controller("X = tick . end . X")
    a = EditAutomaton({"s": ((Insert(END, act("close_v")), "t"),), "t": ((Allow(END), "s"),)}, "s",
                      {act("close_v"), END, TICK})
    m = Monitored(a, "s", d["X"].cont, d)
    (mv,) = mstep(m)
    assert (mv.action, mv.rule, mv.inserted_for) == (act("close_v"), "insert", END)
    assert mv.target.proc == m.proc and mv.target.state == "t"


def test_insert_disabled_when_allowed():
    P, d = parse_controller("X = tick . end . X")
    a = EditAutomaton({"s": ((Allow(END), "s"), (Insert(END, act("v")), "s"))}, "s", {act("v"), END, TICK})
    assert [mv.rule for mv in mstep(Monitored(a, "s", d["X"].cont, d))] == ["allow"]


# -- network ------------------------------------------------------------------------------------

def _sender_receiver():
    snd = after_tick(node("X = tick . out c!close . end . X else end . X"))
    rcv = after_tick(node("Y = tick . in{ c?close -> end . Y } else end . Y"))
    return Network((snd, rcv))


def test_channel_sync_blocks_tick():
    moves = net_steps(_sender_receiver())
    assert any(mv.rule == "chnsync" and mv.action == TAU for mv in moves)
    assert not any(mv.action == TICK for mv in moves)


def test_global_tick_when_quiet():
    n = Network((node("X = tick . end . X"), node("Y = tick . end . Y")))
    moves = net_steps(n)
    assert [mv.action for mv in moves] == [TICK]
    assert moves[0].target.clock == 1


def test_par_offers_node_action():
    n = Network((after_tick(node("X = tick . sens{ l1 -> end . X } else end . X")), node("Y = tick . end . Y")))
    assert any(mv.action == sens("l1") and mv.parts[0][0] == 0 for mv in net_steps(n))


def test_closed_network_hides_unmatched_channels():
    n = Network((after_tick(node("X = tick . out c!close . end . X else end . X")),))
    assert send("close") in {mv.action for mv in net_steps(n)}
    assert send("close") not in {mv.action for mv in net_steps(n, closed=True)}


# -- runs ------------------------------------------------------------------------------------------

def test_run_go_single_node():
    log = run(Network((node("X = tick . end . X"),)), horizon=2)
    assert log.global_trace() == T("tick end tick end")
    assert log.project(0) == log.global_trace()


def test_run_synthesized_is_transparent():
    log = run(Network((node("X = tick . end . X", "(tick . end)*"),)), horizon=3)
    assert log.global_trace() == T("tick end tick end tick end")
    assert not log.stuck


def test_run_suppress_then_insert():
    m = node("X = tick . act a:on3 . end . X", "(tick . a:off3 . end)*", alphabet={act("off3")})
    log = run(Network((m,)), horizon=1)
    assert log.global_trace() == T("tick tau a:off3 end")
    assert [r.rule for r in log.records] == ["timesync", "suppress", "insert", "allow"]


def test_project_attributes_sync_to_both_nodes():
    n = Network((node("X = tick . out c!close . end . X else end . X"),
                 node("Y = tick . in{ c?close -> end . Y } else end . Y")))
    log = run(n, horizon=1, closed=True)
    assert log.project(0) == T("tick c!close end")
    assert log.project(1) == T("tick c?close end")
    assert T("tau") in [(a,) for a in log.global_trace()]
    with pytest.raises(IndexError):
        log.project(2)


def test_project_empty_log():
    log = run(Network((node("X = tick . end . X"),)), horizon=1)
    log.records.clear()
    assert log.project(0) == ()


def test_csv_columns():
    log = run(Network((node("X = tick . end . X"),)), horizon=1)
    assert log.to_csv().splitlines()[0] == "step,clock_tick,node,rule,action,inserted_for"


def test_stuck_is_reported():
    m = node("X = tick . end . X", "(s:x . end)*", alphabet={sens("x")})
    log = run(Network((m,)), horizon=3)
    assert log.stuck and log.ticks == 0


def test_bad_policy_and_horizon():
    with pytest.raises(ValueError):
        SchedulerPolicy(tie_break="coin")
    with pytest.raises(ValueError):
        run(Network((node("X = tick . end . X"),)), horizon=0)


# -- invariants ----------------------------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _random_network(seed):
    r = random.Random(seed)
    nodes, props = [], []
    for _ in range(r.randint(2, 3)):
        A = (TICK, END, sens("a"), act("x"), send("c"), recv("c"))
        P, d = gen.single_cycle_controller(r, A, budget=r.randint(2, 4))
        e = gen.cycle_property(P, d)
        if r.random() < 0.5:
            P, d = gen.mutate(r, P, d, A, rounds=1)
        alphabet = set(A) | set(validate(P, d, raw=True).alphabet)
        nodes.append(Monitored.start(synthesize(e, alphabet), P, d))
        props.append(e)
    return Network(tuple(nodes)), props


@given(seeds)
def test_network_soundness_and_maximal_progress(seed):
    n, props = _random_network(seed)
    res = checks.network(n, props, depth=9)
    assert res.unsound == []
    assert res.timesync_with_tau == []


@given(seeds, st.sampled_from(["first_declared", "seeded_random"]))
def test_runs_are_deterministic(seed, rule):
    n, _ = _random_network(seed)
    a = run(n, SchedulerPolicy(seed, rule), horizon=4)
    b = run(n, SchedulerPolicy(seed, rule), horizon=4)
    assert a.to_csv() == b.to_csv()
    assert a.timesync_with_tau() == 0
