import pytest
from hypothesis import given, strategies as st

from enforcemint.trace import (
    END, TAU, TICK, Action, Kind, act, erase_tau, format_trace, is_prefix, parse_action, parse_trace,
    recv, send, sens,
)

actions = st.sampled_from([TICK, END, TAU, sens("l1"), act("on1"), send("close"), recv("close")])
traces = st.lists(actions, max_size=8).map(tuple)


def T(text):
    return parse_trace(text)


def test_erase_tau_examples():
    assert erase_tau(T("tau s:l1 tau end")) == T("s:l1 end")
    assert erase_tau(()) == ()
    assert erase_tau(T("tick end")) == T("tick end")


def test_is_prefix_examples():
    assert is_prefix(T("s:l1"), T("s:l1 end"))
    assert is_prefix((), T("tick a:on1"))
    assert not is_prefix(T("end"), T("s:l1 end"))


def test_text_round_trip():
    t = T("tick s:l1 c?open a:off1 c!close tau end")
    assert parse_trace(format_trace(t)) == t


def test_named_and_unnamed_kinds():
    with pytest.raises(ValueError):
        Action(Kind.TICK, "x")
    with pytest.raises(ValueError):
        Action(Kind.SENS, "")
    with pytest.raises(ValueError):
        parse_action("x:foo")


def test_send_and_receive_are_distinct():
    assert send("close") != recv("close")
    assert send("close").co() == recv("close")
    with pytest.raises(ValueError):
        TICK.co()


@given(traces)
def test_erase_tau_idempotent(t):
    once = erase_tau(t)
    assert erase_tau(once) == once
    assert TAU not in once
    assert [a for a in t if a != TAU] == list(once)


@given(traces, traces, traces)
def test_prefix_is_a_partial_order(a, b, c):
    assert is_prefix(a, a)
    assert is_prefix(a, a + b)
    if is_prefix(a, b) and is_prefix(b, a):
        assert a == b
    if is_prefix(a, b) and is_prefix(b, c):
        assert is_prefix(a, c)


@given(traces, traces, traces)
def test_concat_associative(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert len(a + b) == len(a) + len(b)
