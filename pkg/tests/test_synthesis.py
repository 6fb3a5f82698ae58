import random
import time

import pytest
from hypothesis import given, strategies as st

from enforcemint import checks, gen
from enforcemint.automata import Allow, Insert, Suppress, cross_product, reachable_state_count
from enforcemint.calculus import parse_controller
from enforcemint.nfa import nonempty_intersections, to_nfa
from enforcemint.parser import parse_property
from enforcemint.props import END_EPS, EPS, GInter, Seq, Star, pre
from enforcemint.runtime import Monitored
from enforcemint.swat.properties import build_property, property_text
from enforcemint.synthesis import (
    AlphabetMismatch, IllFormedProperty, NondeterministicProperty, SynthContext, check_derivative_bound,
    derivative_bound, synthesize, synthesize_local,
)
from enforcemint.trace import END, TICK, act, parse_trace, sens

X, Y = sens("x"), act("y")


def body(a, s):
    s = a.resolve(s)
    return {(lab, a.resolve(t)) for lab, t in a.arms(s)}


def test_end_star_hand_expansion():
    a = synthesize(Star(END_EPS), {X, END, TICK})
    z = a.resolve(a.initial)
    assert body(a, z) == {(Allow(END), z), (Suppress(X), z)}


def test_single_event_cycle_hand_expansion():
    a = synthesize(Star(pre(X, END_EPS)), {X, Y, END, TICK})
    z = a.resolve(a.initial)
    (z2,) = {t for lab, t in body(a, z) if lab == Allow(X)}
    assert body(a, z) == {(Allow(X), z2), (Insert(END, X), z2), (Suppress(Y), z)}
    assert body(a, z2) == {(Allow(END), z), (Suppress(X), z2), (Suppress(Y), z2)}


def test_global_inter_is_cross_product():
    P = {X, Y, END, TICK}
    e1, e2 = Star(pre(X, END_EPS)), parse_property("(s:x . end + tick . end)*")
    a = synthesize(GInter(e1, e2), P)
    b = cross_product(synthesize(e1, P), synthesize(e2, P), P)
    assert a.allowed_words(8) == b.allowed_words(8)
    assert reachable_state_count(a) == reachable_state_count(b)


def test_local_cases():
    ctx = SynthContext({X, Y, END, TICK})
    ctx.states["k"] = ((Allow(END), "k"),)
    assert synthesize_local(EPS, "k", ctx) == "k"
    entry2 = synthesize_local(pre(Y, END_EPS), "k", ctx)
    entry = synthesize_local(Seq(pre(X, END_EPS), pre(Y, END_EPS)), "k", ctx)
    (mid,) = [t for lab, t in ctx.states[entry] if lab == Allow(X)]
    (after,) = [t for lab, t in ctx.states[mid] if lab == Allow(END)]
    assert after == entry2
    u = synthesize_local(pre(END, EPS), "k", ctx)
    assert not [lab for lab, _ in ctx.states[u] if lab.op == "insert"]


def test_errors():
    P = {X, END, TICK}
    with pytest.raises(IllFormedProperty):
        synthesize(Star(pre(X)), P)
    with pytest.raises(NondeterministicProperty):
        synthesize(parse_property("(s:x . end + s:x . tick . end)*"), P)
    with pytest.raises(AlphabetMismatch):
        synthesize(parse_property("(a:z . end)*"), P)


def test_derivative_bound_examples():
    P = {X, END, TICK}
    assert check_derivative_bound(Star(END_EPS), P)[1:] == (2, True)
    e = GInter(Star(END_EPS), Star(END_EPS))
    states, bound, ok = check_derivative_bound(e, P)
    assert (bound, ok) == (25, True)
    assert derivative_bound(e) == 25


def test_swat_e1_within_bound():
    e = build_property(property_text("e1"), 1)
    from enforcemint.swat.plcs import plc_alphabet
    states, bound, ok = check_derivative_bound(e, plc_alphabet(1))
    assert ok


def test_empty_local_intersection_breaks_soundness():
    # The union guard is allowed into a suppress-all sink: the property only
    # accepts the empty trace, yet the monitor lets the first tick through.
    e = parse_property("(tick . s:a . (a:x . end & a:y . end))*")
    assert not nonempty_intersections(e)
    a = synthesize(e, parse_trace("tick end s:a a:x a:y"))
    P, d = parse_controller("X = tick . sens{ a -> act a:x . end . X } else end . X")
    assert checks.soundness(Monitored.start(a, P, d), e, 6) == [(TICK,)]


# -- invariants -------------------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _synth(seed, max_inter=1):
    r = random.Random(seed)
    A = gen.alphabet(r, 5)
    e = gen.usable_property(r, A, depth=3, max_inter=max_inter)
    return e, synthesize(e, A)


@given(seeds)
def test_label_determinism(seed):
    e, a = _synth(seed)
    for s in a.reachable():
        labels = [lab for lab, _ in a.arms(s)]
        assert len(labels) == len(set(labels))


@given(seeds)
def test_never_suppresses_tick_or_end(seed):
    e, a = _synth(seed)
    for s in a.reachable():
        assert a.enabled(s)
        assert Suppress(TICK) not in a.enabled(s)
        assert Suppress(END) not in a.enabled(s)


@given(seeds)
def test_allowed_words_are_property_prefixes(seed):
    e, a = _synth(seed)
    nfa = to_nfa(e)
    assert checks.language_agreement(a, nfa, 10) == []


def test_synthesis_time_tracks_bound():
    # Wall time is linear in the states actually built, which stay below
    # the size^(k+1) bound.
    per_state = []
    A = (TICK, END, sens("a"))
    for depth in range(4):
        e = gen.nested_family(depth)
        t0 = time.perf_counter()
        states = reachable_state_count(synthesize(e, A))
        per_state.append((time.perf_counter() - t0) / states)
        assert states <= derivative_bound(e)
    assert max(per_state) <= 50 * min(per_state) + 1e-3
