import random

import pytest
from hypothesis import given, strategies as st

from enforcemint import gen
from enforcemint.automata import (
    GO, Allow, AutomatonError, EditAutomaton, Insert, Ref, Suppress, cross_product, export, import_json,
    is_suppress_all, reachable_state_count, suppress_all_body,
)
from enforcemint.checks import language_agreement
from enforcemint.nfa import intersect, to_nfa
from enforcemint.parser import parse_property
from enforcemint.synthesis import synthesize
from enforcemint.trace import END, TAU, TICK, act, sens

X, Y = sens("x"), sens("y")
P = (TICK, END, X, Y)


def allowed(a, n):
    return a.allowed_words(n)


# -- single steps ----------------------------------------------------------------

def test_go_enables_every_action():
    a = EditAutomaton.go({X, END})
    assert set(a.enabled("go")) == {Allow(X), Allow(END)}
    assert a.step("go", Allow(END)) == "go"


def test_sum_and_reference():
    a = EditAutomaton({"s": ((Suppress(act("y")), "z"),), "z": GO, "r": Ref("z")}, "s", {act("y"), END})
    assert a.enabled("s") == [Suppress(act("y"))]
    assert set(a.enabled("r")) == set(a.enabled("z")) == {Allow(act("y")), Allow(END)}


def test_step_follows_the_arm():
    a = EditAutomaton({"s": ((Allow(X), "z"),), "z": ((Allow(END), "s"),)}, "s", P)
    assert a.step("s", Allow(X)) == "z"
    with pytest.raises(AutomatonError):
        a.step("s", Allow(act("missing")))


def test_dangling_reference_rejected():
    with pytest.raises(AutomatonError):
        EditAutomaton({"s": ((Allow(X), "nowhere"),)}, "s", P)


def test_labels_are_observable():
    with pytest.raises(ValueError):
        Allow(TAU)


def test_suppress_all_detection():
    a = EditAutomaton({"d": suppress_all_body("d", P), "g": GO, "m": ((Allow(X), "d"), (Suppress(Y), "m"))}, "d", P)
    assert is_suppress_all(a, "d", P)
    assert not is_suppress_all(a, "g", P)
    assert not is_suppress_all(a, "m", P)


# -- cross product ------------------------------------------------------------------------

def test_product_of_identical_end_stars():
    e = parse_property("(end)*")
    a = synthesize(e, P)
    prod = cross_product(a, a, P)
    assert language_agreement(prod, to_nfa(e), 6) == []


def test_product_of_disjoint_cycles_is_pure_suppression():
    a1 = synthesize(parse_property("(s:x . end)*"), P)
    a2 = synthesize(parse_property("(s:y . end)*"), P)
    prod = cross_product(a1, a2, P)
    root = prod.resolve(prod.initial)
    assert is_suppress_all(prod, root, P)
    assert not any(lab.op == "insert" for lab, _ in prod.arms(root))


def test_product_with_go_keeps_language():
    a1 = synthesize(parse_property("(s:x . end + tick . s:y . end)*"), P)
    prod = cross_product(a1, EditAutomaton.go(P), P)
    assert allowed(prod, 8) == allowed(a1, 8)


def test_state_counts():
    assert reachable_state_count(EditAutomaton.go(P)) == 1
    assert reachable_state_count(synthesize(parse_property("(end)*"), P)) <= 2


# -- serialization ---------------------------------------------------------------------------

def test_export_go_json():
    import json
    doc = json.loads(export(EditAutomaton.go(P)))
    assert list(doc["states"].values()) == [{"kind": "go"}]


def test_export_dot_nodes():
    a = EditAutomaton({"s": ((Allow(X), "z"),), "z": ((Allow(END), "s"), (Insert(END, X), "s"))}, "s", P)
    dot = export(a, "dot").decode()
    assert dot.count("shape=") == 2
    assert 'label="end>s:x"' in dot


def test_export_is_deterministic_and_sorted():
    a = synthesize(parse_property("(s:x . end + s:y . end)*"), P)
    assert export(a) == export(a)
    import json
    for st_ in json.loads(export(a))["states"].values():
        ops = [arm["label"]["op"] for arm in st_["arms"]]
        assert ops == sorted(ops, key=["allow", "suppress", "insert"].index)


def test_json_round_trip():
    a = synthesize(parse_property("(s:x . end)* & (tick . end + s:x . end)*"), P)
    assert import_json(export(a)).structurally_equal(a.normalized())


def test_malformed_import():
    with pytest.raises(AutomatonError):
        import_json('{"states": {}}')


# -- invariants ----------------------------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


def _pair(seed):
    r = random.Random(seed)
    A = gen.alphabet(r, 5)
    e1 = gen.usable_property(r, A, depth=2, max_inter=0)
    e2 = gen.usable_property(r, A, depth=2, max_inter=0)
    return A, e1, e2


@given(seeds)
def test_product_language_is_intersection(seed):
    A, e1, e2 = _pair(seed)
    prod = cross_product(synthesize(e1, A), synthesize(e2, A), A)
    assert language_agreement(prod, intersect(to_nfa(e1), to_nfa(e2)), 8) == []


@given(seeds)
def test_product_commutes_on_language(seed):
    A, e1, e2 = _pair(seed)
    a1, a2 = synthesize(e1, A), synthesize(e2, A)
    assert allowed(cross_product(a1, a2, A), 7) == allowed(cross_product(a2, a1, A), 7)


@given(seeds)
def test_product_associates_on_language(seed):
    A, e1, e2 = _pair(seed)
    e3 = gen.usable_property(random.Random(seed + 1), A, depth=2, max_inter=0)
    a1, a2, a3 = (synthesize(e, A) for e in (e1, e2, e3))
    left = cross_product(cross_product(a1, a2, A), a3, A)
    right = cross_product(a1, cross_product(a2, a3, A), A)
    assert allowed(left, 6) == allowed(right, 6)


@given(seeds)
def test_product_never_suppresses_tick_or_end_and_never_blocks(seed):
    A, e1, e2 = _pair(seed)
    a1, a2 = synthesize(e1, A), synthesize(e2, A)
    prod = cross_product(a1, a2, A)
    for s in prod.reachable():
        labels = prod.enabled(s)
        assert labels
        assert Suppress(TICK) not in labels and Suppress(END) not in labels
    assert reachable_state_count(prod) <= reachable_state_count(a1) * reachable_state_count(a2)
