"""Random properties and controllers for the property-based suites and the
benchmark.  Everything is driven by an explicit ``random.Random``."""

from __future__ import annotations

import random
from typing import Sequence, Tuple

from .calculus import (
    ActOut,
    ChanInTimeout,
    ChanOutTimeout,
    Defs,
    EndThen,
    Proc,
    SensTimeout,
    TickPrefix,
    Var,
    validate,
)
from .nfa import nonempty_intersections
from .props import EPS, END_EPS, GInter, Inter, LocalProp, Seq, Star, Union, pre
from .trace import END, TICK, Action, Kind, act, recv, send, sens

SMALL_ALPHABET = (TICK, END, sens("a"), act("b"), send("c"))


def alphabet(rng: random.Random, size: int = 5) -> Tuple[Action, ...]:
    """``tick``, ``end`` and up to ``size - 2`` further observable events."""
    pool = [sens("a"), sens("b"), act("x"), act("y"), send("c"), recv("d")]
    extra = rng.sample(pool, max(1, min(size - 2, len(pool))))
    return (TICK, END, *sorted(extra))


# -- properties -----------------------------------------------------------------

def local_property(rng: random.Random, events: Sequence[Action], depth: int = 3, inter: bool = True) -> LocalProp:
    """A well-formed, deterministic local property over ``events``."""
    if depth <= 0:
        ev = rng.choice(events)
        return END_EPS if ev == END else pre(ev, END_EPS)
    r = rng.random()
    if inter and r < 0.15:
        return Inter(local_property(rng, events, depth - 1, inter), local_property(rng, events, depth - 1, inter))
    if r < 0.3:
        return Seq(local_property(rng, events, depth - 1, inter), local_property(rng, events, depth - 1, inter))
    guards = rng.sample(list(events), rng.randint(1, min(3, len(events))))
    branches = []
    for g in guards:
        if g == END:
            body = EPS if rng.random() < 0.6 else local_property(rng, events, depth - 1, inter)
        else:
            body = local_property(rng, events, depth - 1, inter)
        branches.append((g, body))
    return Union(tuple(branches))


def global_property(rng: random.Random, events: Sequence[Action], depth: int = 3, max_inter: int = 1, inter: bool = True):
    e = Star(local_property(rng, events, depth, inter))
    for _ in range(rng.randint(0, max_inter)):
        e = GInter(e, Star(local_property(rng, events, depth, inter)))
    return e


def usable(e) -> bool:
    """Excludes local intersections with an empty language, whose monitors
    are not sound (see the pinned counterexample in the tests)."""
    return nonempty_intersections(e)


def usable_property(rng: random.Random, events: Sequence[Action], **kw):
    while True:
        e = global_property(rng, events, **kw)
        if usable(e):
            return e


def cycle_body(rng: random.Random, events: Sequence[Action], depth: int = 2) -> LocalProp:
    """One scan cycle: events of ``events`` (no tick, no end), closed by a
    single ``end``."""
    if depth <= 0 or not events:
        return END_EPS
    guards = rng.sample([END, *events], rng.randint(1, min(3, len(events) + 1)))
    return Union(tuple((g, EPS if g == END else cycle_body(rng, events, depth - 1)) for g in guards))


def sleeping_property(rng: random.Random, events: Sequence[Action], k: int, blocks: int = 2, depth: int = 2):
    """``(tick^k . U1 ; ... )*`` where each ``Ui`` is one tick-free cycle."""
    untimed = [a for a in events if a not in (TICK, END)]
    parts = []
    for _ in range(rng.randint(1, blocks)):
        u = cycle_body(rng, untimed, depth)
        for _ in range(k):
            u = pre(TICK, u)
        parts.append(u)
    body = parts[0]
    for p in parts[1:]:
        body = Seq(body, p)
    return Star(body)


def random_cycle(rng: random.Random, events: Sequence[Action], length: int = 3) -> Tuple[Action, ...]:
    body = [a for a in events if a != END]
    return (*rng.choices(body, k=rng.randint(0, length)), END)


def _trie(words) -> LocalProp:
    groups = {}
    for w in words:
        groups.setdefault(w[0], []).append(w[1:])
    return Union(tuple((ev, EPS if ev == END else _trie(rest)) for ev, rest in groups.items()))


def cycles_property(words: Sequence[Sequence[Action]]):
    """``(w1 + w2 + ...)*`` written as a deterministic trie; every word is
    one cycle with a single trailing ``end``."""
    return Star(_trie([tuple(w) for w in words]))


def overlapping_pair(rng: random.Random, events: Sequence[Action], pool: int = 5):
    """Two properties over random subsets of one pool of cycles, so that
    their intersection is usually more than the empty trace."""
    words = list(dict.fromkeys(random_cycle(rng, events) for _ in range(pool)))
    pick = lambda: rng.sample(words, rng.randint(1, len(words)))
    return cycles_property(pick()), cycles_property(pick())


# -- controllers ----------------------------------------------------------------

def _tail(rng, events, names, budget) -> Proc:
    acts = [a for a in events if a.kind is Kind.ACT]
    body: Proc = EndThen(rng.choice(names))
    for _ in range(rng.randint(0, min(2, budget))):
        if acts:
            body = ActOut(rng.choice(acts), body)
    return body


def _comm(rng, events, names, budget) -> Proc:
    outs = [a for a in events if a.kind is Kind.SEND]
    ins = [a for a in events if a.kind is Kind.RECV]
    r = rng.random()
    if budget > 1 and outs and r < 0.3:
        return ChanOutTimeout(rng.choice(outs), _tail(rng, events, names, budget - 1), _tail(rng, events, names, budget - 1))
    if budget > 1 and ins and r < 0.6:
        guards = rng.sample(ins, rng.randint(1, len(ins)))
        return ChanInTimeout(tuple((g, _tail(rng, events, names, budget - 1)) for g in guards),
                             _tail(rng, events, names, budget - 1))
    return _tail(rng, events, names, budget)


def _cycle(rng, events, names, budget) -> Proc:
    sensors = [a for a in events if a.kind is Kind.SENS]
    if sensors and budget > 1 and rng.random() < 0.7:
        guards = rng.sample(sensors, rng.randint(1, len(sensors)))
        return SensTimeout(tuple((g, _comm(rng, events, names, budget - 1)) for g in guards),
                           _comm(rng, events, names, budget - 1))
    return _comm(rng, events, names, budget)


def controller(rng: random.Random, events: Sequence[Action], equations: int = 2, sleep: int = 1,
               budget: int = 4) -> Tuple[Proc, Defs]:
    """A phase-respecting controller using only ``events``."""
    names = [f"X{i}" for i in range(equations)]
    eqs = {}
    for n in names:
        body = _cycle(rng, events, names, budget)
        for _ in range(sleep):
            body = TickPrefix(body)
        eqs[n] = body
    defs = Defs(eqs)
    P = Var(names[0])
    validate(P, defs)
    return P, defs


def _mutate_body(rng, J: Proc, events) -> Proc:
    """Rewrite one random spot of ``J`` the way injected code would."""
    acts = [a for a in events if a.kind is Kind.ACT]
    sensors = [a for a in events if a.kind is Kind.SENS]
    if isinstance(J, EndThen):
        if acts and rng.random() < 0.4:
            return ActOut(rng.choice(acts), J)                    # inject
        if sensors and rng.random() < 0.3:
            return SensTimeout(((rng.choice(sensors), J),), J)    # late read
        return J
    if isinstance(J, ActOut):
        r = rng.random()
        if r < 0.3:
            return J.then                                         # drop
        if r < 0.6 and acts:
            return ActOut(rng.choice(acts), J.then)               # forge
        return ActOut(J.action, _mutate_body(rng, J.then, events))
    if isinstance(J, TickPrefix):
        return TickPrefix(_mutate_body(rng, J.cont, events))
    if isinstance(J, (SensTimeout, ChanInTimeout)):
        branches = list(J.branches)
        i = rng.randrange(len(branches) + 1)
        if i == len(branches):
            return type(J)(tuple(branches), _mutate_body(rng, J.timeout, events))
        g, c = branches[i]
        branches[i] = (g, _mutate_body(rng, c, events))
        return type(J)(tuple(branches), J.timeout)
    if isinstance(J, ChanOutTimeout):
        if rng.random() < 0.5:
            return ChanOutTimeout(J.channel, _mutate_body(rng, J.then, events), J.timeout)
        return ChanOutTimeout(J.channel, J.then, _mutate_body(rng, J.timeout, events))
    return J


def mutate(rng: random.Random, P: Proc, defs: Defs, events: Sequence[Action], rounds: int = 2) -> Tuple[Proc, Defs]:
    """A compromised copy of the controller; phases may be broken."""
    eqs = dict(defs.items())
    names = sorted(eqs)
    for _ in range(rounds):
        n = rng.choice(names)
        eqs[n] = _mutate_body(rng, eqs[n], events)
    out = Defs(eqs)
    validate(P, out, raw=True)
    return P, out


def _as_property(J: Proc) -> LocalProp:
    if isinstance(J, TickPrefix):
        return pre(TICK, _as_property(J.cont))
    if isinstance(J, (SensTimeout, ChanInTimeout)):
        return Union(tuple((g, _as_property(c)) for g, c in J.branches) + ((TICK, _as_property(J.timeout)),))
    if isinstance(J, ChanOutTimeout):
        return Union(((J.channel, _as_property(J.then)), (TICK, _as_property(J.timeout))))
    if isinstance(J, ActOut):
        return pre(J.action, _as_property(J.then))
    if isinstance(J, EndThen):
        return END_EPS
    raise TypeError(f"cannot turn {J!r} into a property")


def cycle_property(P: Proc, defs: Defs):
    """``(W)*`` for a one-equation controller ``X = W``: the property whose
    language is exactly the controller's complete cycles."""
    if len(defs) != 1:
        raise ValueError("cycle_property needs a single-equation controller")
    (name, body), = defs.items()
    return Star(_as_property(body))


def single_cycle_controller(rng: random.Random, events: Sequence[Action], sleep: int = 1, budget: int = 4):
    return controller(rng, events, equations=1, sleep=sleep, budget=budget)


PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29)


def counter(n: int, events: Sequence[Action] = (TICK, sens("a"))) -> LocalProp:
    """``n`` cycles, each one event of ``events`` then ``end``."""
    cycle = Union(tuple((a, END_EPS) for a in events))
    body = cycle
    for _ in range(n - 1):
        body = Seq(body, cycle)
    return body


def flat_family(size: int):
    """Intersection-free benchmark property of ``size`` cycles."""
    return Star(counter(size))


def nested_family(depth: int):
    """``depth`` global intersections of cycle counters with coprime
    periods, so that every added factor multiplies the reachable states."""
    if depth + 1 > len(PRIMES):
        raise ValueError(f"nested family supports depth up to {len(PRIMES) - 1}")
    e = Star(counter(PRIMES[0]))
    for p in PRIMES[1:depth + 1]:
        e = GInter(e, Star(counter(p)))
    return e


def soundness_pair(rng: random.Random, size: int = 5):
    """(property, attacked controller, alphabet): the property describes the
    genuine controller, possibly tightened by a random 1-sleeping
    constraint, and the controller is then compromised."""
    A = alphabet(rng, size)
    P, defs = single_cycle_controller(rng, A, budget=rng.randint(3, 5))
    e = cycle_property(P, defs)
    r = rng.random()
    if r < 0.4:
        extra = sleeping_property(rng, A, 1, blocks=2, depth=3)
        if usable(GInter(e, extra)):
            e = GInter(e, extra)
    elif r < 0.6:
        e = sleeping_property(rng, A, 1, blocks=2, depth=3)
        P, defs = controller(rng, A, equations=2, budget=rng.randint(3, 5))
    P, defs = mutate(rng, P, defs, A, rounds=rng.randint(1, 3))
    return e, P, defs, A
