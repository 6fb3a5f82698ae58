"""Derived local properties, expanded into the core grammar.

All schemes are parameterized by a :class:`CombinatorEnv` carrying the
per-controller cycle bound ``maxa`` and the event sets PEvents and
PUEvents.  Expansions are memoized on (kind, arguments, env); the
recursive schemes (BE, BP, BME, ...) refer to the same sub-terms from many
places, so the results are DAGs whose unfolded size is exponential.

Conventions fixed here:

* Unions enumerate PEvents with ``tick`` first and the remaining events in
  sorted order.  Branch order matters at runtime because the scheduler
  inserts the first enabled ``Insert(end -> pi)`` arm (channel actions
  are moved behind the others, see ``automata.insert_arms``).
* Unions whose guard set comes out empty (a trigger set that covers all
  of PEvents, ``A`` empty in ``A^{<=k}``) are dropped from the enclosing
  union instead of producing an ill-formed empty sum.
* ``q^1_0`` of PCND and BME is taken to be ``end`` (as in caseCND), so that
  PCND with m = 1 coincides with CND and every expansion is well formed.
* Expansion size, counted as distinct nodes of the DAG, stays below
  ``EXPANSION_FACTOR * (maxa + 1) * (m + n + 1) * |PEvents|`` for every
  scheme (bodies passed to CND/PCND/CASE not included).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence, Tuple

from .props import EPS, END_EPS, Inter, LocalProp, Seq, Union, children, pre, seq
from .trace import END, TICK, Action


EXPANSION_FACTOR = 2


class CombinatorError(ValueError):
    pass


def _ordered(events: Iterable[Action]) -> Tuple[Action, ...]:
    evs = set(events)
    head = (TICK,) if TICK in evs else ()
    return head + tuple(sorted(evs - {TICK}))


@dataclass(frozen=True)
class CombinatorEnv:
    maxa: int
    pevents: Tuple[Action, ...] = field(default=())

    def __post_init__(self):
        if self.maxa < 1:
            raise CombinatorError("maxa must be at least 1")
        evs = set(self.pevents)
        if END in evs:
            raise CombinatorError("end cannot be a pure event")
        object.__setattr__(self, "pevents", _ordered(evs))

    @classmethod
    def from_alphabet(cls, alphabet: Iterable[Action], maxa: int) -> "CombinatorEnv":
        return cls(maxa, tuple(a for a in alphabet if a != END and not a.is_tau))

    @property
    def puevents(self) -> Tuple[Action, ...]:
        return tuple(a for a in self.pevents if a != TICK)

    def minus(self, *events: Action) -> Tuple[Action, ...]:
        drop = set(events)
        return tuple(a for a in self.pevents if a not in drop)


def expansion_size(p: LocalProp) -> int:
    """Number of distinct nodes of the (shared) expansion."""
    seen = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if id(q) not in seen:
            seen.add(id(q))
            stack.extend(children(q))
    return len(seen)


def size_bound(env: "CombinatorEnv", m: int, n: int = 0) -> int:
    return EXPANSION_FACTOR * (env.maxa + 1) * (m + n + 1) * len(env.pevents)


def _union(branches) -> LocalProp:
    """Union of the given branches; clauses contributed by empty event sets
    simply do not appear (see module notes)."""
    branches = tuple(branches)
    if not branches:
        raise CombinatorError("expansion produced an empty union")
    return Union(branches)


def _fan(events: Sequence[Action], cont: LocalProp):
    return [(a, cont) for a in events]


def _check_trigger(env: CombinatorEnv, *events: Action):
    for ev in events:
        if ev not in env.puevents:
            raise CombinatorError(f"{ev} is not a pure untimed event of the alphabet")


def _check_count(name: str, m: int):
    if m < 1:
        raise CombinatorError(f"{name} must be at least 1")


@lru_cache(maxsize=None)
def power_upto(events: Tuple[Action, ...], k: int) -> LocalProp:
    """``A^{<=k}``: any word of at most ``k`` events of ``A``, then ``end``."""
    events = _ordered(events)
    if END in events:
        raise CombinatorError("end cannot occur in A^{<=k}")
    if k < 0:
        raise CombinatorError("k must be non-negative")
    if k == 0 or not events:
        return END_EPS
    return _union([(END, EPS)] + _fan(events, power_upto(events, k - 1)))


def repeat(p: LocalProp, n: int) -> LocalProp:
    """``p^n`` as an n-fold sequence; ``p^0`` is eps."""
    if n <= 0:
        return EPS
    return seq(*([p] * n))


def any_cycles(env: CombinatorEnv, n: int) -> LocalProp:
    """``(PEvents^{<=maxa})^n``: n arbitrary scan cycles."""
    return repeat(power_upto(env.pevents, env.maxa), n)


def sleep(p: LocalProp, k: int) -> LocalProp:
    """Prefix ``tick^{k-1}`` for k-sleeping controllers (identity for k = 1)."""
    for _ in range(max(0, k - 1)):
        p = pre(TICK, p)
    return p


# -- conditional ------------------------------------------------------------

@lru_cache(maxsize=None)
def _case(env: CombinatorEnv, triggers: Tuple[Tuple[Action, LocalProp], ...], k: int) -> LocalProp:
    if k == 0:
        return END_EPS
    rest = env.minus(*(ev for ev, _ in triggers))
    return _union([(END, EPS)] + list(triggers) + _fan(rest, _case(env, triggers, k - 1)))


def case(triggers: Sequence[Tuple[Action, LocalProp]], env: CombinatorEnv) -> LocalProp:
    triggers = tuple(triggers)
    guards = [ev for ev, _ in triggers]
    if len(set(guards)) != len(guards):
        raise CombinatorError("CASE triggers must be distinct")
    _check_trigger(env, *guards)
    return _case(env, triggers, env.maxa)


def cond(trigger: Action, p: LocalProp, env: CombinatorEnv) -> LocalProp:
    return case(((trigger, p),), env)


@lru_cache(maxsize=None)
def _pcnd(env: CombinatorEnv, trigger: Action, p: LocalProp, h: int, k: int) -> LocalProp:
    rest = env.minus(trigger)
    if h == 1:
        if k == 0:
            return END_EPS
        return _union([(END, EPS), (trigger, p)] + _fan(rest, _pcnd(env, trigger, p, 1, k - 1)))
    again = pre(END, _pcnd(env, trigger, p, h - 1, env.maxa))
    if k == 0:
        return again
    return _union([again.branches[0], (trigger, p)] + _fan(rest, _pcnd(env, trigger, p, h, k - 1)))


def persistent(trigger: Action, p: LocalProp, m: int, env: CombinatorEnv) -> LocalProp:
    _check_trigger(env, trigger)
    _check_count("m", m)
    return _pcnd(env, trigger, p, m, env.maxa)


def conditional(kind: str, triggers, m: int, env: CombinatorEnv) -> LocalProp:
    triggers = tuple(triggers)
    if kind == "case":
        return case(triggers, env)
    if len(triggers) != 1:
        raise CombinatorError(f"{kind} takes exactly one trigger")
    (ev, p), = triggers
    if kind == "cond":
        return cond(ev, p, env)
    if kind == "persistent":
        return persistent(ev, p, m, env)
    raise CombinatorError(f"unknown conditional kind {kind!r}")


# -- bounded ------------------------------------------------------------------

@lru_cache(maxsize=None)
def _be(env: CombinatorEnv, ev: Action, h: int, k: int) -> LocalProp:
    rest = env.minus(ev)
    if h == 1:
        if k == 0:
            return pre(ev, END_EPS)
        return _union([(ev, power_upto(env.pevents, k - 1))] + _fan(rest, _be(env, ev, 1, k - 1)))
    again = (END, _be(env, ev, h - 1, env.maxa))
    if k == 0:
        return Union((again,))
    return _union([again, (ev, power_upto(env.pevents, k - 1))] + _fan(rest, _be(env, ev, h, k - 1)))


@lru_cache(maxsize=None)
def _bp(env: CombinatorEnv, ev: Action, h: int, k: int) -> LocalProp:
    rest = env.minus(ev)
    if h == 1:
        if k == 0:
            return pre(ev, END_EPS)
        return _union([(ev, power_upto(env.pevents, k - 1))] + _fan(rest, _bp(env, ev, 1, k - 1)))
    nxt = _bp(env, ev, h - 1, env.maxa)
    if k == 0:
        return pre(ev, pre(END, nxt))
    return _union([(ev, Seq(power_upto(env.pevents, k - 1), nxt))] + _fan(rest, _bp(env, ev, h, k - 1)))


@lru_cache(maxsize=None)
def _ba(env: CombinatorEnv, ev: Action, h: int) -> LocalProp:
    # q_h = (PEvents - ev)^{<=maxa} ; q_{h-1} with q_0 = eps.  The trailing
    # eps is the unit of ';' and is left out so the result is well formed.
    cycle = power_upto(env.minus(ev), env.maxa)
    return cycle if h == 1 else Seq(cycle, _ba(env, ev, h - 1))


def bounded(kind: str, ev: Action, m: int, env: CombinatorEnv) -> LocalProp:
    _check_trigger(env, ev)
    _check_count("m", m)
    if kind == "eventually":
        return _be(env, ev, m, env.maxa)
    if kind == "persistency":
        return _bp(env, ev, m, env.maxa)
    if kind == "absence":
        return _ba(env, ev, m)
    raise CombinatorError(f"unknown bounded kind {kind!r}")


def cond_bounded(kind: str, ev1: Action, ev2: Action, m: int, n: int, env: CombinatorEnv) -> LocalProp:
    if m < 1 or m > n:
        raise CombinatorError("conditional bounded properties need 1 <= m <= n")
    body = bounded(kind, ev2, n - m + 1, env)
    if m > 1:
        body = Seq(any_cycles(env, m - 1), body)
    return cond(ev1, body, env)


def duration(kind: str, ev1: Action, ev2: Action, ev3, m: int, n: int, env: CombinatorEnv) -> LocalProp:
    _check_count("m", m)
    _check_count("n", n)
    needs3 = kind in ("response", "invariance")
    if needs3 and ev3 is None:
        raise CombinatorError(f"{kind} needs a third event")
    if not needs3 and ev3 is not None:
        raise CombinatorError(f"{kind} takes two events")
    if kind == "min_dur":
        inner = bounded("persistency", ev2, n, env)
    elif kind == "max_dur":
        inner = Seq(any_cycles(env, n), bounded("absence", ev2, 1, env))
    elif kind == "response":
        inner = bounded("eventually", ev3, n, env)
    elif kind == "invariance":
        inner = bounded("persistency", ev3, n, env)
    else:
        raise CombinatorError(f"unknown duration kind {kind!r}")
    return cond(ev1, persistent(ev2, inner, m, env), env)


# -- mutual exclusion ---------------------------------------------------------

def _chains(terms):
    """Left-nested intersections of every prefix of ``terms``."""
    out = [terms[0]]
    for t in terms[1:]:
        out.append(Inter(out[-1], t))
    return out


@lru_cache(maxsize=None)
def _bme_bodies(env: CombinatorEnv, events: Tuple[Action, ...], h: int) -> Tuple[LocalProp, ...]:
    # body i = BA of every event but the i-th; prefix and suffix chains are
    # shared so the bodies take linear rather than quadratic space.
    terms = [_ba(env, e, h) for e in events]
    head = _chains(terms)
    tail = _chains(terms[::-1])[::-1]
    last = len(terms) - 1
    out = []
    for i in range(len(terms)):
        if i == 0:
            out.append(tail[1])
        elif i == last:
            out.append(head[last - 1])
        else:
            out.append(Inter(head[i - 1], tail[i + 1]))
    return tuple(out)


@lru_cache(maxsize=None)
def _bme(env: CombinatorEnv, events: Tuple[Action, ...], h: int, k: int) -> LocalProp:
    rest = env.minus(*events)
    fire = list(zip(events, _bme_bodies(env, events, h)))
    if h == 1:
        if k == 0:
            return END_EPS
        return _union([(END, EPS)] + fire + _fan(rest, _bme(env, events, 1, k - 1)))
    again = (END, _bme(env, events, h - 1, env.maxa))
    if k == 0:
        return Union((again,))
    return _union([again] + fire + _fan(rest, _bme(env, events, h, k - 1)))


def mutual_exclusion(events: Iterable[Action], m: int, env: CombinatorEnv) -> LocalProp:
    events = _ordered(events)
    if len(events) < 2:
        raise CombinatorError("mutual exclusion needs at least two events")
    _check_trigger(env, *events)
    _check_count("m", m)
    return _bme(env, events, m, env.maxa)


# Short names matching the surface syntax.

def BE(ev, m, env):
    return bounded("eventually", ev, m, env)


def BP(ev, m, env):
    return bounded("persistency", ev, m, env)


def BA(ev, m, env):
    return bounded("absence", ev, m, env)


def CND(ev, p, env):
    return cond(ev, p, env)


def PCND(ev, p, m, env):
    return persistent(ev, p, m, env)


def CBE(ev1, ev2, m, n, env):
    return cond_bounded("eventually", ev1, ev2, m, n, env)


def CBP(ev1, ev2, m, n, env):
    return cond_bounded("persistency", ev1, ev2, m, n, env)


def CBA(ev1, ev2, m, n, env):
    return cond_bounded("absence", ev1, ev2, m, n, env)


def MinD(ev1, ev2, m, n, env):
    return duration("min_dur", ev1, ev2, None, m, n, env)


def MaxD(ev1, ev2, m, n, env):
    return duration("max_dur", ev1, ev2, None, m, n, env)


def BR(ev1, ev2, ev3, m, n, env):
    return duration("response", ev1, ev2, ev3, m, n, env)


def BI(ev1, ev2, ev3, m, n, env):
    return duration("invariance", ev1, ev2, ev3, m, n, env)


def BME(events, m, env):
    return mutual_exclusion(events, m, env)


def POW(events, k, env=None):
    return power_upto(tuple(events), k)
