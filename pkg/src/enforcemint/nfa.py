"""Independent automaton oracle for the trace semantics of properties.

Built by the textbook structural construction (fragments glued with
epsilon edges, product for intersection, Kleene loop for star) followed
by epsilon elimination.  Nothing here shares code with synthesis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Tuple

from .props import Eps, GInter, Inter, LocalProp, Prop, Seq, Star, Union
from .trace import Action, Kind


@dataclass(frozen=True)
class PropNfa:
    n: int
    initial: int
    accepting: FrozenSet[int]
    delta: Tuple[Dict[Action, FrozenSet[int]], ...] = field(repr=False)
    live: FrozenSet[int] = field(repr=False, default=frozenset())

    @property
    def states(self):
        return range(self.n)

    @property
    def edges(self):
        return {(q, a, r) for q in self.states for a, ts in self.delta[q].items() for r in ts}

    def start(self) -> FrozenSet[int]:
        return frozenset((self.initial,))

    def step(self, current, a: Action) -> FrozenSet[int]:
        out = set()
        for q in current:
            out.update(self.delta[q].get(a, ()))
        return frozenset(out)

    def run(self, t) -> FrozenSet[int]:
        cur = self.start()
        for a in t:
            cur = self.step(cur, a)
            if not cur:
                break
        return cur

    def accepts_set(self, current) -> bool:
        return not self.accepting.isdisjoint(current)

    def live_set(self, current) -> FrozenSet[int]:
        return frozenset(current) & self.live

    def next_actions(self, current) -> set:
        """Actions leading from ``current`` to at least one live state."""
        out = set()
        for q in current:
            for a, ts in self.delta[q].items():
                if not self.live.isdisjoint(ts):
                    out.add(a)
        return out

    def is_empty(self) -> bool:
        return self.initial not in self.live

    def words(self, max_len: int, prefixes: bool = False) -> Iterator[tuple]:
        """Enumerate accepted words (or live prefixes) up to ``max_len``."""
        layer = [((), self.start())]
        for depth in range(max_len + 1):
            nxt = []
            for word, cur in layer:
                if (prefixes and self.live_set(cur)) or (not prefixes and self.accepts_set(cur)):
                    yield word
                if depth == max_len:
                    continue
                for a in sorted(self.next_actions(cur)):
                    nxt.append((word + (a,), self.live_set(self.step(cur, a))))
            layer = nxt


class _Builder:
    def __init__(self):
        self.eps: List[List[int]] = []
        self.trans: List[List[Tuple[Action, int]]] = []

    def new(self) -> int:
        self.eps.append([])
        self.trans.append([])
        return len(self.eps) - 1

    def local(self, p: LocalProp) -> Tuple[int, int]:
        if isinstance(p, Eps):
            s = self.new()
            return s, s
        if isinstance(p, Seq):
            s1, a1 = self.local(p.p1)
            s2, a2 = self.local(p.p2)
            self.eps[a1].append(s2)
            return s1, a2
        if isinstance(p, Union):
            s, acc = self.new(), self.new()
            for ev, body in p.branches:
                bs, ba = self.local(body)
                self.trans[s].append((ev, bs))
                self.eps[ba].append(acc)
            return s, acc
        if isinstance(p, Inter):
            return self.embed(_product(_build_local(p.p1), _build_local(p.p2)))
        raise TypeError(f"not a local property: {p!r}")

    def globl(self, e) -> Tuple[int, int]:
        if isinstance(e, Star):
            loop = self.new()
            s, a = self.local(e.body)
            self.eps[loop].append(s)
            self.eps[a].append(loop)
            return loop, loop
        if isinstance(e, GInter):
            return self.embed(_product(_build_global(e.e1), _build_global(e.e2)))
        raise TypeError(f"not a global property: {e!r}")

    def embed(self, nfa: PropNfa) -> Tuple[int, int]:
        base = len(self.eps)
        for _ in range(nfa.n):
            self.new()
        acc = self.new()
        for q in range(nfa.n):
            for a, ts in nfa.delta[q].items():
                self.trans[base + q].extend((a, base + t) for t in ts)
            if q in nfa.accepting:
                self.eps[base + q].append(acc)
        return base + nfa.initial, acc

    def finish(self, start: int, accept: int) -> PropNfa:
        closures = [self._closure(q) for q in range(len(self.eps))]
        # Keep only states reachable through letters (plus the start).
        index = {start: 0}
        order = [start]
        delta: List[Dict[Action, set]] = []
        accepting = set()
        i = 0
        while i < len(order):
            q = order[i]
            i += 1
            out: Dict[Action, set] = {}
            for c in closures[q]:
                for a, t in self.trans[c]:
                    if t not in index:
                        index[t] = len(order)
                        order.append(t)
                    out.setdefault(a, set()).add(index[t])
            delta.append(out)
            if accept in closures[q]:
                accepting.add(index[q])
        frozen = tuple({a: frozenset(ts) for a, ts in d.items()} for d in delta)
        return _with_live(PropNfa(len(order), 0, frozenset(accepting), frozen))

    def _closure(self, q: int) -> FrozenSet[int]:
        seen = {q}
        stack = [q]
        while stack:
            for r in self.eps[stack.pop()]:
                if r not in seen:
                    seen.add(r)
                    stack.append(r)
        return frozenset(seen)


def _with_live(nfa: PropNfa) -> PropNfa:
    rev: List[List[int]] = [[] for _ in range(nfa.n)]
    for q in range(nfa.n):
        for ts in nfa.delta[q].values():
            for t in ts:
                rev[t].append(q)
    live = set(nfa.accepting)
    stack = list(live)
    while stack:
        for r in rev[stack.pop()]:
            if r not in live:
                live.add(r)
                stack.append(r)
    return PropNfa(nfa.n, nfa.initial, nfa.accepting, nfa.delta, frozenset(live))


def _product(a: PropNfa, b: PropNfa) -> PropNfa:
    index = {(a.initial, b.initial): 0}
    order = [(a.initial, b.initial)]
    delta = []
    accepting = set()
    i = 0
    while i < len(order):
        qa, qb = order[i]
        out: Dict[Action, set] = {}
        for act, ta in a.delta[qa].items():
            tb = b.delta[qb].get(act)
            if not tb:
                continue
            for x in ta:
                for y in tb:
                    if (x, y) not in index:
                        index[(x, y)] = len(order)
                        order.append((x, y))
                    out.setdefault(act, set()).add(index[(x, y)])
        delta.append({k: frozenset(v) for k, v in out.items()})
        if qa in a.accepting and qb in b.accepting:
            accepting.add(i)
        i += 1
    return _with_live(PropNfa(len(order), 0, frozenset(accepting), tuple(delta)))


def _build_local(p: LocalProp) -> PropNfa:
    b = _Builder()
    return b.finish(*b.local(p))


def _build_global(e) -> PropNfa:
    b = _Builder()
    return b.finish(*b.globl(e))


@lru_cache(maxsize=4096)
def to_nfa(e: Prop) -> PropNfa:
    """NFA for ``[[e]]``; local properties are accepted too."""
    if isinstance(e, LocalProp):
        return _build_local(e)
    return _build_global(e)


def intersect(a: PropNfa, b: PropNfa) -> PropNfa:
    return _product(a, b)


def _check(t):
    for a in t:
        if a.kind is Kind.TAU:
            raise ValueError("trace contains tau; erase it first")


def lang_member(t, e: Prop) -> bool:
    _check(t)
    nfa = to_nfa(e)
    return nfa.accepts_set(nfa.run(t))


def lang_prefix(t, e: Prop) -> bool:
    _check(t)
    nfa = to_nfa(e)
    return bool(nfa.live_set(nfa.run(t)))


def nonempty_intersections(p: Prop) -> bool:
    """True iff every local intersection inside ``p`` denotes a nonempty set."""
    seen = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if id(q) in seen:
            continue
        seen.add(id(q))
        if isinstance(q, Inter) and to_nfa(q).is_empty():
            return False
        if isinstance(q, (Seq, Inter)):
            stack += [q.p1, q.p2]
        elif isinstance(q, Union):
            stack += [b for _, b in q.branches]
        elif isinstance(q, Star):
            stack.append(q.body)
        elif isinstance(q, GInter):
            stack += [q.e1, q.e2]
    return True


__all__ = [
    "PropNfa",
    "intersect",
    "lang_member",
    "lang_prefix",
    "nonempty_intersections",
    "to_nfa",
]
