"""Compile properties into edit automata.

``synthesize_local(p, X)`` builds the automaton for ``p`` whose successful
completion continues at state ``X``:

* ``eps`` is ``X`` itself;
* ``p1 ; p2`` is ``p1`` continued by the entry of ``p2``;
* a union ``sum pi_i . p_i`` becomes a single state that allows each
  guard, inserts each guard other than ``end`` in place of a premature
  ``end``, and suppresses every other action except ``tick`` and ``end``;
* ``p1 & p2`` is the product of the two factor automata, where reaching
  ``X`` counts as finishing only if both factors get there together.

A star ``(p)*`` ties ``X`` back to the entry of ``p``; a global ``e1 & e2``
is the full product of the two automata.
"""

from __future__ import annotations

import itertools
from typing import Dict, Iterable, Optional

from .automata import (
    Allow,
    EditAutomaton,
    insert_arms,
    Ref,
    Suppress,
    product_arms,
    product_graph,
    reachable_state_count,
    suppress_all_body,
    suppress_targets,
)
from .props import Eps, GInter, Inter, Prop, Seq, Star, Union, deep, events_of, inter_count, is_deterministic, prop_size, well_formed
from .trace import Action


class SynthesisError(ValueError):
    pass


class IllFormedProperty(SynthesisError):
    pass


class NondeterministicProperty(SynthesisError):
    pass


class AlphabetMismatch(SynthesisError):
    pass


class SynthContext:
    """Alphabet plus the growing state graph shared by one synthesis run."""

    def __init__(self, alphabet: Iterable[Action]):
        self.alphabet = frozenset(a for a in alphabet if not a.is_tau)
        self.states: Dict[str, object] = {}
        self._ids = itertools.count()
        self._memo: Dict[tuple, str] = {}
        self._products: Dict[tuple, str] = {}
        self._sink: Optional[str] = None
        self._suppressible = suppress_targets(self.alphabet)

    def fresh(self, prefix: str = "q") -> str:
        sid = f"{prefix}{next(self._ids)}"
        self.states[sid] = None
        return sid

    def sink(self) -> str:
        if self._sink is None:
            self._sink = self.fresh()
            self.states[self._sink] = suppress_all_body(self._sink, self.alphabet)
        return self._sink

    def resolve(self, s: str) -> str:
        while isinstance(self.states.get(s), Ref):
            s = self.states[s].target
        return s

    def allows(self, s):
        s = self.resolve(s)
        return [(lab.action, self.resolve(t)) for lab, t in self.states[s] if lab.op == "allow"]

    def times(self, s1: str, s2: str, terminal: Optional[str]) -> str:
        key = (s1, s2, terminal)
        hit = self._products.get(key)
        if hit is not None:
            return hit
        root = (s1, s2)
        succ, live = product_graph(self.allows, self.allows, root, terminal)
        exit_pair = (terminal, terminal)
        if not live or live[0] != root:
            sid = self.sink()
        elif root == exit_pair:
            sid = terminal
        else:
            ids = {p: (terminal if p == exit_pair else self.fresh()) for p in live}
            for p in live:
                if p != exit_pair:
                    self.states[ids[p]] = product_arms(succ[p], ids, ids[p], self.alphabet)
            sid = ids[root]
        self._products[key] = sid
        return sid


def synthesize_local(p, continuation: str, ctx: SynthContext) -> str:
    key = (p, continuation)
    hit = ctx._memo.get(key)
    if hit is not None:
        return hit
    if isinstance(p, Eps):
        sid = continuation
    elif isinstance(p, Seq):
        sid = synthesize_local(p.p1, synthesize_local(p.p2, continuation, ctx), ctx)
    elif isinstance(p, Union):
        sid = ctx.fresh()
        targets = [synthesize_local(body, continuation, ctx) for _, body in p.branches]
        guards = [ev for ev, _ in p.branches]
        arms = [(Allow(ev), t) for ev, t in zip(guards, targets)]
        arms += insert_arms(zip(guards, targets))
        taken = set(guards)
        arms += [(Suppress(a), sid) for a in ctx._suppressible if a not in taken]
        ctx.states[sid] = tuple(arms)
    elif isinstance(p, Inter):
        t1 = synthesize_local(p.p1, continuation, ctx)
        t2 = synthesize_local(p.p2, continuation, ctx)
        sid = ctx.times(t1, t2, continuation)
    else:
        raise TypeError(f"not a local property: {p!r}")
    ctx._memo[key] = sid
    return sid


def _global(e, ctx: SynthContext) -> str:
    if isinstance(e, Star):
        x = ctx.fresh("x")
        entry = synthesize_local(e.body, x, ctx)
        if ctx.resolve(entry) == x:
            raise IllFormedProperty("star body accepts the empty word")
        ctx.states[x] = Ref(entry)
        return entry
    if isinstance(e, GInter):
        return ctx.times(_global(e.e1, ctx), _global(e.e2, ctx), None)
    raise TypeError(f"not a global property: {e!r}")


def check_property(e: Prop, alphabet: Iterable[Action]) -> None:
    if not well_formed(e):
        raise IllFormedProperty("property is not well formed: some branch can finish without end")
    if not is_deterministic(e):
        raise NondeterministicProperty("property is not deterministic: a union repeats a guard event")
    extra = events_of(e) - frozenset(alphabet)
    if extra:
        names = ", ".join(sorted(str(a) for a in extra))
        raise AlphabetMismatch(f"events outside the alphabet: {names}")


@deep
def synthesize(e: Prop, alphabet: Iterable[Action] = None, ctx: SynthContext = None) -> EditAutomaton:
    if ctx is None:
        if alphabet is None:
            raise ValueError("need an alphabet or a synthesis context")
        ctx = SynthContext(alphabet)
    check_property(e, ctx.alphabet)
    root = _global(e, ctx)
    states = {s: b for s, b in ctx.states.items() if b is not None}
    return EditAutomaton(states, root, ctx.alphabet).normalized()


def derivative_bound(e: Prop) -> int:
    return prop_size(e) ** (inter_count(e) + 1)


def check_derivative_bound(e: Prop, alphabet: Iterable[Action]):
    a = synthesize(e, alphabet)
    states = reachable_state_count(a)
    bound = derivative_bound(e)
    return states, bound, states <= bound
