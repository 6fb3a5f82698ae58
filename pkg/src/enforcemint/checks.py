"""Bounded exhaustive checkers for the guarantees of synthesized monitors.

Each checker explores a monitored controller (all sensor reads offered,
channels open) breadth first up to a depth and returns the violations it
found, each as a witness trace.  An empty list means the guarantee holds
within the bound.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .automata import EditAutomaton
from .calculus import validate
from .nfa import PropNfa, to_nfa
from .runtime import Monitored, Network, mstep, net_steps
from .trace import END, Action

Witness = Tuple[Action, ...]


def _key(m: Monitored):
    return (m.state, m.proc)


def soundness(m: Monitored, e, depth: int = 12) -> List[Witness]:
    """Traces whose tau-free projection leaves the prefixes of ``e``."""
    nfa = to_nfa(e)
    start = (m, nfa.live_set(nfa.start()))
    seen = {(_key(m), start[1])}
    queue = deque([(m, start[1], ())])
    bad = []
    while queue:
        cur, live, t = queue.popleft()
        if len(t) >= depth:
            continue
        for mv in mstep(cur):
            nxt = live if mv.action.is_tau else nfa.live_set(nfa.step(live, mv.action))
            t2 = t + (mv.action,)
            if not nxt:
                bad.append(t2)
                continue
            k = (_key(mv.target), nxt)
            if k not in seen:
                seen.add(k)
                queue.append((mv.target, nxt, t2))
    return bad


@dataclass
class TransparencyResult:
    misses: List[Witness]
    noncompliant: List[Witness]   # controller traces outside the property

    @property
    def ok(self) -> bool:
        return not self.misses


def transparency(m: Monitored, e, depth: int = 12) -> TransparencyResult:
    """Every controller trace that is a prefix of ``e`` must be reproduced
    by the monitored controller action for action, without tau."""
    nfa = to_nfa(e)
    a = m.automaton
    root = (m.proc, frozenset([m.state]), nfa.live_set(nfa.start()))
    seen = {root}
    queue = deque([(root, ())])
    misses, outside = [], []
    while queue:
        (J, states, live), t = queue.popleft()
        if len(t) >= depth:
            continue
        for alpha, J2 in m.defs.steps(J):
            t2 = t + (alpha,)
            live2 = nfa.live_set(nfa.step(live, alpha))
            if not live2:
                outside.append(t2)
                continue
            nxt = set()
            for s in states:
                mv = a.moves(s)
                if mv.go:
                    nxt.add(s)
                else:
                    nxt.update(a.resolve(x) for x in mv.allow.get(alpha, ()))
            if not nxt:
                misses.append(t2)
                continue
            node = (J2, frozenset(nxt), live2)
            if node not in seen:
                seen.add(node)
                queue.append((node, t2))
    return TransparencyResult(misses, outside)


def _explore(m: Monitored, depth: int):
    """Reachable monitored states with a shortest witness each."""
    seen = {_key(m): ()}
    queue = deque([(m, ())])
    while queue:
        cur, t = queue.popleft()
        moves = mstep(cur)
        yield cur, t, moves
        if len(t) >= depth:
            continue
        for mv in moves:
            k = _key(mv.target)
            if k not in seen:
                seen[k] = t + (mv.action,)
                queue.append((mv.target, seen[k]))


def deadlocks(m: Monitored, depth: int = 15) -> List[Witness]:
    return [t for _, t, moves in _explore(m, depth) if not moves]


def expansion_depth(a: EditAutomaton) -> Optional[int]:
    """Longest run of insertions the monitor can make in place of one
    ``end``; None if insertions can go on forever."""
    memo: Dict[str, int] = {}
    onstack = set()

    def longest(s: str) -> Optional[int]:
        s = a.resolve(s)
        if s in memo:
            return memo[s]
        if s in onstack:
            return None
        mv = a.moves(s)
        if mv.go or mv.allow.get(END):
            memo[s] = 0
            return 0
        onstack.add(s)
        best = 0
        for trig, _, t in mv.inserts:
            if trig != END:
                continue
            sub = longest(t)
            if sub is None:
                onstack.discard(s)
                return None
            best = max(best, sub + 1)
        onstack.discard(s)
        memo[s] = best
        return best

    depths = [longest(s) for s in a.reachable()]
    if any(d is None for d in depths):
        return None
    return max(depths, default=0)


def divergence(m: Monitored, depth: int = 15, bound: Optional[int] = None) -> List[Witness]:
    """Paths along which ``bound`` steps pass without an ``end``.  The
    default bound is the controller's ``maxa`` plus the monitor's
    expansion depth."""
    if bound is None:
        exp = expansion_depth(m.automaton)
        if exp is None:
            return [()]
        bound = validate(m.proc, m.defs, raw=True).maxa + exp
    seen = {(_key(m), 0)}
    queue = deque([(m, 0, ())])
    bad = []
    while queue:
        cur, run, t = queue.popleft()
        if len(t) >= depth:
            continue
        for mv in mstep(cur):
            r = 0 if mv.action == END else run + 1
            t2 = t + (mv.action,)
            if r >= bound:
                bad.append(t2)
                continue
            k = (_key(mv.target), r)
            if k not in seen:
                seen.add(k)
                queue.append((mv.target, r, t2))
    return bad


def determinism(m: Monitored, depth: int = 12) -> List[Witness]:
    """States offering one visible action towards two automaton states."""
    bad = []
    for _, t, moves in _explore(m, depth):
        targets: Dict[Action, set] = {}
        for mv in moves:
            if not mv.action.is_tau:
                targets.setdefault(mv.action, set()).add(mv.target.state)
        bad += [t + (a,) for a, ss in targets.items() if len(ss) > 1]
    return bad


def language_agreement(a: EditAutomaton, nfa: PropNfa, depth: int = 12) -> List[Witness]:
    """Traces of length <= depth on which the Allow-language of ``a`` and
    the prefix language of ``nfa`` disagree."""
    root = (a.resolve(a.initial), nfa.live_set(nfa.start()))
    seen = {root}
    queue = deque([(root, ())])
    bad = []
    while queue:
        (s, live), t = queue.popleft()
        if len(t) >= depth:
            continue
        mv = a.moves(s)
        allowed = set(a.alphabet) if mv.go else set(mv.allow)
        wanted = nfa.next_actions(live)
        for x in sorted(allowed ^ wanted):
            bad.append(t + (x,))
        for x in sorted(allowed & wanted):
            targets = [s] if mv.go else mv.allow[x]
            live2 = nfa.live_set(nfa.step(live, x))
            for s2 in targets:
                node = (a.resolve(s2), live2)
                if node not in seen:
                    seen.add(node)
                    queue.append((node, t + (x,)))
    return bad


@dataclass
class NetworkResult:
    unsound: List[Tuple[int, Witness]]
    deadlocks: List[Witness]
    timesync_with_tau: List[Witness]

    @property
    def ok(self) -> bool:
        return not (self.unsound or self.deadlocks or self.timesync_with_tau)


def network(n: Network, props: Iterable, depth: int = 12, closed: bool = False) -> NetworkResult:
    """Per-node soundness, deadlock freedom and maximal progress of a
    network of monitored controllers."""
    nfas = [to_nfa(e) for e in props]
    live0 = tuple(x.live_set(x.start()) for x in nfas)
    seen = {(n.nodes, live0)}
    queue = deque([(n, live0, ())])
    res = NetworkResult([], [], [])
    while queue:
        cur, lives, t = queue.popleft()
        moves = net_steps(cur, closed=closed)
        if not moves:
            res.deadlocks.append(t)
        if len(t) >= depth:
            continue
        has_tau = any(mv.action.is_tau for mv in moves)
        for mv in moves:
            t2 = t + (mv.action,)
            if mv.rule == "timesync" and has_tau:
                res.timesync_with_tau.append(t2)
            nxt = list(lives)
            broken = False
            for i, part in mv.parts:
                if part.action.is_tau:
                    continue
                nxt[i] = nfas[i].live_set(nfas[i].step(nxt[i], part.action))
                if not nxt[i]:
                    res.unsound.append((i, t2))
                    broken = True
            if broken:
                continue
            k = (mv.target.nodes, tuple(nxt))
            if k not in seen:
                seen.add(k)
                queue.append((mv.target, tuple(nxt), t2))
    return res
