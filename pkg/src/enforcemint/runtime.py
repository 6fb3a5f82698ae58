"""Monitored controllers, field networks and their execution."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .automata import EditAutomaton
from .calculus import Defs, Proc, ctrl_steps
from .trace import TAU, TICK, Action, Kind

log = logging.getLogger(__name__)

SensorFilter = Callable[[Action], bool]


@dataclass(frozen=True)
class Monitored:
    """A controller ``proc`` running under ``automaton`` in ``state``."""

    automaton: EditAutomaton
    state: str
    proc: Proc
    defs: Defs

    @classmethod
    def start(cls, automaton: EditAutomaton, proc: Proc, defs: Defs) -> "Monitored":
        return cls(automaton, automaton.resolve(automaton.initial), proc, defs)


@dataclass(frozen=True)
class Move:
    action: Action        # what the monitored controller emits (tau if suppressed)
    rule: str             # allow | suppress | insert | plain
    ctrl_action: Action   # the controller action the rule applied to
    target: Monitored

    @property
    def inserted_for(self) -> Optional[Action]:
        return self.ctrl_action if self.rule == "insert" else None


def mstep(m: Monitored, sensors: Optional[SensorFilter] = None) -> List[Move]:
    """Transitions of a monitored controller.

    ``sensors`` restricts which sensor reads the environment currently
    offers to the controller; inserted actions are never filtered.
    """
    a = m.automaton
    mv = a.moves(m.state)
    out: List[Move] = []
    inserted = set()
    for alpha, J2 in ctrl_steps(m.proc, m.defs):
        if sensors is not None and alpha.kind is Kind.SENS and not sensors(alpha):
            continue
        if mv.go:
            out.append(Move(alpha, "plain", alpha, Monitored(a, m.state, J2, m.defs)))
            continue
        allowed = mv.allow.get(alpha)
        if allowed:
            for t in allowed:
                out.append(Move(alpha, "allow", alpha, Monitored(a, t, J2, m.defs)))
        for t in mv.suppress.get(alpha, ()):
            out.append(Move(TAU, "suppress", alpha, Monitored(a, t, J2, m.defs)))
        if not allowed:
            for trig, beta, t in mv.inserts:
                if trig == alpha and (beta, t) not in inserted:
                    inserted.add((beta, t))
                    out.append(Move(beta, "insert", alpha, Monitored(a, t, m.proc, m.defs)))
    return out


@dataclass(frozen=True)
class Network:
    nodes: Tuple[Monitored, ...]
    clock: int = 0


@dataclass(frozen=True)
class NetMove:
    action: Action                      # tau, tick or an observable node action
    rule: str                           # allow|suppress|insert|plain|chnsync|timesync
    parts: Tuple[Tuple[int, Move], ...]  # participating nodes and their moves
    target: Network


NetFilter = Callable[[int, Action], bool]


def _node_filter(env: Optional[NetFilter], i: int) -> Optional[SensorFilter]:
    if env is None:
        return None
    return lambda a: env(i, a)


def _after(n: Network, parts, tick=False) -> Network:
    nodes = list(n.nodes)
    for i, mv in parts:
        nodes[i] = mv.target
    return Network(tuple(nodes), n.clock + (1 if tick else 0))


def net_steps(
    n: Network,
    env: Optional[NetFilter] = None,
    closed: bool = False,
    outside: Optional[NetFilter] = None,
) -> List[NetMove]:
    """Moves of the network in declaration order (ticks last).

    Channel actions of different nodes synchronize into tau.  In a
    ``closed`` network unmatched channel actions are not offered; in an
    open one ``outside`` (if given) says which of them the surrounding
    environment takes part in.  Time advances for all nodes together, and
    only when no tau is possible.
    """
    per_node = [mstep(m, _node_filter(env, i)) for i, m in enumerate(n.nodes)]
    return _assemble(n, per_node, closed, outside)


def _assemble(
    n: Network,
    per_node: Sequence[List[Move]],
    closed: bool,
    outside: Optional[NetFilter] = None,
) -> List[NetMove]:
    out: List[NetMove] = []
    ticks: List[List[Move]] = []
    has_tau = False
    for i, moves in enumerate(per_node):
        mine = []
        for mv in moves:
            a = mv.action
            if a.kind is Kind.TAU:
                has_tau = True
                out.append(NetMove(TAU, "suppress", ((i, mv),), _after(n, ((i, mv),))))
            elif a.kind is Kind.TICK:
                mine.append(mv)
            elif a.is_channel:
                partner = a.co()
                for j in range(i + 1, len(per_node)):
                    for mv2 in per_node[j]:
                        if mv2.action == partner:
                            has_tau = True
                            parts = ((i, mv), (j, mv2))
                            out.append(NetMove(TAU, "chnsync", parts, _after(n, parts)))
                if not closed and (outside is None or outside(i, a)):
                    out.append(NetMove(a, mv.rule, ((i, mv),), _after(n, ((i, mv),))))
            else:
                out.append(NetMove(a, mv.rule, ((i, mv),), _after(n, ((i, mv),))))
        ticks.append(mine)
    if not has_tau and all(ticks):
        for combo in itertools.product(*ticks):
            parts = tuple(enumerate(combo))
            out.append(NetMove(TICK, "timesync", parts, _after(n, parts, tick=True)))
    return out


def tau_enabled(n: Network, env: Optional[NetFilter] = None) -> bool:
    """Audit helper, computed directly from the node moves: is a suppression
    or a channel handshake possible anywhere?"""
    moves = [mstep(m, _node_filter(env, i)) for i, m in enumerate(n.nodes)]
    offered = []
    for i, ms in enumerate(moves):
        if any(mv.rule == "suppress" for mv in ms):
            return True
        offered.append({mv.action for mv in ms if mv.action.is_channel})
    for i, j in itertools.combinations(range(len(offered)), 2):
        if any(a.co() in offered[j] for a in offered[i]):
            return True
    return False


# -- scheduling and runs ---------------------------------------------------------------

@dataclass(frozen=True)
class SchedulerPolicy:
    seed: int = 0
    tie_break: str = "first_declared"

    def __post_init__(self):
        if self.tie_break not in ("first_declared", "seeded_random"):
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")


def choose_first_declared(per_node: Sequence[List[Move]], moves: List[NetMove], closed: bool = False) -> NetMove:
    """Deterministic priority: any tau first; otherwise each node in order
    proposes its first declared move, and the first proposal that is not a
    tick is taken.  Time passes once every node proposes tick."""
    for mv in moves:
        if mv.action.kind is Kind.TAU:
            return mv
    solo = {(mv.parts[0][0], id(mv.parts[0][1])): mv for mv in moves if mv.rule != "timesync"}
    for i, node_moves in enumerate(per_node):
        for mv in node_moves:
            if mv.action.kind is Kind.TICK:
                break
            hit = solo.get((i, id(mv)))
            if hit is not None:
                return hit
    for mv in moves:
        if mv.rule == "timesync":
            return mv
    return moves[0]


@dataclass
class StepRecord:
    step: int
    clock: int
    action: Action
    rule: str
    parts: Tuple[Tuple[int, Move], ...]
    tau_enabled: Optional[bool] = None   # audited for timesync steps


@dataclass
class TraceLog:
    node_count: int
    records: List[StepRecord] = field(default_factory=list)
    stuck: bool = False
    diverged: bool = False
    final: Optional[Network] = None

    @property
    def ticks(self) -> int:
        return sum(1 for r in self.records if r.rule == "timesync")

    def global_trace(self) -> Tuple[Action, ...]:
        return tuple(r.action for r in self.records)

    def project(self, node: int) -> Tuple[Action, ...]:
        if not 0 <= node < self.node_count:
            raise IndexError(f"no node {node}")
        return tuple(mv.action for r in self.records for i, mv in r.parts if i == node)

    def timesync_with_tau(self) -> int:
        return sum(1 for r in self.records if r.rule == "timesync" and r.tau_enabled)

    def rows(self):
        for r in self.records:
            for i, mv in r.parts:
                rule = r.rule if r.rule in ("chnsync", "timesync") else mv.rule
                shown = mv.ctrl_action if mv.rule == "suppress" else mv.action
                ins = mv.inserted_for
                yield (r.step, r.clock, i, rule, str(shown), str(ins) if ins else "")

    def to_csv(self, fh=None) -> str:
        buf = fh or io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "clock_tick", "node", "rule", "action", "inserted_for"])
        w.writerows(self.rows())
        return buf.getvalue() if fh is None else ""


def run(
    n: Network,
    policy: SchedulerPolicy = SchedulerPolicy(),
    horizon: int = 1,
    env: Optional[NetFilter] = None,
    closed: bool = False,
    outside: Optional[NetFilter] = None,
    on_move: Optional[Callable[[StepRecord, Network], None]] = None,
    max_steps_per_tick: int = 10_000,
    audit: bool = True,
) -> TraceLog:
    """Execute ``horizon`` time slots: the run stops just before the tick
    that would start slot ``horizon + 1``, or earlier if the network is
    stuck."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    rng = random.Random(policy.seed)
    out = TraceLog(len(n.nodes))
    since_tick = 0
    step = 0
    while True:
        per_node = [mstep(m, _node_filter(env, i)) for i, m in enumerate(n.nodes)]
        moves = _assemble(n, per_node, closed, outside)
        if not moves:
            out.stuck = True
            log.info("network stuck at tick %d after %d steps", n.clock, step)
            break
        if policy.tie_break == "first_declared":
            mv = choose_first_declared(per_node, moves, closed)
        else:
            mv = rng.choice(moves)
        if mv.rule == "timesync" and n.clock >= horizon:
            break
        rec = StepRecord(step, n.clock, mv.action, mv.rule, mv.parts)
        if mv.rule == "timesync" and audit:
            rec.tau_enabled = tau_enabled(n, env)
        out.records.append(rec)
        n = mv.target
        step += 1
        if on_move is not None:
            on_move(rec, n)
        if mv.rule == "timesync":
            since_tick = 0
        else:
            since_tick += 1
            if since_tick > max_steps_per_tick:
                out.diverged = True
                break
    out.final = n
    return out
