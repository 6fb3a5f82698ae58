"""Compromised PLC programs.

An attack replaces a PLC's program with one that counts scan cycles and
misbehaves in some of them.  The counter lives in the equation names:
equation ``X`` is cloned into ``X@0``, ``X@1``, ... and each ``end . Y`` in
clone ``k`` continues at ``Y@next(k)``.  Timings are given in seconds of
the original testbed and converted to scan cycles with
``seconds / cycle_time * scale``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from ..calculus import (
    ActOut,
    ChanInTimeout,
    ChanOutTimeout,
    Defs,
    EndThen,
    Proc,
    SensTimeout,
    TickPrefix,
    Var,
)
from ..trace import Action, act
from .plant import Thresholds, band_representative, offset_signal

CYCLE_TIME = 0.1   # seconds per scan cycle on the testbed

TARGETS = {1: 1, 2: 2, 3: 1, 4: 2, 5: 3}


class AttackError(ValueError):
    pass


@dataclass(frozen=True)
class AttackSpec:
    id: int
    target: Optional[int] = None
    silent: float = 500.0      # seconds before a one-shot attack starts
    standby: float = 70.0      # seconds of a periodic attack's stand-by phase
    active: float = 30.0       # seconds of its injection phase
    offset: float = -30.0      # sensor offset of attack 2
    scale: float = 0.1

    def __post_init__(self):
        if self.id not in TARGETS:
            raise AttackError(f"unknown attack {self.id}; attacks are numbered 1 to 5")
        if self.target is None:
            object.__setattr__(self, "target", TARGETS[self.id])
        elif self.target != TARGETS[self.id]:
            raise AttackError(f"attack {self.id} targets PLC{TARGETS[self.id]}, not PLC{self.target}")
        for name in ("silent", "standby", "active"):
            if self.cycles(getattr(self, name)) < 1:
                raise AttackError(f"{name} phase must last at least one scan cycle")

    def cycles(self, seconds: float) -> int:
        return int(round(seconds / CYCLE_TIME * self.scale))

    @property
    def periodic(self) -> bool:
        return self.id in (3, 4)

    def schedule(self) -> "Schedule":
        if self.periodic:
            return Schedule.periodic(self.cycles(self.standby), self.cycles(self.active))
        return Schedule.after(self.cycles(self.silent))


@dataclass(frozen=True)
class Schedule:
    """Cycle counter ``0 .. size-1`` with a successor function."""

    size: int
    start: int          # first active counter value
    wraps: bool

    @classmethod
    def after(cls, silent: int) -> "Schedule":
        return cls(silent + 1, silent, False)

    @classmethod
    def periodic(cls, standby: int, active: int) -> "Schedule":
        return cls(standby + active, standby, True)

    def next(self, k: int) -> int:
        if self.wraps:
            return (k + 1) % self.size
        return min(k + 1, self.size - 1)

    def active(self, k: int) -> bool:
        return k >= self.start

    def phase(self, k: int) -> int:
        """Position inside the active phase."""
        return k - self.start


# -- body rewriting ----------------------------------------------------------------

def rewrite(J: Proc, f: Callable[[Proc], Optional[Proc]]) -> Proc:
    """Bottom-up rewrite; ``f`` returns a replacement or None."""
    if isinstance(J, TickPrefix):
        J = TickPrefix(rewrite(J.cont, f))
    elif isinstance(J, SensTimeout):
        J = SensTimeout(tuple((a, rewrite(c, f)) for a, c in J.branches), rewrite(J.timeout, f))
    elif isinstance(J, ChanInTimeout):
        J = ChanInTimeout(tuple((a, rewrite(c, f)) for a, c in J.branches), rewrite(J.timeout, f))
    elif isinstance(J, ChanOutTimeout):
        J = ChanOutTimeout(J.channel, rewrite(J.then, f), rewrite(J.timeout, f))
    elif isinstance(J, ActOut):
        J = ActOut(J.action, rewrite(J.then, f))
    out = f(J)
    return J if out is None else out


def drop(action: Action):
    return lambda J: J.then if isinstance(J, ActOut) and J.action == action else None


def substitute(old: Action, new: Action):
    return lambda J: ActOut(new, J.then) if isinstance(J, ActOut) and J.action == old else None


def append_before_end(action: Action):
    return lambda J: ActOut(action, J) if isinstance(J, EndThen) else None


def remap_sensors(mapping: Dict[str, str]):
    """Take branch ``mapping[s]`` whenever sensor ``s`` is read."""
    def f(J):
        if not isinstance(J, SensTimeout):
            return None
        bodies = {a.name: c for a, c in J.branches}
        return SensTimeout(tuple((a, bodies.get(mapping.get(a.name, a.name), c)) for a, c in J.branches), J.timeout)
    return f


def offset_mapping(tank: int, offset: float, thr: Thresholds) -> Dict[str, str]:
    """Signal each band is mistaken for when ``offset`` is added to the level."""
    return {f"{sig}{tank}": f"{offset_signal(band_representative(sig, thr), offset, thr)}{tank}" for sig in "lmh"}


def _relabel(J: Proc, k_next: int) -> Proc:
    return rewrite(J, lambda P: EndThen(f"{P.var}@{k_next}") if isinstance(P, EndThen) else None)


def clone(P: Proc, defs: Defs, sched: Schedule, payload: Callable[[int], Optional[Callable]]) -> Tuple[Proc, Defs]:
    """Unfold the cycle counter into the equations; ``payload(k)`` gives the
    rewrite applied in counter value ``k`` (None for genuine behaviour)."""
    eqs = {}
    for k in range(sched.size):
        f = payload(k)
        for name, body in defs.items():
            b = rewrite(body, f) if f is not None else body
            eqs[f"{name}@{k}"] = _relabel(b, sched.next(k))
    start = P.name if isinstance(P, Var) else next(iter(defs))
    return Var(f"{start}@0"), Defs(eqs)


def apply_attack(plc: Tuple[Proc, Defs], spec: AttackSpec, thr: Thresholds = Thresholds()) -> Tuple[Proc, Defs]:
    P, defs = plc
    sched = spec.schedule()

    def when_active(rule):
        return lambda k: rule(sched.phase(k)) if sched.active(k) else None

    if spec.id == 1:
        payload = when_active(lambda _: drop(act("close_v")))
    elif spec.id == 2:
        payload = when_active(lambda _: remap_sensors(offset_mapping(2, spec.offset, thr)))
    elif spec.id == 3:
        payload = when_active(lambda j: append_before_end(act("open_v" if j % 2 == 0 else "close_v")))
    elif spec.id == 4:
        payload = when_active(lambda j: remap_sensors({s: ("l2" if j % 2 == 0 else "h2") for s in ("l2", "m2", "h2")}))
    else:
        payload = when_active(lambda _: substitute(act("off3"), act("on3")))
    return clone(P, defs, sched, payload)
