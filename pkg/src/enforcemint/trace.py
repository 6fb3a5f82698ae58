"""Actions and finite traces."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence


class Kind(enum.Enum):
    SENS = "s:"
    ACT = "a:"
    SEND = "c!"
    RECV = "c?"
    TICK = "tick"
    END = "end"
    TAU = "tau"


_NAMED = (Kind.SENS, Kind.ACT, Kind.SEND, Kind.RECV)
_ORDER = {k: i for i, k in enumerate(Kind)}
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Action:
    kind: Kind
    name: str = ""

    def __post_init__(self):
        if self.kind in _NAMED:
            if not _IDENT.match(self.name):
                raise ValueError(f"bad action name {self.name!r} for {self.kind.name}")
        elif self.name:
            raise ValueError(f"{self.kind.value} carries no name")

    def __str__(self):
        if self.kind in _NAMED:
            return self.kind.value + self.name
        return self.kind.value

    def __repr__(self):
        return f"Action({self})"

    @property
    def is_tau(self):
        return self.kind is Kind.TAU

    @property
    def is_channel(self):
        return self.kind in (Kind.SEND, Kind.RECV)

    def sort_key(self):
        return (_ORDER[self.kind], self.name)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def co(self):
        """The complementary channel action (c!x <-> c?x)."""
        if self.kind is Kind.SEND:
            return Action(Kind.RECV, self.name)
        if self.kind is Kind.RECV:
            return Action(Kind.SEND, self.name)
        raise ValueError(f"{self} is not a channel action")


TICK = Action(Kind.TICK)
END = Action(Kind.END)
TAU = Action(Kind.TAU)

Trace = tuple  # tuple[Action, ...]


def sens(name):
    return Action(Kind.SENS, name)


def act(name):
    return Action(Kind.ACT, name)


def send(name):
    return Action(Kind.SEND, name)


def recv(name):
    return Action(Kind.RECV, name)


def parse_action(text: str) -> Action:
    text = text.strip()
    for kind in (Kind.TICK, Kind.END, Kind.TAU):
        if text == kind.value:
            return Action(kind)
    for kind in _NAMED:
        if text.startswith(kind.value):
            return Action(kind, text[len(kind.value):])
    raise ValueError(f"unknown action {text!r}")


def parse_trace(text: str) -> tuple:
    return tuple(parse_action(tok) for tok in text.split())


def format_trace(t: Iterable[Action]) -> str:
    return " ".join(str(a) for a in t)


def erase_tau(t: Sequence[Action]) -> tuple:
    return tuple(a for a in t if a.kind is not Kind.TAU)


def is_prefix(t1: Sequence[Action], t2: Sequence[Action]) -> bool:
    return len(t1) <= len(t2) and tuple(t2[: len(t1)]) == tuple(t1)
