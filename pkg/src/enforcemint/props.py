"""Abstract syntax of local and global properties, with static checks.

Local properties::

    p ::= eps | p1 ; p2 | sum_i pi_i . p_i | p1 & p2

Global properties::

    e ::= (p)* | e1 & e2

Nodes are immutable and hash their structure once.  Combinator expansions
produce heavily shared DAGs, so every traversal here memoizes on node
identity instead of walking the unfolded tree.
"""

from __future__ import annotations

import sys
import threading
from dataclasses import dataclass
from typing import Tuple

from .trace import END, Action


class Prop:
    __slots__ = ()

    def __hash__(self):
        h = self.__dict__.get("_h")
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_h", h)
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(other) is not type(self) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __str__(self):
        return format_property(self)


class LocalProp(Prop):
    __slots__ = ()


class GlobalProp(Prop):
    __slots__ = ()


@dataclass(frozen=True, eq=False, repr=False)
class Eps(LocalProp):
    def _key(self):
        return ()

    def __repr__(self):
        return "Eps()"


@dataclass(frozen=True, eq=False, repr=False)
class Seq(LocalProp):
    p1: LocalProp
    p2: LocalProp

    def _key(self):
        return (self.p1, self.p2)

    def __repr__(self):
        return f"Seq({self.p1!r}, {self.p2!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Union(LocalProp):
    branches: Tuple[Tuple[Action, LocalProp], ...]

    def __post_init__(self):
        if not self.branches:
            raise ValueError("a union needs at least one branch")
        object.__setattr__(self, "branches", tuple(self.branches))

    def _key(self):
        return self.branches

    def __repr__(self):
        inner = ", ".join(f"({ev}, {p!r})" for ev, p in self.branches)
        return f"Union[{inner}]"


@dataclass(frozen=True, eq=False, repr=False)
class Inter(LocalProp):
    p1: LocalProp
    p2: LocalProp

    def _key(self):
        return (self.p1, self.p2)

    def __repr__(self):
        return f"Inter({self.p1!r}, {self.p2!r})"


@dataclass(frozen=True, eq=False, repr=False)
class Star(GlobalProp):
    body: LocalProp

    def _key(self):
        return (self.body,)

    def __repr__(self):
        return f"Star({self.body!r})"


@dataclass(frozen=True, eq=False, repr=False)
class GInter(GlobalProp):
    e1: GlobalProp
    e2: GlobalProp

    def _key(self):
        return (self.e1, self.e2)

    def __repr__(self):
        return f"GInter({self.e1!r}, {self.e2!r})"


EPS = Eps()


def pre(ev: Action, p: LocalProp = EPS) -> Union:
    """The single-branch union ``ev . p``."""
    return Union(((ev, p),))


def seq(*ps: LocalProp) -> LocalProp:
    out = ps[-1]
    for p in reversed(ps[:-1]):
        out = Seq(p, out)
    return out


END_EPS = pre(END)


def children(p: Prop):
    if isinstance(p, (Seq, Inter)):
        return (p.p1, p.p2)
    if isinstance(p, Union):
        return tuple(b for _, b in p.branches)
    if isinstance(p, Star):
        return (p.body,)
    if isinstance(p, GInter):
        return (p.e1, p.e2)
    return ()


def deep(fn):
    """Run ``fn`` normally; if the AST is too deep for the default stack,
    retry on a worker thread with a large stack."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RecursionError:
            pass
        box = {}

        def target():
            old = sys.getrecursionlimit()
            sys.setrecursionlimit(max(old, 400_000))
            try:
                box["value"] = fn(*args, **kwargs)
            except BaseException as exc:  # re-raised in the caller
                box["error"] = exc
            finally:
                sys.setrecursionlimit(old)

        size = threading.stack_size()
        threading.stack_size(512 * 1024 * 1024)
        try:
            t = threading.Thread(target=target)
            t.start()
        finally:
            threading.stack_size(size)
        t.join()
        if "error" in box:
            raise box["error"]
        return box["value"]

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    wrapper.__wrapped__ = fn
    return wrapper


def _fold(p, leaf, combine):
    memo = {}

    def go(q):
        r = memo.get(id(q))
        if r is None:
            r = combine(q, [go(c) for c in children(q)])
            memo[id(q)] = r
        return r

    return go(p)


@deep
def well_formed(p: Prop) -> bool:
    def combine(q, subs):
        if isinstance(q, Eps):
            return False
        if isinstance(q, Seq):
            return subs[1]
        if isinstance(q, (Inter, GInter)):
            return subs[0] and subs[1]
        if isinstance(q, Union):
            return all(
                ok or (ev == END and isinstance(body, Eps))
                for (ev, body), ok in zip(q.branches, subs)
            )
        return subs[0]  # Star

    return _fold(p, None, combine)


@deep
def prop_size(p: Prop) -> int:
    def combine(q, subs):
        if isinstance(q, Eps):
            return 1
        if isinstance(q, (Seq, Inter, GInter)):
            return subs[0] + subs[1] + 1
        if isinstance(q, Union):
            return len(q.branches) + sum(subs)
        return subs[0]

    return _fold(p, None, combine)


@deep
def inter_count(p: Prop) -> int:
    """Occurrences of the intersection operator (local or global)."""

    def combine(q, subs):
        return sum(subs) + (1 if isinstance(q, (Inter, GInter)) else 0)

    return _fold(p, None, combine)


@deep
def events_of(p: Prop) -> frozenset:
    def combine(q, subs):
        evs = frozenset().union(*subs) if subs else frozenset()
        if isinstance(q, Union):
            evs = evs | {ev for ev, _ in q.branches}
        return evs

    return _fold(p, None, combine)


@deep
def is_deterministic(p: Prop) -> bool:
    def combine(q, subs):
        ok = all(subs)
        if ok and isinstance(q, Union):
            guards = [ev for ev, _ in q.branches]
            ok = len(set(guards)) == len(guards)
        return ok

    return _fold(p, None, combine)


# -- printing ---------------------------------------------------------------

_INTER, _SEQ, _SUM, _ATOM = range(4)


def _fmt(p, need):
    if isinstance(p, Eps):
        text, level = "eps", _ATOM
    elif isinstance(p, Union) and len(p.branches) == 1:
        ev, body = p.branches[0]
        text = str(ev) if isinstance(body, Eps) else f"{ev} . {_fmt(body, _ATOM)}"
        level = _ATOM
    elif isinstance(p, Union):
        text = " + ".join(_fmt(Union((b,)), _ATOM) for b in p.branches)
        level = _SUM
    elif isinstance(p, Seq):
        text = f"{_fmt(p.p1, _SEQ)} ; {_fmt(p.p2, _SUM)}"
        level = _SEQ
    elif isinstance(p, Inter):
        text = f"{_fmt(p.p1, _INTER)} & {_fmt(p.p2, _SEQ)}"
        level = _INTER
    elif isinstance(p, Star):
        text, level = f"({_fmt(p.body, _INTER)})*", _ATOM
    elif isinstance(p, GInter):
        right = _fmt(p.e2, _ATOM)
        if isinstance(p.e2, GInter):
            right = f"({right})"
        text, level = f"{_fmt(p.e1, _INTER)} & {right}", _INTER
    else:
        raise TypeError(p)
    return f"({text})" if level < need else text


@deep
def format_property(p: Prop) -> str:
    """Concrete syntax accepted by :func:`enforcemint.parser.parse_property`."""
    return _fmt(p, _INTER)
