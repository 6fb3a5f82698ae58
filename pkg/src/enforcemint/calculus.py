"""Controller processes, their one-step semantics, and a small DSL.

A controller is a set of equations ``X = tick . W``.  Within one scan cycle
a body goes through sensing, communication and actuation, and closes with
``end . Y``::

    W ::= tick . W | S
    S ::= sens{ s_i -> S_i } else S     | C
    C ::= in{ c?_i -> C_i } else C      | out c!x . C else C | A
    A ::= act a:x . A                   | end . Y

The timeout branch of ``sens``, ``in`` and ``out`` is taken by a ``tick``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .trace import END, TICK, Action, Kind, parse_action


class Proc:
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
        return format_proc(self)


@dataclass(frozen=True, eq=False)
class Var(Proc):
    name: str

    def _key(self):
        return (self.name,)


@dataclass(frozen=True, eq=False)
class TickPrefix(Proc):
    cont: Proc

    def _key(self):
        return (self.cont,)


@dataclass(frozen=True, eq=False)
class SensTimeout(Proc):
    branches: Tuple[Tuple[Action, Proc], ...]
    timeout: Proc

    def _key(self):
        return (self.branches, self.timeout)


@dataclass(frozen=True, eq=False)
class ChanInTimeout(Proc):
    branches: Tuple[Tuple[Action, Proc], ...]
    timeout: Proc

    def _key(self):
        return (self.branches, self.timeout)


@dataclass(frozen=True, eq=False)
class ChanOutTimeout(Proc):
    channel: Action
    then: Proc
    timeout: Proc

    def _key(self):
        return (self.channel, self.then, self.timeout)


@dataclass(frozen=True, eq=False)
class ActOut(Proc):
    action: Action
    then: Proc

    def _key(self):
        return (self.action, self.then)


@dataclass(frozen=True, eq=False)
class EndThen(Proc):
    var: str

    def _key(self):
        return (self.var,)


class ControllerError(ValueError):
    pass


class PhaseError(ControllerError):
    pass


class Defs:
    """Equation environment ``name -> body`` with a transition cache."""

    def __init__(self, equations: Dict[str, Proc]):
        self.equations = dict(equations)
        self._steps: Dict[Proc, Tuple[Tuple[Action, Proc], ...]] = {}

    def __getitem__(self, name: str) -> Proc:
        try:
            return self.equations[name]
        except KeyError:
            raise ControllerError(f"undefined process variable {name!r}") from None

    def __contains__(self, name):
        return name in self.equations

    def __iter__(self):
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)

    def items(self):
        return self.equations.items()

    def steps(self, J: Proc) -> Tuple[Tuple[Action, Proc], ...]:
        out = self._steps.get(J)
        if out is None:
            out = tuple(_steps(J, self))
            self._steps[J] = out
        return out


def _steps(J: Proc, defs: Defs):
    if isinstance(J, Var):
        return defs.steps(defs[J.name])
    if isinstance(J, TickPrefix):
        return [(TICK, J.cont)]
    if isinstance(J, (SensTimeout, ChanInTimeout)):
        return list(J.branches) + [(TICK, J.timeout)]
    if isinstance(J, ChanOutTimeout):
        return [(J.channel, J.then), (TICK, J.timeout)]
    if isinstance(J, ActOut):
        return [(J.action, J.then)]
    if isinstance(J, EndThen):
        return [(END, Var(J.var))]
    raise TypeError(f"not a process: {J!r}")


def ctrl_steps(J: Proc, defs: Defs) -> Tuple[Tuple[Action, Proc], ...]:
    """Transitions of ``J`` in declaration order (timeouts last)."""
    return defs.steps(J)


# -- validation -------------------------------------------------------------------

_SLEEP, _SENS, _COMM, _ACT = range(4)


@dataclass
class Report:
    time_guarded: bool
    maxa: int
    alphabet: frozenset
    equations: Tuple[str, ...] = field(default=())


def _children(J: Proc) -> List[Tuple[Optional[Action], Proc]]:
    if isinstance(J, TickPrefix):
        return [(TICK, J.cont)]
    if isinstance(J, (SensTimeout, ChanInTimeout)):
        return list(J.branches) + [(TICK, J.timeout)]
    if isinstance(J, ChanOutTimeout):
        return [(J.channel, J.then), (TICK, J.timeout)]
    if isinstance(J, ActOut):
        return [(J.action, J.then)]
    return []


def _check_shape(J: Proc, level: int, defs: Defs, raw: bool, where: str):
    def fail(msg):
        raise PhaseError(f"{where}: {msg}")

    if isinstance(J, Var):
        fail(f"process variable {J.name} may only follow end")
    if isinstance(J, EndThen):
        if J.var not in defs:
            raise ControllerError(f"{where}: undefined process variable {J.var!r}")
        return
    if isinstance(J, TickPrefix):
        need, sub = _SLEEP, _SLEEP
    elif isinstance(J, SensTimeout):
        need, sub = _SENS, _SENS
        if not J.branches:
            fail("sensing needs at least one branch")
        guards = [a for a, _ in J.branches]
        if len(set(guards)) != len(guards):
            fail("sensor guards of one sensing step must be distinct")
        if any(a.kind is not Kind.SENS for a in guards):
            fail("sensing branches must be guarded by sensor reads")
    elif isinstance(J, ChanInTimeout):
        need, sub = _COMM, _COMM
        if not J.branches:
            fail("channel input needs at least one branch")
        guards = [a for a, _ in J.branches]
        if len(set(guards)) != len(guards):
            fail("channel input guards must be distinct")
        if any(a.kind is not Kind.RECV for a in guards):
            fail("channel input branches must be guarded by receives")
    elif isinstance(J, ChanOutTimeout):
        need, sub = _COMM, _COMM
        if J.channel.kind is not Kind.SEND:
            fail("channel output must be a send")
    elif isinstance(J, ActOut):
        need, sub = _ACT, _ACT
        if J.action.kind is not Kind.ACT:
            fail("actuation must be an actuator command")
    else:
        raise TypeError(f"not a process: {J!r}")
    if not raw:
        if isinstance(J, TickPrefix) and level != _SLEEP:
            fail("tick prefix after sensing has started")
        if need < level:
            names = ["sleep", "sensing", "communication", "actuation"]
            fail(f"{names[need]} after {names[level]} in the same cycle")
    for _, c in _children(J):
        _check_shape(c, sub if not raw else _SLEEP, defs, raw, where)


def _longest(J: Proc) -> int:
    if isinstance(J, EndThen):
        return 1
    kids = _children(J)
    if not kids:
        return 0
    return 1 + max(_longest(c) for _, c in kids)


def _actions(J: Proc, out: set, refs: set):
    if isinstance(J, EndThen):
        out.add(END)
        refs.add(J.var)
        return
    if isinstance(J, Var):
        refs.add(J.name)
        return
    for a, c in _children(J):
        out.add(a)
        _actions(c, out, refs)


def _reachable_equations(P: Proc, defs: Defs) -> List[str]:
    refs: set = set()
    _actions(P, set(), refs)
    order: List[str] = []
    todo = sorted(refs)
    while todo:
        name = todo.pop(0)
        if name in order:
            continue
        order.append(name)
        more: set = set()
        _actions(defs[name], set(), more)
        todo += sorted(more - set(order))
    return order


def validate(P: Proc, defs: Defs, raw: bool = False) -> Report:
    """Static report: time guardedness, cycle bound ``maxa`` and alphabet.

    Phase violations raise :class:`PhaseError` unless ``raw`` is set.
    """
    names = _reachable_equations(P, defs)
    guarded = all(isinstance(defs[n], TickPrefix) for n in names)
    roots = [defs[n] for n in names]
    if not isinstance(P, Var):
        roots.append(P)
    for n in names:
        _check_shape(defs[n], _SLEEP, defs, raw, f"equation {n}")
    if not isinstance(P, Var):
        _check_shape(P, _SLEEP, defs, True, "initial process")
    alphabet: set = set()
    for r in roots:
        _actions(r, alphabet, set())
    maxa = max((_longest(r) for r in roots), default=0)
    return Report(guarded, maxa, frozenset(alphabet), tuple(names))


def controller_alphabet(P: Proc, defs: Defs) -> frozenset:
    return validate(P, defs, raw=True).alphabet


# -- printing ---------------------------------------------------------------------

def format_proc(J: Proc) -> str:
    if isinstance(J, Var):
        return J.name
    if isinstance(J, TickPrefix):
        return f"tick . {format_proc(J.cont)}"
    if isinstance(J, SensTimeout):
        inner = ", ".join(f"{a.name} -> {format_proc(c)}" for a, c in J.branches)
        return f"sens{{ {inner} }} else {format_proc(J.timeout)}"
    if isinstance(J, ChanInTimeout):
        inner = ", ".join(f"{a} -> {format_proc(c)}" for a, c in J.branches)
        return f"in{{ {inner} }} else {format_proc(J.timeout)}"
    if isinstance(J, ChanOutTimeout):
        return f"out {J.channel} . {format_proc(J.then)} else {format_proc(J.timeout)}"
    if isinstance(J, ActOut):
        return f"act {J.action} . {format_proc(J.then)}"
    if isinstance(J, EndThen):
        return f"end . {J.var}"
    raise TypeError(J)


def format_controller(defs: Defs, order: Optional[Iterable[str]] = None) -> str:
    names = list(order) if order is not None else list(defs)
    return "\n".join(f"{n} = {format_proc(defs[n])}" for n in names) + "\n"


# -- parsing ----------------------------------------------------------------------

_TOK = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<arrow>->)
  | (?P<event>[sa]:[A-Za-z_]\w*|c[!?][A-Za-z_]\w*)
  | (?P<name>[A-Za-z_][\w@]*)
  | (?P<punct>[=.{}(),;|])
    """,
    re.VERBOSE,
)


class ControllerSyntaxError(ControllerError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class _CParser:
    def __init__(self, text: str):
        self.text = text
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOK.match(text, pos)
            if not m:
                raise self._err(f"unexpected character {text[pos]!r}", pos)
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.toks.append(("eof", "", len(text)))
        self.i = 0

    def _err(self, msg, pos):
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return ControllerSyntaxError(msg, line, col)

    def error(self, msg):
        return self._err(msg, self.toks[self.i][2])

    @property
    def tok(self):
        return self.toks[self.i]

    def is_(self, text):
        return self.tok[1] == text and self.tok[0] in ("punct", "name", "arrow")

    def expect(self, text):
        if not self.is_(text):
            raise self.error(f"expected {text!r}, found {self.tok[1] or 'end of input'!r}")
        self.i += 1

    def name(self):
        kind, text, _ = self.tok
        if kind != "name" or text in _KEYWORDS:
            raise self.error(f"expected a process name, found {text or 'end of input'!r}")
        self.i += 1
        return text

    def action(self, kind: Kind):
        k, text, _ = self.tok
        if kind is Kind.SENS and k == "name" and text not in _KEYWORDS:
            self.i += 1
            return Action(Kind.SENS, text)
        if k != "event":
            raise self.error(f"expected {kind.value}NAME, found {text or 'end of input'!r}")
        a = parse_action(text)
        if a.kind is not kind:
            raise self.error(f"expected {kind.value}NAME, found {text!r}")
        self.i += 1
        return a

    def program(self):
        eqs: Dict[str, Proc] = {}
        order = []
        while self.tok[0] != "eof":
            if self.is_(";"):
                self.i += 1
                continue
            start = self.i
            n = self.name()
            self.expect("=")
            if n in eqs:
                self.i = start
                raise self.error(f"process {n} defined twice")
            if not self.is_("tick"):
                raise self.error("an equation body must start with tick")
            eqs[n] = self.body()
            order.append(n)
        if not eqs:
            raise self.error("no equations")
        return order, eqs

    def body(self) -> Proc:
        if self.is_("tick"):
            self.i += 1
            self.expect(".")
            return TickPrefix(self.body())
        if self.is_("sens"):
            self.i += 1
            return SensTimeout(*self._branches(Kind.SENS))
        if self.is_("in"):
            self.i += 1
            return ChanInTimeout(*self._branches(Kind.RECV))
        if self.is_("out"):
            self.i += 1
            ch = self.action(Kind.SEND)
            self.expect(".")
            then = self.body()
            self.expect("else")
            return ChanOutTimeout(ch, then, self.body())
        if self.is_("act"):
            self.i += 1
            a = self.action(Kind.ACT)
            self.expect(".")
            return ActOut(a, self.body())
        if self.is_("end"):
            self.i += 1
            self.expect(".")
            return EndThen(self.name())
        if self.is_("("):
            self.i += 1
            p = self.body()
            self.expect(")")
            return p
        raise self.error(f"expected a controller body, found {self.tok[1] or 'end of input'!r}")

    def _branches(self, kind):
        self.expect("{")
        branches = []
        while not self.is_("}"):
            a = self.action(kind)
            self.expect("->")
            branches.append((a, self.body()))
            if self.is_(",") or self.is_("|"):
                self.i += 1
        self.expect("}")
        if not branches:
            raise self.error("empty branch list")
        self.expect("else")
        return tuple(branches), self.body()


_KEYWORDS = {"tick", "sens", "in", "out", "act", "end", "else"}


def parse_controller(text: str, raw: bool = False) -> Tuple[Proc, Defs]:
    """Parse equations; the first one is the initial process."""
    p = _CParser(text)
    order, eqs = p.program()
    defs = Defs({n: eqs[n] for n in order})
    P = Var(order[0])
    for n in order:
        _check_shape(defs[n], _SLEEP, defs, raw, f"equation {n}")
    return P, defs
