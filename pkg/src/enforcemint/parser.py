"""Recursive-descent parser for the property language.

Core syntax::

    global := gatom ("&" gatom)*
    gatom  := "(" local ")" "*" | "(" global ")"
    local  := seqp ("&" seqp)*
    seqp   := sum (";" sum)*
    sum    := atom ("+" atom)*          every operand an event-guarded branch
    atom   := event ["." atom] | "eps" | "(" local ")" | combinator

A bare event abbreviates ``event . eps``.  Combinators (BE, BP, CND, BME,
...) need a :class:`~enforcemint.combinators.CombinatorEnv`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional

from . import combinators as C
from .props import EPS, GInter, Inter, LocalProp, Seq, Star, Union
from .trace import Action, parse_action


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<event>[sa]:[A-Za-z_]\w*|c[!?][A-Za-z_]\w*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<punct>[()*&;+.{},:])
    """,
    re.VERBOSE,
)

_KEYWORD_EVENTS = {"tick", "end"}


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            line, col = _location(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


def _location(text: str, pos: int):
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


_COMBINATORS = {
    # name: argument signature (e = event, p = local, n = count, E = event set)
    "BE": "en", "BP": "en", "BA": "en",
    "CND": "ep", "PCND": "epn",
    "CBE": "eenn", "CBP": "eenn", "CBA": "eenn",
    "MinD": "eenn", "MaxD": "eenn",
    "BR": "eeenn", "BI": "eeenn",
    "BME": "En", "POW": "En",
}


class _Parser:
    def __init__(self, text: str, env: Optional[C.CombinatorEnv]):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0
        self.env = env

    # -- helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, *_location(self.text, tok.pos))

    def peek(self, text: str) -> bool:
        return self.tok.kind == "punct" and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.peek(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {got!r}")
        tok = self.tok
        self.i += 1
        return tok

    def at_event(self) -> bool:
        return self.tok.kind == "event" or (self.tok.kind == "ident" and self.tok.text in _KEYWORD_EVENTS)

    def event(self) -> Action:
        if not self.at_event():
            tok = self.tok
            if tok.kind == "ident":
                raise self.error(f"unknown event name {tok.text!r}")
            raise self.error(f"expected an event, found {tok.text or 'end of input'!r}")
        tok = self.tok
        self.i += 1
        return parse_action(tok.text)

    def number(self) -> int:
        if self.tok.kind != "num":
            raise self.error("expected a number")
        tok = self.tok
        self.i += 1
        return int(tok.text)

    # -- global level
    def globl(self):
        e = self.gatom()
        while self.peek("&"):
            self.i += 1
            e = GInter(e, self.gatom())
        return e

    def gatom(self):
        start = self.i
        self.expect("(")
        try:
            body = self.local()
            self.expect(")")
            self.expect("*")
            return Star(body)
        except ParseError as first:
            furthest = self.i
            self.i = start + 1
            try:
                e = self.globl()
                self.expect(")")
                return e
            except ParseError as second:
                raise first if furthest >= self.i else second

    # -- local level
    def local(self) -> LocalProp:
        p = self.seqp()
        while self.peek("&"):
            self.i += 1
            p = Inter(p, self.seqp())
        return p

    def seqp(self) -> LocalProp:
        p = self.sum()
        while self.peek(";"):
            self.i += 1
            p = Seq(p, self.sum())
        return p

    def sum(self) -> LocalProp:
        tok = self.tok
        first = self.atom()
        if not self.peek("+"):
            return first
        branches = list(self._branches(first, tok))
        while self.peek("+"):
            self.i += 1
            tok = self.tok
            branches += self._branches(self.atom(), tok)
        return Union(tuple(branches))

    def _branches(self, p, tok):
        if not isinstance(p, Union):
            raise self.error("every operand of '+' must start with an event", tok)
        return p.branches

    def atom(self) -> LocalProp:
        tok = self.tok
        if self.at_event():
            ev = self.event()
            if self.peek("."):
                self.i += 1
                return Union(((ev, self.atom()),))
            return Union(((ev, EPS),))
        if tok.kind == "ident" and tok.text == "eps":
            self.i += 1
            return EPS
        if self.peek("("):
            self.i += 1
            p = self.local()
            self.expect(")")
            return p
        if tok.kind == "ident" and (tok.text in _COMBINATORS or tok.text == "CASE"):
            return self.combinator()
        if tok.kind == "ident":
            raise self.error(f"unknown event name {tok.text!r}")
        raise self.error(f"expected a property, found {tok.text or 'end of input'!r}")

    def combinator(self) -> LocalProp:
        tok = self.tok
        name = tok.text
        self.i += 1
        if self.env is None:
            raise self.error(f"{name} needs maxa and an alphabet to expand", tok)
        try:
            if name == "CASE":
                return self._case()
            args = self._args(_COMBINATORS[name])
            return getattr(C, name)(*args, self.env)
        except C.CombinatorError as exc:
            raise self.error(f"{name}: {exc}", tok) from None

    def _case(self) -> LocalProp:
        self.expect("{")
        triggers = []
        while not self.peek("}"):
            ev = self.event()
            self.expect(":")
            triggers.append((ev, self.local()))
            if not self.peek("}"):
                self.expect(",")
        self.expect("}")
        return C.case(triggers, self.env)

    def _args(self, sig: str):
        self.expect("(")
        args = []
        for i, code in enumerate(sig):
            if i:
                self.expect(",")
            if code == "e":
                args.append(self.event())
            elif code == "p":
                args.append(self.local())
            elif code == "n":
                args.append(self.number())
            else:
                self.expect("{")
                evs = [self.event()]
                while self.peek(","):
                    self.i += 1
                    evs.append(self.event())
                self.expect("}")
                args.append(tuple(evs))
        self.expect(")")
        return args

    def finish(self, value):
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return value


def parse_property(text: str, env: Optional[C.CombinatorEnv] = None):
    """Parse a global property."""
    p = _Parser(text, env)
    return p.finish(p.globl())


def parse_local(text: str, env: Optional[C.CombinatorEnv] = None) -> LocalProp:
    p = _Parser(text, env)
    return p.finish(p.local())
