"""Finite-state edit automata.

A state's body is ``GO`` (allow everything), a sum of labelled arms, or a
reference to another state (an equation ``X = Y``).  Labels are
``Allow(a)``, ``Suppress(a)`` and ``Insert(trigger, inserted)``; the last
emits ``inserted`` while the controller, about to perform ``trigger``,
is held back.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union as TUnion

from .trace import END, TICK, Action, parse_action

_OP_RANK = {"allow": 0, "suppress": 1, "insert": 2}


@dataclass(frozen=True)
class EditLabel:
    op: str
    action: Action
    inserted: Optional[Action] = None

    def __post_init__(self):
        if self.op not in _OP_RANK:
            raise ValueError(f"unknown edit operation {self.op!r}")
        if self.action.is_tau or (self.inserted is not None and self.inserted.is_tau):
            raise ValueError("edit labels act on observable actions only")
        if (self.op == "insert") != (self.inserted is not None):
            raise ValueError("only insert labels carry an inserted action")

    def sort_key(self):
        return (_OP_RANK[self.op], str(self.action), str(self.inserted or ""))

    def __str__(self):
        if self.op == "allow":
            return str(self.action)
        if self.op == "suppress":
            return f"-{self.action}"
        return f"{self.action}>{self.inserted}"


def Allow(a: Action) -> EditLabel:
    return EditLabel("allow", a)


def Suppress(a: Action) -> EditLabel:
    return EditLabel("suppress", a)


def Insert(trigger: Action, inserted: Action) -> EditLabel:
    return EditLabel("insert", trigger, inserted)


class _Go:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "GO"


GO = _Go()


@dataclass(frozen=True)
class Ref:
    target: str


Arms = Tuple[Tuple[EditLabel, str], ...]
Body = TUnion[_Go, Arms, Ref]


class AutomatonError(ValueError):
    pass


@dataclass
class Moves:
    """Per-state lookup tables used by the runtime."""

    allow: Dict[Action, List[str]]
    suppress: Dict[Action, List[str]]
    inserts: List[Tuple[Action, Action, str]]
    go: bool


class EditAutomaton:
    def __init__(self, states: Dict[str, Body], initial: str, alphabet: Iterable[Action] = ()):
        self.states: Dict[str, Body] = dict(states)
        self.initial = initial
        self.alphabet = frozenset(alphabet)
        self._moves: Dict[str, Moves] = {}
        if initial not in self.states:
            raise AutomatonError(f"initial state {initial!r} is undefined")
        for sid, body in self.states.items():
            for t in _targets(body):
                if t not in self.states:
                    raise AutomatonError(f"state {sid!r} refers to undefined state {t!r}")

    @classmethod
    def go(cls, alphabet: Iterable[Action]) -> "EditAutomaton":
        return cls({"go": GO}, "go", alphabet)

    def __repr__(self):
        return f"<EditAutomaton {len(self.states)} states, initial {self.initial!r}>"

    def body(self, s: str) -> Body:
        seen = set()
        while True:
            try:
                b = self.states[s]
            except KeyError:
                raise AutomatonError(f"undefined state {s!r}") from None
            if not isinstance(b, Ref):
                return b
            if s in seen:
                raise AutomatonError(f"unguarded recursion through {s!r}")
            seen.add(s)
            s = b.target

    def resolve(self, s: str) -> str:
        while isinstance(self.states.get(s), Ref):
            s = self.states[s].target
        return s

    def arms(self, s: str) -> Arms:
        b = self.body(s)
        if b is GO:
            return tuple((Allow(a), s) for a in sorted(self.alphabet))
        return b

    def enabled(self, s: str) -> List[EditLabel]:
        out = []
        for label, _ in self.arms(s):
            if label not in out:
                out.append(label)
        return out

    def step(self, s: str, label: EditLabel) -> str:
        for lab, t in self.arms(s):
            if lab == label:
                return s if self.body(s) is GO else t
        raise AutomatonError(f"{label} is not enabled in state {s!r}")

    def moves(self, s: str) -> Moves:
        m = self._moves.get(s)
        if m is None:
            b = self.body(s)
            if b is GO:
                m = Moves({}, {}, [], True)
            else:
                allow: Dict[Action, List[str]] = {}
                supp: Dict[Action, List[str]] = {}
                ins = []
                for lab, t in b:
                    if lab.op == "allow":
                        allow.setdefault(lab.action, []).append(t)
                    elif lab.op == "suppress":
                        supp.setdefault(lab.action, []).append(t)
                    else:
                        ins.append((lab.action, lab.inserted, t))
                m = Moves(allow, supp, ins, False)
            self._moves[s] = m
        return m

    def is_go(self, s: str) -> bool:
        return self.body(s) is GO

    def reachable(self) -> List[str]:
        start = self.resolve(self.initial)
        seen = {start}
        order = [start]
        queue = deque(order)
        while queue:
            s = queue.popleft()
            b = self.body(s)
            if b is GO:
                continue
            for _, t in b:
                t = self.resolve(t)
                if t not in seen:
                    seen.add(t)
                    order.append(t)
                    queue.append(t)
        return order

    def allowed_words(self, max_len: int):
        """Words of Allow labels from the initial state, up to ``max_len``."""
        layer = {((), self.resolve(self.initial))}
        out = set()
        for depth in range(max_len + 1):
            out.update(w for w, _ in layer)
            if depth == max_len:
                break
            layer = {(w + (lab.action,), self.resolve(t)) for w, s in layer for lab, t in self.arms(s) if lab.op == "allow"}
        return out

    def normalized(self) -> "EditAutomaton":
        """Reachable part with references resolved."""
        keep = self.reachable()
        states = {}
        for s in keep:
            b = self.body(s)
            states[s] = b if b is GO else tuple((lab, self.resolve(t)) for lab, t in b)
        return EditAutomaton(states, self.resolve(self.initial), self.alphabet)

    def structurally_equal(self, other: "EditAutomaton") -> bool:
        def canon(a):
            return (
                a.initial,
                {s: (b if b is GO else (b.target if isinstance(b, Ref) else sorted(b, key=_arm_key))) for s, b in a.states.items()},
            )

        return canon(self) == canon(other)


def _targets(body: Body):
    if body is GO:
        return ()
    if isinstance(body, Ref):
        return (body.target,)
    return tuple(t for _, t in body)


def _arm_key(arm):
    lab, t = arm
    return lab.sort_key() + (t,)


def suppress_targets(alphabet: Iterable[Action]) -> List[Action]:
    return sorted(a for a in alphabet if a not in (TICK, END) and not a.is_tau)


def is_suppress_all(a: EditAutomaton, s: str, P: Iterable[Action]) -> bool:
    b = a.body(s)
    if b is GO or not isinstance(b, tuple):
        return False
    me = a.resolve(s)
    want = {(Suppress(x), me) for x in suppress_targets(P)}
    got = [(lab, a.resolve(t)) for lab, t in b]
    return len(got) == len(want) and set(got) == want


def reachable_state_count(a: EditAutomaton) -> int:
    return len(a.reachable())


# -- cross product --------------------------------------------------------------

AllowView = Callable[[object], List[Tuple[Action, object]]]


def product_graph(allows1: AllowView, allows2: AllowView, root, terminal=None):
    """Explore pairs of states matched on equal Allow actions.

    Returns ``(succ, live)`` where ``succ`` maps each explored pair to its
    matched ``(action, pair)`` list and ``live`` lists, in discovery order,
    the pairs from which the exit pair can still be reached.  With a
    ``terminal`` state the exit is ``(terminal, terminal)``: both factors
    finish their word together, and a pair with only one component at
    ``terminal`` is a dead end.  Without one the exit is ``root`` itself,
    the only point where both global factors sit between complete cycles.
    """
    succ: Dict[tuple, List[Tuple[Action, tuple]]] = {}
    order = [root]
    queue = deque([root])
    succ[root] = None
    while queue:
        pair = queue.popleft()
        s1, s2 = pair
        if terminal is not None and (s1 == terminal or s2 == terminal):
            succ[pair] = []
            continue
        right: Dict[Action, List] = {}
        for a, t in allows2(s2):
            right.setdefault(a, []).append(t)
        out = []
        for a, t1 in allows1(s1):
            for t2 in right.get(a, ()):
                nxt = (t1, t2)
                out.append((a, nxt))
                if nxt not in succ:
                    succ[nxt] = None
                    order.append(nxt)
                    queue.append(nxt)
        succ[pair] = out

    exit_pair = (terminal, terminal) if terminal is not None else root
    if exit_pair not in succ:
        return succ, []
    preds: Dict[tuple, List[tuple]] = {p: [] for p in succ}
    for p, out in succ.items():
        for _, q in out:
            preds[q].append(p)
    alive = {exit_pair}
    work = [exit_pair]
    while work:
        q = work.pop()
        for p in preds[q]:
            if p not in alive:
                alive.add(p)
                work.append(p)
    live = [p for p in order if p in alive]
    return succ, live


def insert_arms(targets) -> list:
    """``Insert(end -> a)`` arms for the (action, target) pairs other than
    end, in the given order except that channel actions come last.  A
    premature end is then completed locally where possible; a request to
    another controller is inserted only once waiting (tick) is not an
    option or a partner is listening."""
    pairs = [(a, t) for a, t in targets if a != END]
    pairs.sort(key=lambda p: p[0].is_channel)
    return [(Insert(END, a), t) for a, t in pairs]


def product_arms(pair_out, live_ids: Dict[tuple, str], self_id: str, P) -> Arms:
    """Table-style body of a live product state."""
    kept = [(a, live_ids[q]) for a, q in pair_out if q in live_ids]
    arms = [(Allow(a), t) for a, t in kept]
    arms += insert_arms(kept)
    matched = {a for a, _ in kept}
    arms += [(Suppress(x), self_id) for x in suppress_targets(P) if x not in matched]
    return tuple(arms)


def suppress_all_body(self_id: str, P) -> Arms:
    return tuple((Suppress(x), self_id) for x in suppress_targets(P))


def _allow_view(a: EditAutomaton, P):
    universe = sorted(P)

    def allows(s):
        s = a.resolve(s)
        b = a.body(s)
        if b is GO:
            return [(x, s) for x in universe]
        return [(lab.action, a.resolve(t)) for lab, t in b if lab.op == "allow"]

    return allows


def cross_product(a1: EditAutomaton, a2: EditAutomaton, P: Iterable[Action]) -> EditAutomaton:
    P = frozenset(P) | a1.alphabet | a2.alphabet
    root = (a1.resolve(a1.initial), a2.resolve(a2.initial))
    succ, live = product_graph(_allow_view(a1, P), _allow_view(a2, P), root)
    if not live or live[0] != root:
        return EditAutomaton({"dead": suppress_all_body("dead", P)}, "dead", P)
    ids = {p: f"p{i}" for i, p in enumerate(live)}
    states = {ids[p]: product_arms(succ[p], ids, ids[p], P) for p in live}
    return EditAutomaton(states, ids[root], P)


# -- serialization ----------------------------------------------------------------

def _label_json(lab: EditLabel):
    out = {"op": lab.op, "action": str(lab.action)}
    if lab.inserted is not None:
        out["inserted"] = str(lab.inserted)
    return out


def _sorted_ids(ids):
    def key(s):
        head = s.rstrip("0123456789")
        tail = s[len(head):]
        return (head, int(tail) if tail else -1, s)

    return sorted(ids, key=key)


def export(a: EditAutomaton, format: str = "json") -> bytes:
    a = a.normalized()
    if format == "json":
        states = {}
        for s in _sorted_ids(a.states):
            b = a.states[s]
            if b is GO:
                states[s] = {"kind": "go"}
            else:
                arms = sorted(b, key=_arm_key)
                states[s] = {"kind": "sum", "arms": [{"label": _label_json(l), "to": t} for l, t in arms]}
        doc = {"initial": a.initial, "alphabet": [str(x) for x in sorted(a.alphabet)], "states": states}
        return (json.dumps(doc, indent=2) + "\n").encode()
    if format == "dot":
        lines = ["digraph edit_automaton {", "  rankdir=LR;"]
        for s in _sorted_ids(a.states):
            attrs = ["shape=doublecircle" if a.states[s] is GO else "shape=circle"]
            if s == a.initial:
                attrs.append("penwidth=2")
            lines.append(f'  "{s}" [{", ".join(attrs)}];')
        for s in _sorted_ids(a.states):
            b = a.states[s]
            if b is GO:
                lines.append(f'  "{s}" -> "{s}" [label="go"];')
                continue
            for lab, t in sorted(b, key=_arm_key):
                lines.append(f'  "{s}" -> "{t}" [label="{lab}"];')
        lines.append("}")
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown export format {format!r}")


def import_json(data) -> EditAutomaton:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    doc = json.loads(data) if isinstance(data, str) else data
    try:
        states = {}
        for sid, spec in doc["states"].items():
            if spec["kind"] == "go":
                states[sid] = GO
                continue
            if spec["kind"] != "sum":
                raise AutomatonError(f"unknown state kind {spec['kind']!r}")
            arms = []
            for arm in spec["arms"]:
                lab = arm["label"]
                ins = lab.get("inserted")
                arms.append((EditLabel(lab["op"], parse_action(lab["action"]), parse_action(ins) if ins else None), arm["to"]))
            states[sid] = tuple(arms)
        alphabet = [parse_action(x) for x in doc.get("alphabet", ())]
        return EditAutomaton(states, doc["initial"], alphabet)
    except (KeyError, TypeError) as exc:
        raise AutomatonError(f"malformed automaton document: {exc}") from None
