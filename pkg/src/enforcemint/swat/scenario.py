"""Closed-loop runs of the plant, the PLCs, their enforcers and an attack."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional

import yaml

from ..automata import EditAutomaton
from ..calculus import validate
from ..runtime import Monitored, Network, SchedulerPolicy, run
from ..synthesis import synthesize
from ..trace import Kind
from .attacks import AttackError, AttackSpec, apply_attack
from .plant import PlantConfig, PlantConfigError, PlantState, Thresholds, actuate, plant_tick, sample_sensors
from .plcs import build_plc, plc_alphabet
from .properties import build_property, canonical, parameters, plc_of, property_text

log = logging.getLogger(__name__)

CHATTER_WINDOW = 10
CHATTER_REVERSALS = 4

SECTIONS = {"plant", "thresholds", "plcs", "properties", "attack", "run", "expect"}
INDICATORS = ("overflow_t1", "overflow_t2", "overflow_t3", "pump_dry", "chattering")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    plant: PlantConfig = field(default_factory=PlantConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    enforce: Dict[int, Optional[str]] = field(default_factory=lambda: {1: None, 2: None, 3: None})
    texts: Dict[str, str] = field(default_factory=dict)   # property name -> DSL text
    attack: Optional[AttackSpec] = None
    horizon: int = 2000
    seed: int = 0
    scale: float = 0.1
    tie_break: str = "first_declared"
    expect: Dict[str, bool] = field(default_factory=dict)

    def property_text(self, name: str) -> str:
        if name in self.texts:
            return self.texts[name]
        return property_text(name, parameters(self.plant, self.thresholds, self.scale))


def _dataclass_from(cls, data, what):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {what!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown keys in {what!r}: {', '.join(sorted(map(str, extra)))}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


def config_from_dict(data: dict, scale: Optional[float] = None, horizon: Optional[int] = None,
                     seed: Optional[int] = None) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("a scenario must be a mapping of sections")
    unknown = set(data) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(sorted(map(str, unknown)))}")
    cfg = ScenarioConfig()
    cfg.plant = _dataclass_from(PlantConfig, data.get("plant"), "plant")
    cfg.thresholds = _dataclass_from(Thresholds, data.get("thresholds"), "thresholds")
    try:
        cfg.plant.check(cfg.thresholds)
    except PlantConfigError as exc:
        raise ConfigError(str(exc)) from None

    r = data.get("run") or {}
    if not isinstance(r, dict):
        raise ConfigError("section 'run' must be a mapping")
    extra = set(r) - {"horizon", "seed", "scale", "tie_break"}
    if extra:
        raise ConfigError(f"unknown keys in 'run': {', '.join(sorted(extra))}")
    cfg.horizon = int(horizon if horizon is not None else r.get("horizon", cfg.horizon))
    cfg.seed = int(seed if seed is not None else r.get("seed", cfg.seed))
    cfg.scale = float(scale if scale is not None else r.get("scale", cfg.scale))
    cfg.tie_break = r.get("tie_break", cfg.tie_break)
    if cfg.horizon < 1 or cfg.scale <= 0:
        raise ConfigError("horizon and scale must be positive")
    if cfg.tie_break not in ("first_declared", "seeded_random"):
        raise ConfigError(f"unknown tie_break {cfg.tie_break!r}")

    texts = data.get("properties") or {}
    if not isinstance(texts, dict) or not all(isinstance(v, str) for v in texts.values()):
        raise ConfigError("section 'properties' maps names to property texts")
    cfg.texts = {str(k): v for k, v in texts.items()}

    plcs = data.get("plcs") or {}
    if not isinstance(plcs, dict):
        raise ConfigError("section 'plcs' must be a mapping")
    for key, entry in plcs.items():
        i = _plc_index(key)
        name = entry.get("enforce") if isinstance(entry, dict) else entry
        if name in (None, "none", "go"):
            cfg.enforce[i] = None
            continue
        name = str(name)
        if name not in cfg.texts:
            try:
                name = canonical(name)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0])) from None
            if plc_of(name) != i:
                raise ConfigError(f"property {name} belongs to PLC{plc_of(name)}, not PLC{i}")
        cfg.enforce[i] = name

    a = data.get("attack")
    if a is not None:
        if isinstance(a, int):
            a = {"id": a}
        if not isinstance(a, dict):
            raise ConfigError("section 'attack' must be a mapping or an attack number")
        a = dict(a)
        a.setdefault("scale", cfg.scale)
        try:
            cfg.attack = _dataclass_from(AttackSpec, a, "attack")
        except AttackError as exc:
            raise ConfigError(str(exc)) from None

    exp = data.get("expect") or {}
    if not isinstance(exp, dict) or set(exp) - set(INDICATORS):
        raise ConfigError(f"section 'expect' may only name {', '.join(INDICATORS)}")
    cfg.expect = {k: bool(v) for k, v in exp.items()}
    return cfg


def _plc_index(key) -> int:
    text = str(key).lower().removeprefix("plc")
    if text not in ("1", "2", "3"):
        raise ConfigError(f"unknown PLC {key!r}")
    return int(text)


def load_config(path, **overrides) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(data, **overrides)


# -- running ----------------------------------------------------------------------

@dataclass
class ScenarioReport:
    overflow: List[bool]
    pump_dry: bool
    chattering: int
    reversals: int
    mitigations: Dict[str, Dict[str, int]]
    ticks: int
    steps: int
    timesync_with_tau: int
    stuck: bool
    diverged: bool
    elapsed: float
    parameters: Dict[str, int]
    properties: Dict[str, Optional[str]]
    final_levels: List[float]
    levels_csv: str = field(repr=False, default="")
    actions_csv: str = field(repr=False, default="")
    emitted: Dict[str, List[str]] = field(repr=False, default_factory=dict)

    @property
    def indicators(self) -> Dict[str, bool]:
        return {
            "overflow_t1": self.overflow[0],
            "overflow_t2": self.overflow[1],
            "overflow_t3": self.overflow[2],
            "pump_dry": self.pump_dry,
            "chattering": self.chattering > 0,
        }

    def unmet(self, expect: Dict[str, bool]) -> Dict[str, bool]:
        got = self.indicators
        return {k: got[k] for k, v in expect.items() if got[k] != v}

    def summary(self) -> dict:
        out = asdict(self)
        for k in ("levels_csv", "actions_csv", "emitted"):
            out.pop(k)
        out["indicators"] = self.indicators
        return out

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def enforcer(cfg: ScenarioConfig, plc: int) -> EditAutomaton:
    alphabet = plc_alphabet(plc)
    name = cfg.enforce.get(plc)
    if name is None:
        return EditAutomaton.go(alphabet)
    e = build_property(cfg.property_text(name), plc)
    return synthesize(e, alphabet)


def build_network(cfg: ScenarioConfig) -> Network:
    nodes = []
    for i in (1, 2, 3):
        P, defs = build_plc(i)
        if cfg.attack is not None and cfg.attack.target == i:
            P, defs = apply_attack((P, defs), cfg.attack, cfg.thresholds)
            validate(P, defs)
        nodes.append(Monitored.start(enforcer(cfg, i), P, defs))
    return Network(tuple(nodes))


class _Chatter:
    def __init__(self):
        self.recent = deque()
        self.reversals = 0
        self.episodes = 0

    def reversal(self, clock: int):
        self.reversals += 1
        self.recent.append(clock)

    def tick(self, clock: int):
        while self.recent and self.recent[0] <= clock - CHATTER_WINDOW:
            self.recent.popleft()
        if len(self.recent) >= CHATTER_REVERSALS:
            self.episodes += 1


def _absorb_sends(_node, a) -> bool:
    # The rest of the plant network takes unanswered requests but never
    # issues any of its own.
    return a.kind is Kind.SEND


def run_scenario(cfg: ScenarioConfig, audit: bool = True) -> ScenarioReport:
    t0 = time.perf_counter()
    net = build_network(cfg)
    state = PlantState()
    sensors = sample_sensors(state, cfg.thresholds)
    chatter = _Chatter()
    mitig = {f"PLC{i}": {"suppress": 0, "insert": 0} for i in (1, 2, 3)}
    emitted = {f"PLC{i}": [] for i in (1, 2, 3)}

    lv = io.StringIO()
    lw = csv.writer(lv, lineterminator="\n")
    lw.writerow(["tick", "t1", "t2", "t3", "pump1", "pump2", "pump3", "valve"])

    def on_move(rec, _net):
        nonlocal state, sensors
        if rec.rule == "timesync":
            state = plant_tick(state, cfg.plant)
            sensors = sample_sensors(state, cfg.thresholds)
            chatter.tick(rec.clock + 1)
            lw.writerow([rec.clock + 1, *(round(x, 3) for x in state.levels),
                         int(state.pump1), int(state.pump2), int(state.pump3), int(state.valve)])
        for i, mv in rec.parts:
            if mv.rule in ("suppress", "insert"):
                mitig[f"PLC{i + 1}"][mv.rule] += 1
            if mv.rule != "suppress":
                emitted[f"PLC{i + 1}"].append(str(mv.action))
            if mv.action.kind is Kind.ACT:
                before = state.valve
                state = actuate(state, mv.action)
                if state.valve != before:
                    chatter.reversal(rec.clock)

    lw.writerow([0, *state.levels, 0, 0, 0, 0])
    trace = run(
        net,
        SchedulerPolicy(cfg.seed, cfg.tie_break),
        horizon=cfg.horizon,
        env=lambda i, a: a == sensors[i],
        outside=_absorb_sends,
        on_move=on_move,
        audit=audit,
    )
    if trace.stuck:
        log.warning("network stuck at tick %d", trace.ticks)
    return ScenarioReport(
        overflow=list(state.overflow),
        pump_dry=state.pump_dry,
        chattering=chatter.episodes,
        reversals=chatter.reversals,
        mitigations=mitig,
        ticks=trace.ticks,
        steps=len(trace.records),
        timesync_with_tau=trace.timesync_with_tau(),
        stuck=trace.stuck,
        diverged=trace.diverged,
        elapsed=time.perf_counter() - t0,
        parameters=parameters(cfg.plant, cfg.thresholds, cfg.scale),
        properties={f"PLC{i}": cfg.enforce.get(i) for i in (1, 2, 3)},
        final_levels=list(state.levels),
        levels_csv=lv.getvalue(),
        actions_csv=trace.to_csv(),
        emitted=emitted,
    )


# Which properties each attack is matched against.
DESIGNATED = {
    1: {1: "e1'", 2: "e2", 3: "e3"},
    2: {1: "e1'", 2: "e2", 3: "e3"},
    3: {1: "e1''"},
    4: {1: "e1''"},
    5: {3: "e3'"},
}
DAMAGE = {1: "overflow_t2", 2: "overflow_t2", 3: "chattering", 4: "chattering", 5: "pump_dry"}


def attack_config(attack: int, enforced: bool, horizon: int = 2000, scale: float = 0.1, seed: int = 0) -> ScenarioConfig:
    data = {"attack": {"id": attack}, "run": {"horizon": horizon, "scale": scale, "seed": seed}}
    if enforced:
        data["plcs"] = {i: name for i, name in DESIGNATED[attack].items()}
    return config_from_dict(data)
