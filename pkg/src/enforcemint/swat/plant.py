"""Discrete three-tank plant.

Levels are percent of each tank's capacity.  One call to :func:`plant_tick`
advances the plant by one time slot using the actuator state current at
that moment; commands issued during a slot take effect at the next tick.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Dict, Tuple

from ..trace import Action, sens


class PlantConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Thresholds:
    low: float = 20.0
    high: float = 80.0

    def __post_init__(self):
        if not 0 < self.low < self.high < 100:
            raise PlantConfigError(f"need 0 < low < high < 100, got low={self.low} high={self.high}")


@dataclass(frozen=True)
class PlantConfig:
    in1: float = 0.8
    in2: float = 0.8
    out_valve: float = 1.2
    drain2: float = 0.8
    divert2: float = 0.3
    back3: float = 1.0
    back3_share: float = 0.1      # capacity of T3 relative to T2
    overflow_margin: float = 5.0
    dry_level: float = 5.0

    def __post_init__(self):
        for name in ("in1", "in2", "out_valve", "drain2", "divert2", "back3", "back3_share"):
            if getattr(self, name) < 0:
                raise PlantConfigError(f"{name} must be non-negative")
        if not self.in1 + self.in2 > self.out_valve:
            raise PlantConfigError("incoming flow into T1 must exceed the flow through the valve")

    def check(self, thr: Thresholds):
        if self.back3_share * 100 > 100 - thr.high:
            raise PlantConfigError("T2 must be able to take the whole content of T3 above its high mark")


@dataclass(frozen=True)
class PlantState:
    t1: float = 50.0
    t2: float = 50.0
    t3: float = 50.0
    pump1: bool = False
    pump2: bool = False
    pump3: bool = False
    valve: bool = False
    overflow: Tuple[bool, bool, bool] = (False, False, False)
    pump_dry: bool = False

    @property
    def levels(self) -> Tuple[float, float, float]:
        return (self.t1, self.t2, self.t3)


_ACTUATORS: Dict[str, Tuple[str, bool]] = {
    "on1": ("pump1", True), "off1": ("pump1", False),
    "on2": ("pump2", True), "off2": ("pump2", False),
    "on3": ("pump3", True), "off3": ("pump3", False),
    "open_v": ("valve", True), "close_v": ("valve", False),
}


def actuate(s: PlantState, a: Action) -> PlantState:
    """Apply an actuator command; anything else leaves the plant alone."""
    hit = _ACTUATORS.get(a.name) if a.kind.name == "ACT" else None
    if hit is None:
        return s
    attr, value = hit
    return replace(s, **{attr: value})


def plant_tick(s: PlantState, cfg: PlantConfig = PlantConfig()) -> PlantState:
    cap = 100.0 + cfg.overflow_margin
    through_valve = min(cfg.out_valve, s.t1) if s.valve else 0.0
    pumped3 = min(cfg.back3, s.t3) if s.pump3 else 0.0
    t1 = s.t1 + cfg.in1 * s.pump1 + cfg.in2 * s.pump2 - through_valve
    t2 = s.t2 + through_valve + pumped3 * cfg.back3_share - cfg.drain2
    t3 = s.t3 + cfg.divert2 - pumped3
    levels = tuple(min(max(x, 0.0), cap) for x in (t1, t2, t3))
    overflow = tuple(o or x > 100.0 for o, x in zip(s.overflow, levels))
    dry = s.pump_dry or (s.pump3 and levels[2] <= cfg.dry_level)
    return replace(s, t1=levels[0], t2=levels[1], t3=levels[2], overflow=overflow, pump_dry=dry)


def signal(level: float, thr: Thresholds) -> str:
    """Three-way level signal; a level exactly on a threshold reads as m."""
    if level < thr.low:
        return "l"
    if level > thr.high:
        return "h"
    return "m"


def offset_signal(level: float, offset: float, thr: Thresholds) -> str:
    return signal(level + offset, thr)


def band_representative(sig: str, thr: Thresholds) -> float:
    return {"l": thr.low / 2, "m": (thr.low + thr.high) / 2, "h": (thr.high + 100) / 2}[sig]


def sample_sensors(s: PlantState, thr: Thresholds) -> Tuple[Action, Action, Action]:
    """The one sensor read each PLC can perform in the current slot."""
    return tuple(sens(f"{signal(x, thr)}{i}") for i, x in enumerate(s.levels, start=1))


# -- derived timings ----------------------------------------------------------

def ticks_until(s: PlantState, cfg: PlantConfig, done, limit: int = 100_000) -> int:
    n = 0
    while not done(s):
        s = plant_tick(s, cfg)
        n += 1
        if n > limit:
            raise PlantConfigError("plant never reaches the requested level")
    return n


@dataclass(frozen=True)
class Timings:
    """Scan cycles the plant needs for the moves the properties reason about."""

    n: int   # empty T1 from high, pumps off, valve open
    v: int   # empty T2 from high, valve closed
    z: int   # empty T3 from high, pump on
    z_fill: int  # fill T3 from low, pump off

    def parameters(self) -> Dict[str, int]:
        # strict margins below each bound
        return {"m": max(1, self.n // 2), "u": max(1, self.v // 2),
                "w": max(1, self.z // 2), "w_off": max(1, self.z_fill // 2)}


_EPS = 1e-9  # keeps float drift from crossing a threshold one tick early


def derive_timings(cfg: PlantConfig, thr: Thresholds) -> Timings:
    hi, lo = thr.high + _EPS, thr.low - _EPS
    n = ticks_until(PlantState(t1=hi, valve=True), cfg, lambda s: s.t1 < lo)
    v = ticks_until(PlantState(t2=hi), cfg, lambda s: s.t2 < lo)
    z = ticks_until(PlantState(t3=hi, pump3=True), cfg, lambda s: s.t3 < lo)
    z_fill = ticks_until(PlantState(t3=lo), cfg, lambda s: s.t3 > hi)
    return Timings(n, v, z, z_fill)
