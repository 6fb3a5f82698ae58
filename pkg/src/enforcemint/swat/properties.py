"""Enforced properties for the three PLCs, with plant-derived parameters."""

from __future__ import annotations

from typing import Dict, Optional

from ..combinators import CombinatorEnv
from ..parser import parse_property
from .plant import PlantConfig, Thresholds, derive_timings
from .plcs import plc_alphabet, plc_maxa

# name -> (PLC, template); the parameters are filled in by `parameters`.
TEMPLATES: Dict[str, tuple] = {
    "e1": (1, "(CBP(s:h1, a:off1, 1, {m}))* & (CBP(s:h1, a:off2, 1, {m}))*"),
    "e1'": (1, "(CBP(s:h1, a:off1, 1, {m}))* & (CBP(s:h1, a:off2, 1, {m}))* & (CBE(c?close, a:close_v, 1, 1))*"),
    "e1''": (1, "(BME({{a:open_v, a:close_v}}, {window}))*"),
    "e2": (2, "(CBP(s:h2, c!close, 1, {u}))*"),
    "e3": (3, "(CBP(s:h3, a:on3, 1, {w}))*"),
    "e3'": (3, "(CBP(s:l3, a:off3, 1, {w_off}))*"),
}

# Property names may be written with primes or as e1p / e1pp.
ALIASES = {"e1p": "e1'", "e1pp": "e1''", "e3p": "e3'"}

MUTEX_CYCLES = 100   # the mutual exclusion window of e1'' before scaling


def canonical(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in TEMPLATES:
        raise KeyError(f"unknown property {name!r}; known: {', '.join(TEMPLATES)}")
    return name


def parameters(cfg: PlantConfig = PlantConfig(), thr: Thresholds = Thresholds(), scale: float = 0.1) -> Dict[str, int]:
    params = derive_timings(cfg, thr).parameters()
    params["window"] = max(1, int(round(MUTEX_CYCLES * scale)))
    return params


def property_text(name: str, params: Optional[Dict[str, int]] = None) -> str:
    plc, template = TEMPLATES[canonical(name)]
    return template.format(**(params or parameters()))


def plc_of(name: str) -> int:
    return TEMPLATES[canonical(name)][0]


def plc_env(plc: int) -> CombinatorEnv:
    return CombinatorEnv.from_alphabet(plc_alphabet(plc), plc_maxa(plc))


def build_property(text: str, plc: int):
    return parse_property(text, plc_env(plc))
