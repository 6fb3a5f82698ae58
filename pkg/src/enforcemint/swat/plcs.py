"""The three PLCs of the water-treatment testbed, as controller programs."""

from __future__ import annotations

from typing import Dict, Tuple

from ..calculus import Defs, Proc, parse_controller, validate

# PLC1: pumps 1/2 and the valve between T1 and T2.  The outer timeout of
# P1on goes back to P1on even though the pumps are switched off there; this
# is the program as designed, kept on purpose.
PLC1 = """
P1off = tick . sens{
    l1 -> act a:on1 . act a:on2 . act a:close_v . end . P1on,
    m1 -> in{ c?open  -> act a:off1 . act a:off2 . act a:open_v  . end . P1off,
              c?close -> act a:off1 . act a:off2 . act a:close_v . end . P1off }
          else act a:off1 . act a:off2 . act a:close_v . end . P1off,
    h1 -> in{ c?open  -> act a:off1 . act a:off2 . act a:open_v  . end . P1off,
              c?close -> act a:off1 . act a:off2 . act a:close_v . end . P1off }
          else act a:off1 . act a:off2 . act a:close_v . end . P1off
  } else act a:off1 . act a:off2 . act a:close_v . end . P1off

P1on = tick . sens{
    l1 -> act a:on1 . act a:on2 . act a:close_v . end . P1on,
    m1 -> in{ c?open  -> act a:on1 . act a:on2 . act a:open_v  . end . P1on,
              c?close -> act a:on1 . act a:on2 . act a:close_v . end . P1on }
          else act a:on1 . act a:on2 . act a:close_v . end . P1on,
    h1 -> in{ c?open  -> act a:off1 . act a:off2 . act a:open_v  . end . P1off,
              c?close -> act a:off1 . act a:off2 . act a:close_v . end . P1off }
          else act a:off1 . act a:off2 . act a:close_v . end . P1off
  } else act a:off1 . act a:off2 . act a:close_v . end . P1on
"""

# PLC2: level of T2, asks PLC1 to open or close the valve.
PLC2 = """
P2up = tick . sens{
    l2 -> out c!open  . end . P2up   else end . P2up,
    m2 -> out c!open  . end . P2up   else end . P2up,
    h2 -> out c!close . end . P2down else end . P2up
  } else end . P2up

P2down = tick . sens{
    l2 -> out c!open  . end . P2up   else end . P2down,
    m2 -> out c!close . end . P2down else end . P2down,
    h2 -> out c!close . end . P2down else end . P2down
  } else end . P2down
"""

# PLC3: backwash pump of T3.  The sensing default switches the pump off.
PLC3 = """
P3off = tick . sens{
    l3 -> act a:off3 . end . P3off,
    m3 -> act a:off3 . end . P3off,
    h3 -> act a:on3  . end . P3on
  } else act a:off3 . end . P3off

P3on = tick . sens{
    l3 -> act a:off3 . end . P3off,
    m3 -> act a:on3  . end . P3on,
    h3 -> act a:on3  . end . P3on
  } else act a:off3 . end . P3off
"""

SOURCES: Dict[int, str] = {1: PLC1, 2: PLC2, 3: PLC3}


def build_plc(i: int) -> Tuple[Proc, Defs]:
    try:
        text = SOURCES[i]
    except KeyError:
        raise ValueError(f"no PLC {i}; the plant has PLCs 1, 2 and 3") from None
    return parse_controller(text)


def plc_alphabet(i: int):
    P, defs = build_plc(i)
    return validate(P, defs).alphabet


def plc_maxa(i: int) -> int:
    P, defs = build_plc(i)
    return validate(P, defs).maxa
