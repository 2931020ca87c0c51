"""Node power draw, network total power, and F-RRH battery depletion.

Ground nodes follow the usual static + load-proportional model
``P = static + slope * tx * load``; aerial nodes add a constant hover term
while airborne.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import DomainError, ValidationError
from .topology import FrrhState, NodeKind, Topology


@dataclass(frozen=True)
class PowerProfile:
    static_w: float
    slope: float
    tx_w: float
    hover_w: float = 0.0

    def __post_init__(self):
        if self.static_w < 0 or self.slope < 0 or self.tx_w < 0 or self.hover_w < 0:
            raise ValidationError(f"power profile terms must be >= 0: {self}")


@dataclass(frozen=True)
class BatteryState:
    remaining_wh: float
    capacity_wh: float

    def __post_init__(self):
        if not (0.0 <= self.remaining_wh <= self.capacity_wh):
            raise ValidationError(f"battery out of range: {self}")

    @property
    def depleted(self) -> bool:
        # tolerate the residue left by summing many small draws
        return self.remaining_wh <= 1e-9 * max(self.capacity_wh, 1.0)

    @property
    def fraction(self) -> float:
        return self.remaining_wh / self.capacity_wh if self.capacity_wh else 0.0


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def node_power(profile: PowerProfile, load_fraction: float, flying: bool = False) -> float:
    if not (0.0 <= load_fraction <= 1.0):
        raise DomainError(f"load_fraction must lie in [0, 1], got {load_fraction}")
    p = profile.static_w + profile.slope * profile.tx_w * load_fraction
    if flying:
        p += profile.hover_w
    return p


def frrh_power(profile: PowerProfile, state: FrrhState, load_fraction: float,
               standby_w: float, include_hover: bool = True) -> float:
    """Draw of one F-RRH in a given lifecycle state."""
    if state in (FrrhState.STANDBY, FrrhState.CHARGING):
        return standby_w
    load = load_fraction if state is FrrhState.DEPLOYED else 0.0
    return node_power(profile, load, flying=include_hover)


def total_power(topology: Topology, loads: Mapping[int, float],
                frrh_states: Mapping[int, FrrhState], *, standby_w: float = 2.0,
                bbu_per_srrh_w: float = 20.0, include_hover: bool = True) -> float:
    """Network draw in watts.

    Ground and aerial contributions are summed separately and added once, so
    a UC-RAN topology whose F-RRHs all idle is exactly the C-RAN figure plus
    the standby draw.
    """
    n_srrh = sum(1 for n in topology.nodes if n.kind is NodeKind.SRRH)
    ground = 0.0
    aerial = 0.0
    for node in topology.nodes:
        if node.kind is NodeKind.BBU_POOL:
            ground += node.power.static_w + bbu_per_srrh_w * n_srrh
        elif node.is_aerial:
            state = frrh_states.get(node.id, FrrhState.STANDBY)
            aerial += frrh_power(node.power, state, loads.get(node.id, 0.0),
                                 standby_w, include_hover)
        else:
            ground += node_power(node.power, loads.get(node.id, 0.0))
    return ground + aerial


def battery_step(state: BatteryState, draw_w: float, dt: float) -> BatteryState:
    if dt <= 0:
        raise DomainError("dt must be > 0")
    remaining = max(0.0, state.remaining_wh - draw_w * dt / 3600.0)
    return BatteryState(remaining, state.capacity_wh)


def charge_step(state: BatteryState, charge_w: float, dt: float) -> BatteryState:
    remaining = min(state.capacity_wh, state.remaining_wh + charge_w * dt / 3600.0)
    return BatteryState(remaining, state.capacity_wh)


def depletion_time(state: BatteryState, draw_w: float) -> float:
    """Seconds until empty under a constant draw (inf for zero draw)."""
    if draw_w <= 0:
        return math.inf
    return state.remaining_wh / draw_w * 3600.0


# defaults; the tx ratings are 43 dBm (ground) and 30 dBm (aerial)
MACRO_PROFILE = PowerProfile(static_w=130.0, slope=4.7, tx_w=20.0)
SRRH_PROFILE = PowerProfile(static_w=50.0, slope=4.7, tx_w=20.0)
BBU_PROFILE = PowerProfile(static_w=100.0, slope=0.0, tx_w=0.0)
FRRH_PROFILE = PowerProfile(static_w=5.0, slope=8.0, tx_w=1.0, hover_w=150.0)
