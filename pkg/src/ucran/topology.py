"""Nodes, links, cells and the topologies of the three RAN architectures."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable

from .errors import RoutingError, ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .config import ScenarioConfig
    from .power import PowerProfile

FT = 0.3048


class NodeKind(Enum):
    MACRO_BS = "MacroBS"
    SRRH = "SRRH"
    FRRH_PASSIVE = "FRRHPassive"
    FRRH_ACTIVE = "FRRHActive"
    BBU_POOL = "BBUPool"


class LinkKind(Enum):
    OPTICAL_FRONTHAUL = "OpticalFronthaul"
    WIRELESS_FRONTHAUL = "WirelessFronthaul"
    MICROWAVE_BACKHAUL = "MicrowaveBackhaul"
    RF_ACCESS = "RFAccess"


class Architecture(Enum):
    MACRO = "macro"
    CRAN = "cran"
    UCRAN = "ucran"

    @property
    def label(self) -> str:
        return {"macro": "Macro", "cran": "CRAN", "ucran": "UCRAN"}[self.value]


class FrrhState(Enum):
    STANDBY = "Standby"
    CHARGING = "Charging"
    EN_ROUTE = "EnRoute"
    DEPLOYED = "Deployed"
    RETURNING = "Returning"

    @property
    def flying(self) -> bool:
        return self in (FrrhState.EN_ROUTE, FrrhState.DEPLOYED, FrrhState.RETURNING)


AERIAL_KINDS = (NodeKind.FRRH_PASSIVE, NodeKind.FRRH_ACTIVE)
GROUND_TX_KINDS = (NodeKind.MACRO_BS, NodeKind.SRRH)


@dataclass(frozen=True)
class NodeSpec:
    id: int
    name: str
    kind: NodeKind
    position: tuple[float, float, float]
    tx_power_dbm: float
    capacity_prbs: int
    proc_rate: float
    power: "PowerProfile"
    battery_wh: float | None = None
    cell: int | None = None

    @property
    def is_aerial(self) -> bool:
        return self.kind in AERIAL_KINDS

    @property
    def altitude(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class LinkSpec:
    id: int
    endpoints: tuple[int, int]
    kind: LinkKind
    fixed_latency: float
    capacity_bps: float

    def other(self, node_id: int) -> int:
        a, b = self.endpoints
        return b if node_id == a else a


@dataclass(frozen=True)
class Cell:
    id: int
    serving_nodes: tuple[int, ...]
    area_km2: float
    max_ues: int
    center: tuple[float, float] = (0.0, 0.0)

    @property
    def radius_m(self) -> float:
        return math.sqrt(self.area_km2 * 1e6 / math.pi)


@dataclass(frozen=True)
class Topology:
    nodes: tuple[NodeSpec, ...]
    links: tuple[LinkSpec, ...]
    cells: tuple[Cell, ...]
    architecture: Architecture
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> NodeSpec:
        return self._by_id[node_id]

    def cell(self, cell_id: int) -> Cell:
        for c in self.cells:
            if c.id == cell_id:
                return c
        raise KeyError(cell_id)

    def of_kind(self, *kinds: NodeKind) -> list[NodeSpec]:
        return [n for n in self.nodes if n.kind in kinds]

    @property
    def frrhs(self) -> list[NodeSpec]:
        return self.of_kind(*AERIAL_KINDS)

    @property
    def bbu(self) -> NodeSpec | None:
        pools = self.of_kind(NodeKind.BBU_POOL)
        return pools[0] if pools else None

    def adjacency(self) -> dict[int, list[LinkSpec]]:
        adj: dict[int, list[LinkSpec]] = {n.id: [] for n in self.nodes}
        for link in self.links:
            for end in link.endpoints:
                adj.setdefault(end, []).append(link)
        return adj

    def route(self, src: int, dst: int) -> list[LinkSpec]:
        """Fewest-hop route (ties broken by link id) as an ordered link list."""
        if src == dst:
            return []
        adj = self.adjacency()
        prev: dict[int, LinkSpec] = {}
        seen = {src}
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for link in sorted(adj.get(u, []), key=lambda l: l.id):
                v = link.other(u)
                if v in seen:
                    continue
                seen.add(v)
                prev[v] = link
                if v == dst:
                    path = []
                    while v != src:
                        path.append(prev[v])
                        v = prev[v].other(v)
                    return path[::-1]
                queue.append(v)
        raise RoutingError(f"no route from node {src} to node {dst}")

    def hop_depths(self, root: int) -> dict[int, int]:
        adj = self.adjacency()
        depth = {root: 0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for link in adj.get(u, []):
                v = link.other(u)
                if v not in depth:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        return depth

    def to_dict(self) -> dict:
        def enc(obj):
            if isinstance(obj, Enum):
                return obj.value
            if isinstance(obj, dict):
                return {k: enc(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [enc(v) for v in obj]
            return obj
        return {
            "architecture": self.architecture.value,
            "nodes": [enc(asdict(n)) for n in self.nodes],
            "links": [enc(asdict(l)) for l in self.links],
            "cells": [enc(asdict(c)) for c in self.cells],
        }


# -- construction ---------------------------------------------------------

def cell_radius(area_km2: float) -> float:
    return math.sqrt(area_km2 * 1e6 / math.pi)


def cell_center(index: int, radius: float) -> tuple[float, float]:
    """Cells sit on the x axis, ``2 * radius`` apart; ``index`` is 1-based."""
    return (2.0 * radius * (index - 1), 0.0)


def ring_positions(center: tuple[float, float], count: int, ring_radius: float,
                   altitude: float) -> list[tuple[float, float, float]]:
    """Evenly spaced hover points on a ring around ``center``."""
    out = []
    for k in range(count):
        ang = 2.0 * math.pi * k / max(count, 1)
        out.append((center[0] + ring_radius * math.cos(ang),
                    center[1] + ring_radius * math.sin(ang), altitude))
    return out


def distance(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    return math.dist(a, b)


def build_topology(config: "ScenarioConfig") -> Topology:
    from .channel import free_space_loss, link_rate, prbs_for

    arch = config.scenario.architecture
    tp = config.topology
    pw = config.power
    if tp.cells < 1:
        raise ValidationError("topology.cells must be >= 1")
    if arch is not Architecture.MACRO and tp.bbu_pools < 1:
        raise ValidationError(f"{arch.label} requires a BBU pool (topology.bbu_pools = 0)")
    ground_prbs = prbs_for(tp.bandwidth_mhz * 1e6) * tp.sched_window_tti
    if ground_prbs <= 0 or config.traffic.demand_prbs <= 0:
        raise ValidationError("node capacity must be > 0")
    radius = cell_radius(tp.area_km2)
    height = tp.height_ft * FT
    max_ues = ground_prbs // config.traffic.demand_prbs

    nodes: list[NodeSpec] = []
    links: list[LinkSpec] = []
    cells: list[Cell] = []

    if arch is Architecture.MACRO:
        for k in range(1, tp.cells + 1):
            cx, cy = cell_center(k, radius)
            nodes.append(NodeSpec(k, f"MBS{k}", NodeKind.MACRO_BS, (cx, cy, height),
                                  tp.tx_power_dbm, ground_prbs, tp.macro_proc_rate,
                                  pw.profile(NodeKind.MACRO_BS), cell=k))
            cells.append(Cell(k, (k,), tp.area_km2, max_ues, (cx, cy)))
        return Topology(tuple(nodes), (), tuple(cells), arch)

    bbu_x = radius * (tp.cells - 1)
    nodes.append(NodeSpec(0, "BBU", NodeKind.BBU_POOL, (bbu_x, -radius, 0.0), 0.0, 0,
                          tp.bbu_proc_rate, pw.profile(NodeKind.BBU_POOL)))
    link_id = 0
    for k in range(1, tp.cells + 1):
        cx, cy = cell_center(k, radius)
        nodes.append(NodeSpec(k, f"S-RRH{k}", NodeKind.SRRH, (cx, cy, height), tp.tx_power_dbm,
                              ground_prbs, 0.0, pw.profile(NodeKind.SRRH), cell=k))
        cells.append(Cell(k, (k,), tp.area_km2, max_ues, (cx, cy)))
        link_id += 1
        links.append(LinkSpec(link_id, (k, 0), LinkKind.OPTICAL_FRONTHAUL,
                              tp.optical_latency_s, tp.optical_capacity_bps))

    if arch is Architecture.UCRAN:
        if tp.frrh_count < 1:
            raise ValidationError("UCRAN requires topology.frrh_count >= 1")
        kind = NodeKind.FRRH_ACTIVE if tp.frrh_kind == "active" else NodeKind.FRRH_PASSIVE
        proc = tp.frrh_proc_rate if kind is NodeKind.FRRH_ACTIVE else 0.0
        frrh_prbs = prbs_for(tp.frrh_bandwidth_mhz * 1e6) * tp.sched_window_tti
        home = cell_center(tp.home_cell, radius)
        # fronthaul sized for the hover ring around the serving S-RRH
        fh_dist = math.hypot(tp.frrh_ring_fraction * radius, tp.frrh_altitude_ft * FT - height)
        fh_rate = link_rate(tp.frrh_tx_power_dbm,
                            free_space_loss(fh_dist, config.channel.carrier_hz),
                            tp.wireless_fh_bandwidth_mhz * 1e6, config.channel).rate_bps
        first = tp.cells + 1
        for j in range(tp.frrh_count):
            nid = first + j
            nodes.append(NodeSpec(nid, f"F-RRH{j + 1}", kind, (home[0], home[1], 0.0),
                                  tp.frrh_tx_power_dbm, frrh_prbs, proc,
                                  pw.profile(kind), battery_wh=tp.frrh_battery_wh,
                                  cell=tp.home_cell))
            for k in range(1, tp.cells + 1):
                link_id += 1
                links.append(LinkSpec(link_id, (nid, k), LinkKind.WIRELESS_FRONTHAUL,
                                      tp.wireless_fh_latency_s, fh_rate))
    return Topology(tuple(nodes), tuple(links), tuple(cells), arch)


def build_cluster_topology(head: NodeSpec, members: Iterable[NodeSpec], *, fanout: int = 3,
                           bbu: NodeSpec | None = None, link_latency_s: float = 1e-4,
                           link_capacity_bps: float = 100e6, backhaul_latency_s: float = 2e-4,
                           backhaul_capacity_bps: float = 1e9, area_km2: float = 3.0,
                           demand_prbs: int = 2) -> Topology:
    """Extended star rooted at an MEC-enabled head.

    Members fill the head's ``fanout`` slots first, then attach breadth-first
    under the depth-1 members, so nobody sits more than two hops from the head.
    """
    from .power import BBU_PROFILE

    members = list(members)
    if head.kind is not NodeKind.FRRH_ACTIVE:
        raise ValidationError("cluster-head must be MEC-enabled")
    for m in members:
        if not m.is_aerial:
            raise ValidationError(f"cluster member {m.name} is not an F-RRH")
    if fanout < 1:
        raise ValidationError("fanout must be >= 1")
    if len(members) > fanout + fanout * fanout:
        raise ValidationError(
            f"{len(members)} members exceed the depth-2 capacity of fan-out {fanout}")
    if bbu is None:
        used = {head.id, *(m.id for m in members)}
        bbu_id = 0 if 0 not in used else max(used) + 1
        bbu = NodeSpec(bbu_id, "BBU", NodeKind.BBU_POOL, (0.0, 0.0, 0.0), 0.0, 0, 2000.0,
                       BBU_PROFILE)

    links = [LinkSpec(1, (head.id, bbu.id), LinkKind.MICROWAVE_BACKHAUL,
                      backhaul_latency_s, backhaul_capacity_bps)]
    depth1 = members[:fanout]
    for m in depth1:
        links.append(LinkSpec(len(links) + 1, (head.id, m.id), LinkKind.WIRELESS_FRONTHAUL,
                              link_latency_s, link_capacity_bps))
    for i, m in enumerate(members[fanout:]):
        parent = depth1[i // fanout]
        links.append(LinkSpec(len(links) + 1, (parent.id, m.id), LinkKind.WIRELESS_FRONTHAUL,
                              link_latency_s, link_capacity_bps))
    serving = (head, *members)
    capacity = sum(n.capacity_prbs for n in serving)
    cell = Cell(1, tuple(n.id for n in serving), area_km2, max(1, capacity // demand_prbs),
                (head.position[0], head.position[1]))
    return Topology((bbu, head, *members), tuple(links), (cell,), Architecture.UCRAN)


# -- validation ------------------------------------------------------------

def validate_topology(t: Topology) -> list[str]:
    """Every broken invariant as ``"<where>: <rule>"``; empty when valid."""
    out: list[str] = []
    ids = [n.id for n in t.nodes]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(f"node {dup}: duplicate node id")
    lids = [l.id for l in t.links]
    for dup in sorted({i for i in lids if lids.count(i) > 1}):
        out.append(f"link {dup}: duplicate link id")
    by_id = {n.id: n for n in t.nodes}

    ground_tx = [n.tx_power_dbm for n in t.nodes if n.kind in GROUND_TX_KINDS]
    for n in t.nodes:
        where = f"node {n.id} ({n.name})"
        if n.kind is NodeKind.FRRH_PASSIVE and n.proc_rate != 0:
            out.append(f"{where}: passive F-RRH must have proc_rate = 0")
        if n.kind is NodeKind.FRRH_ACTIVE and n.proc_rate <= 0:
            out.append(f"{where}: active F-RRH must have proc_rate > 0")
        if n.altitude < 0:
            out.append(f"{where}: altitude must be >= 0")
        if n.is_aerial:
            if n.battery_wh is None or n.battery_wh <= 0:
                out.append(f"{where}: F-RRH needs a positive battery_wh")
            if ground_tx and n.tx_power_dbm > min(ground_tx):
                out.append(f"{where}: F-RRH tx_power exceeds ground node tx_power")
        elif n.battery_wh is not None:
            out.append(f"{where}: battery_wh only applies to F-RRHs")
        if n.kind is not NodeKind.BBU_POOL and n.capacity_prbs <= 0:
            out.append(f"{where}: capacity_prbs must be > 0")

    for l in t.links:
        where = f"link {l.id}"
        a, b = (by_id.get(e) for e in l.endpoints)
        if a is None or b is None:
            out.append(f"{where}: endpoint not in topology")
            continue
        kinds = {a.kind, b.kind}
        if l.kind is LinkKind.OPTICAL_FRONTHAUL and kinds != {NodeKind.SRRH, NodeKind.BBU_POOL}:
            out.append(f"{where}: OpticalFronthaul only between SRRH and BBUPool")
        if l.kind is LinkKind.WIRELESS_FRONTHAUL:
            ok = (a.is_aerial and (b.is_aerial or b.kind is NodeKind.SRRH)) or \
                 (b.is_aerial and a.kind is NodeKind.SRRH)
            if not ok:
                out.append(f"{where}: WirelessFronthaul only between an F-RRH and an SRRH/F-RRH")
        if l.kind is LinkKind.MICROWAVE_BACKHAUL and NodeKind.BBU_POOL not in kinds:
            out.append(f"{where}: MicrowaveBackhaul must terminate at a BBUPool")
        if l.fixed_latency < 0:
            out.append(f"{where}: fixed_latency must be >= 0")
        if l.capacity_bps <= 0:
            out.append(f"{where}: capacity_bps must be > 0")

    for c in t.cells:
        where = f"cell {c.id}"
        if c.area_km2 <= 0:
            out.append(f"{where}: area_km2 must be > 0")
        if c.max_ues <= 0:
            out.append(f"{where}: max_ues must be > 0")
        for nid in c.serving_nodes:
            if nid not in by_id:
                out.append(f"{where}: serving node {nid} not in topology")

    n_frrh = len(t.frrhs)
    if t.architecture is Architecture.UCRAN and n_frrh == 0:
        out.append("topology: UCRAN requires at least one F-RRH")
    if t.architecture is not Architecture.UCRAN and n_frrh:
        out.append(f"topology: {t.architecture.label} must not contain F-RRHs")

    pools = {n.id for n in t.nodes if n.kind is NodeKind.BBU_POOL}
    if t.architecture is not Architecture.MACRO and not pools:
        out.append(f"topology: {t.architecture.label} requires a BBU pool")
    elif pools:
        reach: set[int] = set()
        for p in pools:
            reach |= set(t.hop_depths(p))
        for n in t.nodes:
            if n.kind in (NodeKind.SRRH, *AERIAL_KINDS) and n.id not in reach:
                out.append(f"node {n.id} ({n.name}): not connected to a BBU pool")
    return out
