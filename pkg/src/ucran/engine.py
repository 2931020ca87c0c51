"""Discrete-event orchestration of the hotspot, disaster and terrain scenarios.

Session admission runs inside the kernel (:mod:`ucran.core`); everything the
kernel does not own (control ticks, F-RRH flights, power sampling, delay
accounting) is driven from a Python event queue.  Between two Python events
the kernel is advanced to the next event time, so the interleaving does not
depend on how often the controller wakes up.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from ._version import __version__
from .channel import (ChannelEnv, atg_path_loss, free_space_loss, link_rate,
                      terrestrial_path_loss)
from .config import ScenarioConfig, ScenarioKind
from .controller import ControllerState, UtilizationSample, control_step, utilization_factor
from .core import get_backend
from .errors import ConsistencyError, DropNoLink, DropNoProcessor, ValidationError
from .latency import (QueueModel, Site, SiteOption, hop_delay, mm1_expected_sojourn,
                      path_delay, processing_site_decision, total_delay)
from .power import BatteryState, battery_step, charge_step, frrh_power, total_power
from .report import MetricsReport, MetricsRow, Trace, aggregate, compute_metrics
from .topology import (FT, Architecture, Cell, FrrhState, LinkKind, LinkSpec, NodeKind,
                       NodeSpec, Topology, build_cluster_topology, build_topology, cell_center,
                       cell_radius, ring_positions)
from .traffic import generate_arrivals, generate_handover_wave, merge_streams


class EventKind(IntEnum):
    UE_ARRIVAL = 0
    UE_DEPARTURE = 1
    CONTROL_TICK = 2
    FRRH_ARRIVED = 3
    FRRH_RETURNED = 4
    TASK_ARRIVAL = 5
    TASK_DONE = 6
    METRICS_SAMPLE = 7
    END = 8


# equal-time order: releases before anything that might consume resources
_RANK = {
    EventKind.UE_DEPARTURE: 0, EventKind.TASK_DONE: 0, EventKind.FRRH_RETURNED: 0,
    EventKind.FRRH_ARRIVED: 1, EventKind.UE_ARRIVAL: 2, EventKind.TASK_ARRIVAL: 2,
    EventKind.CONTROL_TICK: 3, EventKind.METRICS_SAMPLE: 4, EventKind.END: 5,
}


@dataclass(order=True)
class Event:
    time: float
    rank: int
    seq: int
    kind: EventKind = field(compare=False)
    payload: object = field(compare=False, default=None)


class EventQueue:
    """Min-heap on (time, rank, seq); refuses to go back in time."""

    def __init__(self):
        self._heap: list[Event] = []
        self._seq = 0
        self.now = 0.0

    def push(self, time: float, kind: EventKind, payload=None) -> Event:
        if time < self.now:
            raise ConsistencyError(f"event {kind.name} scheduled in the past ({time} < {self.now})")
        ev = Event(time, _RANK[kind], self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)
        if ev.time < self.now:
            raise ConsistencyError(f"causality violated at seq {ev.seq}")
        self.now = ev.time
        return ev

    def __len__(self):
        return len(self._heap)


@dataclass
class RunResult:
    report: MetricsReport
    trace: Trace
    topology: Topology | None
    record: dict

    def __iter__(self):
        # allows ``report, trace = run(cfg)``
        return iter((self.report, self.trace))


def _f(x: float) -> str:
    return repr(float(x))


# -- hotspot ----------------------------------------------------------------

def ue_count_for(cfg: ScenarioConfig) -> int:
    return int(math.floor(cfg.traffic.load_fraction * cfg.max_ues() + 0.5))


def hotspot_workload(cfg: ScenarioConfig, topo: Topology, ue_count: int):
    """Local traffic in every cell plus the handover wave into the hotspot cell."""
    tr, sc, tp = cfg.traffic, cfg.scenario, cfg.topology
    if sc.duration_s <= 0:
        return []
    streams = []
    background = int(math.floor(tr.background_load * cfg.max_ues() + 0.5))
    kw = dict(mean_holding=tr.mean_holding_s, demand_prbs=tr.demand_prbs,
              demand_rate=tr.task_rate * tr.packet_bits)
    for cell in topo.cells:
        count = ue_count if cell.id == tp.hotspot_cell else background
        streams.append(generate_arrivals(cell, count, sc.duration_s, sc.seed,
                                         hard_cap=tr.hard_cap, **kw))
    if tr.handover_fraction > 0 and len(topo.cells) > 1 and tp.home_cell != tp.hotspot_cell:
        n_ho = int(math.floor(tr.handover_fraction * ue_count + 0.5))
        w0, w1 = tr.handover_window
        streams.append(generate_handover_wave(topo.cell(tp.home_cell), topo.cell(tp.hotspot_cell),
                                              n_ho, (w0 * sc.duration_s, w1 * sc.duration_s),
                                              sc.seed, **kw))
    return merge_streams(*streams)


def node_access_rate(node: NodeSpec, cfg: ScenarioConfig) -> float:
    """Cell-wide access rate of a serving node at the median UE distance."""
    env, tp = cfg.channel, cfg.topology
    if node.is_aerial:
        d = tp.frrh_cell_radius_m / math.sqrt(2.0)
        pl = atg_path_loss(d, tp.frrh_altitude_ft * FT - env.ue_height_m, env)
        bw = tp.frrh_bandwidth_mhz * 1e6
    else:
        d = cell_radius(tp.area_km2) / math.sqrt(2.0)
        pl = terrestrial_path_loss(math.hypot(d, node.altitude - env.ue_height_m), env)
        bw = tp.bandwidth_mhz * 1e6
    rate = link_rate(node.tx_power_dbm, pl, bw, env).rate_bps
    if rate <= 0:
        raise ValidationError(f"{node.name}: access link budget below the decode floor")
    return rate


_KERNEL_TAGS = ("ARR", "ADM", "PND", "BLK", "DEP", "DRP", "MOV")


class HotspotRun:
    def __init__(self, cfg: ScenarioConfig, backend=None):
        self.cfg = cfg
        self.k = backend or get_backend()
        self.topo = build_topology(cfg)
        self.arch = cfg.scenario.architecture
        self.ue_count = ue_count_for(cfg)
        self.trace = Trace({
            "scenario": "hotspot", "arch": self.arch.label, "ue_count": self.ue_count,
            "seed": cfg.scenario.seed, "duration": _f(cfg.scenario.duration_s),
            "warmup": _f(cfg.warmup_s),
        })

    # setup ---------------------------------------------------------------
    def _setup(self):
        cfg, topo = self.cfg, self.topo
        self.sessions = hotspot_workload(cfg, topo, self.ue_count)
        self.serving = [n for n in sorted(topo.nodes, key=lambda n: n.id)
                        if n.kind is not NodeKind.BBU_POOL]
        self.idx = {n.id: i for i, n in enumerate(self.serving)}
        self.cell_ids = sorted(c.id for c in topo.cells)
        self.cidx = {c: i for i, c in enumerate(self.cell_ids)}
        cov = np.zeros((len(self.cell_ids), len(self.serving)), dtype=np.uint8)
        avail = np.zeros(len(self.serving), dtype=np.uint8)
        for n in self.serving:
            if not n.is_aerial:
                cov[self.cidx[n.cell], self.idx[n.id]] = 1
                avail[self.idx[n.id]] = 1
        s = self.sessions
        self.core = self.k.AdmissionCore(
            np.array([x.arrival_time for x in s], dtype=float),
            np.array([x.holding_time for x in s], dtype=float),
            np.array([x.demand_prbs for x in s], dtype=np.int32),
            np.array([self.cidx[x.cell] for x in s], dtype=np.int32),
            np.array([n.capacity_prbs for n in self.serving], dtype=np.int32),
            cov, avail, cfg.controller.admission_timeout_s)
        self.rates = [node_access_rate(n, cfg) for n in self.serving]
        self.srrh_of_cell = {n.cell: n for n in topo.nodes
                             if n.kind in (NodeKind.SRRH, NodeKind.MACRO_BS)}
        self.link_between = {frozenset(l.endpoints): l for l in topo.links}
        bbu = topo.bbu
        self.bbu_id = bbu.id if bbu else None
        self.fh_cache: dict[tuple[int, int], float] = {}
        self.site_rate = {n.id: n.proc_rate for n in topo.nodes if n.proc_rate > 0}
        self.site_active: dict[int, int] = {sid: 0 for sid in self.site_rate}
        self.session_site: dict[int, int] = {}
        self.frrh_cell: dict[int, int] = {}
        self.mission: dict[int, int] = {}
        self.battery: dict[int, BatteryState] = {}
        self.batt_t: dict[int, float] = {}
        self.ctrl: ControllerState | None = None
        if self.arch is Architecture.UCRAN:
            self._setup_controller()

    def _setup_controller(self):
        cfg, topo = self.cfg, self.topo
        c, tp = cfg.controller, cfg.topology
        r = cell_radius(tp.area_km2)
        alt = tp.frrh_altitude_ft * FT
        slots = {cell.id: ring_positions(cell.center, max(tp.frrh_count, 1),
                                         tp.frrh_ring_fraction * r, alt) for cell in topo.cells}
        frrhs = topo.frrhs
        self.ctrl = ControllerState(
            frrh_states={f.id: FrrhState.STANDBY for f in frrhs},
            deploy_threshold=c.deploy_threshold, recall_threshold=c.recall_threshold,
            srrh_cells={n.id: n.cell for n in topo.of_kind(NodeKind.SRRH)},
            frrh_capacity={f.id: f.capacity_prbs for f in frrhs},
            battery_wh={f.id: f.battery_wh for f in frrhs},
            min_deploy_charge_wh=c.min_deploy_charge_wh,
            positions={f.id: f.position for f in frrhs},
            home={f.id: f.position for f in frrhs},
            cell_slots=slots, uav_speed=c.uav_speed_mps, control_period=c.control_period_s)
        from collections import deque
        self.ctrl.samples = deque(maxlen=c.sample_buffer)
        for f in frrhs:
            self.battery[f.id] = BatteryState(f.battery_wh, f.battery_wh)
            self.batt_t[f.id] = 0.0
            self.mission[f.id] = 0

    # main loop -------------------------------------------------------------
    def run(self) -> Trace:
        cfg = self.cfg
        duration = cfg.scenario.duration_s
        if duration <= 0:
            return self.trace
        self._setup()
        q = self.q = EventQueue()
        period = cfg.scenario.sample_period_s
        n_samples = int(math.floor(duration / period + 1e-9))
        for i in range(1, n_samples + 1):
            q.push(i * period, EventKind.METRICS_SAMPLE)
        if self.ctrl is not None:
            cp = cfg.controller.control_period_s
            for i in range(1, int(math.floor(duration / cp + 1e-9)) + 1):
                q.push(i * cp, EventKind.CONTROL_TICK)
        q.push(duration, EventKind.END)
        while q:
            ev = q.pop()
            try:
                if self._dispatch(ev):
                    break
            except ConsistencyError as exc:
                raise ConsistencyError(
                    f"event seq {ev.seq} ({ev.kind.name} at t={ev.time!r}): {exc}") from exc
        return self.trace

    def _dispatch(self, ev: Event) -> bool:
        self.core.advance(ev.time)
        self._drain()
        if ev.kind is EventKind.METRICS_SAMPLE:
            self._sample(ev.time)
        elif ev.kind is EventKind.CONTROL_TICK:
            self._control(ev.time)
        elif ev.kind is EventKind.FRRH_ARRIVED:
            self._frrh_arrived(ev.time, *ev.payload)
        elif ev.kind is EventKind.FRRH_RETURNED:
            self._frrh_returned(ev.time, *ev.payload)
        elif ev.kind is EventKind.END:
            self.core.finish(ev.time)
            self._drain()
            self.trace.add(f"{_f(ev.time)} END {self.core.admitted_total} "
                           f"{self.core.blocked_total} {self.core.dropped_total}")
            return True
        return False

    def _drain(self):
        """Turn kernel log records into trace lines and delay records."""
        times, codes, ues, nodes, counts = self.core.take_log()
        if not times:
            return
        add = self.trace.lines.append
        serving = self.serving
        sessions = self.sessions
        for t, code, ue, k, n in zip(times, codes, ues, nodes, counts):
            ts = repr(t)
            if code == 1:      # ADMIT
                nid = serving[k].id
                add(f"{ts} ADM {ue} {nid} {n}")
                self._delay(t, sessions[ue], k, n)
            elif code == 0:    # ARRIVE
                s = sessions[ue]
                add(f"{ts} ARR {ue} {s.cell} {s.origin.value}")
            elif code == 4:    # DEPART
                add(f"{ts} DEP {ue} {serving[k].id} {n}")
                self._leave_site(ue)
            elif code == 2:
                add(f"{ts} PND {ue}")
            elif code == 3:
                add(f"{ts} BLK {ue}")
            elif code == 6:    # MOVE
                add(f"{ts} MOV {ue} {serving[k].id} {n}")
                self._leave_site(ue)
                self._delay(t, sessions[ue], k, n, moved=True)
            elif code == 5:    # DROP
                add(f"{ts} DRP {ue} {serving[k].id} {n}")
                self._leave_site(ue)

    def _leave_site(self, ue: int):
        site = self.session_site.pop(ue, None)
        if site is not None:
            self.site_active[site] -= 1

    def _route(self, node: NodeSpec, cell: int) -> list[LinkSpec]:
        """Fronthaul hops from a serving node to the BBU pool."""
        if node.kind is NodeKind.MACRO_BS or self.bbu_id is None:
            return []
        srrh = self.srrh_of_cell[cell]
        hops = []
        if node.is_aerial:
            hops.append(self.link_between[frozenset((node.id, srrh.id))])
        hops.append(self.link_between[frozenset((srrh.id, self.bbu_id))])
        return hops

    def _proc(self, site: int) -> float | None:
        lam = self.cfg.traffic.task_rate * self.site_active[site]
        return mm1_expected_sojourn(lam, self.site_rate[site])

    def _delay(self, t: float, s, k: int, n_on_node: int, moved: bool = False):
        """Delay of the UE's packet from admission to processing completion."""
        node = self.serving[k]
        bits = self.cfg.traffic.packet_bits
        access = bits * n_on_node / self.rates[k]
        wait = t - s.arrival_time
        if node.kind is NodeKind.MACRO_BS:
            site, site_kind, fh = node.id, Site.MACRO, 0.0
        else:
            key = (node.id, s.cell)
            fh_bbu = self.fh_cache.get(key)
            if fh_bbu is None:
                fh_bbu = self.fh_cache[key] = path_delay(self._route(node, s.cell), bits)
            site, site_kind, fh = self.bbu_id, Site.BBU, fh_bbu
            if node.kind is NodeKind.FRRH_ACTIVE:
                self.site_active[node.id] += 1
                edge = SiteOption(0.0, self._proc(node.id) or math.inf)
                self.site_active[node.id] -= 1
                self.site_active[self.bbu_id] += 1
                bbu = SiteOption(fh_bbu, self._proc(self.bbu_id) or math.inf)
                self.site_active[self.bbu_id] -= 1
                dec = processing_site_decision(edge, bbu)
                if dec.site is Site.EDGE:
                    site, site_kind, fh = node.id, Site.EDGE, 0.0
        self.site_active[site] += 1
        self.session_site[s.id] = site
        if moved:
            return
        proc = self._proc(site)
        if proc is None:
            self.trace.add(f"{repr(t)} SAT {s.id} {site}")
            return
        bd = total_delay(wait + access + fh, proc, site_kind)
        self.trace.add(f"{repr(t)} DLY {s.id} {repr(s.arrival_time)} {bd.site.value} "
                       f"{repr(bd.comm_s)} {repr(bd.proc_s)} {repr(bd.total_s)}")

    # periodic work -------------------------------------------------------
    def _loads(self) -> dict[int, float]:
        core = self.core
        return {n.id: core.allocated(i) / n.capacity_prbs for i, n in enumerate(self.serving)}

    def _sample(self, t: float):
        cfg = self.cfg
        ts = repr(t)
        add = self.trace.lines.append
        loads = self._loads()
        for cell_id, node in sorted(self.srrh_of_cell.items()):
            load = self.core.cell_demand(self.cidx[cell_id])
            uf = utilization_factor(load, node.capacity_prbs)
            add(f"{ts} UF {node.id} {load} {node.capacity_prbs} {repr(uf)}")
        states = self.ctrl.frrh_states if self.ctrl else {}
        if self.ctrl is not None:
            self._battery_tick(t, loads)
        pw = cfg.power
        for n in self.topo.nodes:
            if n.is_aerial:
                w = frrh_power(n.power, states[n.id], loads.get(n.id, 0.0), pw.standby_w,
                               pw.include_hover)
            elif n.kind is NodeKind.BBU_POOL:
                continue
            else:
                w = n.power.static_w + n.power.slope * n.power.tx_w * loads[n.id]
            add(f"{ts} PNODE {n.id} {repr(w)}")
        total = total_power(self.topo, loads, states, standby_w=pw.standby_w,
                            bbu_per_srrh_w=pw.bbu_per_srrh_w, include_hover=pw.include_hover)
        add(f"{ts} POWER {repr(total)}")

    def _battery_tick(self, t: float, loads: dict[int, float]):
        for f in sorted(self.battery):
            self._settle(f, t, loads)
            state = self.ctrl.frrh_states[f]
            if state in (FrrhState.EN_ROUTE, FrrhState.DEPLOYED) and self.battery[f].depleted:
                self.trace.add(f"{repr(t)} ALERT {f} battery-depleted")
                self._send_home(f, t, "battery")
            elif state is FrrhState.CHARGING and \
                    self.battery[f].remaining_wh >= self.battery[f].capacity_wh:
                self.ctrl.charged(f)
                self.trace.add(f"{repr(t)} STANDBY {f}")

    def _settle(self, f: int, t: float, loads=None):
        """Apply the draw (or charge) accumulated since the last update."""
        dt = t - self.batt_t[f]
        self.batt_t[f] = t
        if dt <= 0:
            return
        state = self.ctrl.frrh_states[f]
        node = self.topo.node(f)
        if state.flying:
            load = (loads or self._loads()).get(f, 0.0)
            draw = frrh_power(node.power, state, load, self.cfg.power.standby_w, True)
            self.battery[f] = battery_step(self.battery[f], draw, dt)
        elif state is FrrhState.CHARGING:
            self.battery[f] = charge_step(self.battery[f], self.cfg.controller.charge_w, dt)
        self.ctrl.battery_wh[f] = self.battery[f].remaining_wh

    def _control(self, t: float):
        ctrl = self.ctrl
        samples = []
        for node in self.topo.of_kind(NodeKind.SRRH):
            load = self.core.cell_demand(self.cidx[node.cell])
            samples.append(UtilizationSample(node.id, t, load, node.capacity_prbs))
        for f in self.battery:
            self._settle(f, t)
        new, actions = control_step(ctrl, samples, t)
        self.ctrl = new
        for a in actions:
            if a.kind == "Deploy":
                self.mission[a.frrh] += 1
                self.trace.add(f"{repr(t)} DEPLOY {a.frrh} {a.cell} {repr(a.travel_s)}")
                self.q.push(t + a.travel_s, EventKind.FRRH_ARRIVED,
                            (a.frrh, self.mission[a.frrh]))
            elif a.kind == "Recall":
                self.trace.add(f"{repr(t)} RECALL {a.frrh} {a.cell} {repr(a.travel_s)}")
                self._take_out(a.frrh, t)
                self.q.push(t + a.travel_s, EventKind.FRRH_RETURNED,
                            (a.frrh, self.mission[a.frrh]))
            else:
                self.trace.add(f"{repr(t)} ALERT - cell={a.cell} {a.reason.replace(' ', '-')}")

    def _take_out(self, f: int, t: float):
        k = self.idx[f]
        cell = self.frrh_cell.pop(f, None)
        self.core.set_available(k, 0, t)
        if cell is not None:
            self.core.set_coverage(self.cidx[cell], k, 0)
        self._drain()

    def _send_home(self, f: int, t: float, reason: str):
        was_deployed = self.ctrl.frrh_states[f] is FrrhState.DEPLOYED
        travel = self.ctrl.start_return(f, t)
        self.trace.add(f"{repr(t)} RECALL {f} - {repr(travel)} {reason}")
        if was_deployed:
            self._take_out(f, t)
        self.q.push(t + travel, EventKind.FRRH_RETURNED, (f, self.mission[f]))

    def _frrh_arrived(self, t: float, f: int, mission: int):
        if mission != self.mission[f] or self.ctrl.frrh_states[f] is not FrrhState.EN_ROUTE:
            return
        self._settle(f, t)
        self.ctrl.arrive(f)
        cell = self.ctrl.targets[f]
        self.frrh_cell[f] = cell
        self.trace.add(f"{repr(t)} ARRIVED {f} {cell}")
        k = self.idx[f]
        self.core.set_coverage(self.cidx[cell], k, 1)
        self.core.set_available(k, 1, t)
        self._drain()

    def _frrh_returned(self, t: float, f: int, mission: int):
        if mission != self.mission[f] or self.ctrl.frrh_states[f] is not FrrhState.RETURNING:
            return
        self._settle(f, t)
        self.ctrl.returned(f)
        self.batt_t[f] = t
        self.trace.add(f"{repr(t)} RETURNED {f}")


# -- disaster ------------------------------------------------------------------

@dataclass
class DisasterSetup:
    topology: Topology
    sources: list[int]
    edge_node: int | None
    routes_edge: dict[int, list[LinkSpec]]
    routes_bbu: dict[int, list[LinkSpec]]


def scenario_disaster(cfg: ScenarioConfig) -> DisasterSetup:
    """Relay chain from two source F-RRHs through ``relays`` hops to the BBU.

    F-RRH1 (access) and F-RRH2 (survey) feed F-RRH3; relays continue toward
    the BBU pool and the relay next to the pool hosts the local control unit
    (MEC-enabled unless ``last_relay_active`` is off).
    """
    if cfg.scenario.architecture is not Architecture.UCRAN:
        raise ValidationError("the disaster scenario needs the UCRAN architecture")
    d, tp, pw, env = cfg.disaster, cfg.topology, cfg.power, cfg.channel
    if d.relays < 1:
        raise ValidationError("disaster.relays must be >= 1")
    s = d.relay_spacing_m
    alt = d.altitude_m
    passive = pw.profile(NodeKind.FRRH_PASSIVE)
    nodes = [NodeSpec(0, "BBU", NodeKind.BBU_POOL, (0.0, 0.0, 0.0), 0.0, 0, tp.bbu_proc_rate,
                      pw.profile(NodeKind.BBU_POOL))]
    chain = []
    for j in range(d.relays):
        nid = 3 + j
        x = (d.relays - j) * s
        active = d.last_relay_active and j == d.relays - 1
        kind = NodeKind.FRRH_ACTIVE if active else NodeKind.FRRH_PASSIVE
        nodes.append(NodeSpec(nid, f"F-RRH{nid}", kind, (x, 0.0, alt), tp.frrh_tx_power_dbm,
                              1, tp.frrh_proc_rate if active else 0.0, pw.profile(kind),
                              battery_wh=tp.frrh_battery_wh))
        chain.append(nid)
    src_x = (d.relays + 1) * s
    for nid, y in ((1, s / 2), (2, -s / 2)):
        nodes.append(NodeSpec(nid, f"F-RRH{nid}", NodeKind.FRRH_PASSIVE, (src_x, y, alt),
                              tp.frrh_tx_power_dbm, 1, 0.0, passive,
                              battery_wh=tp.frrh_battery_wh))
    by_id = {n.id: n for n in nodes}
    bw = d.bandwidth_mhz * 1e6

    def wireless(a: int, b: int, lid: int) -> LinkSpec:
        dist = math.dist(by_id[a].position, by_id[b].position)
        rate = link_rate(tp.frrh_tx_power_dbm, free_space_loss(dist, env.carrier_hz), bw,
                         env).rate_bps
        return LinkSpec(lid, (a, b), LinkKind.WIRELESS_FRONTHAUL, tp.wireless_fh_latency_s,
                        max(rate, 1e-9))

    links = [wireless(1, chain[0], 1), wireless(2, chain[0], 2)]
    for a, b in zip(chain, chain[1:]):
        links.append(wireless(a, b, len(links) + 1))
    links.append(LinkSpec(len(links) + 1, (chain[-1], 0), LinkKind.MICROWAVE_BACKHAUL,
                          d.bbu_link_latency_s, tp.backhaul_capacity_bps))
    topo = Topology(tuple(sorted(nodes, key=lambda n: n.id)), tuple(links), (), Architecture.UCRAN)
    edge = chain[-1] if by_id[chain[-1]].kind is NodeKind.FRRH_ACTIVE else None
    r_edge, r_bbu = {}, {}
    for src in (1, 2):
        r_bbu[src] = topo.route(src, 0)
        r_edge[src] = topo.route(src, edge) if edge is not None else []
    return DisasterSetup(topo, [1, 2], edge, r_edge, r_bbu)


def _run_disaster(cfg: ScenarioConfig) -> tuple[Trace, Topology]:
    setup = scenario_disaster(cfg)
    d, sc = cfg.disaster, cfg.scenario
    trace = Trace({"scenario": "disaster", "arch": "UCRAN", "ue_count": len(setup.sources),
                   "seed": sc.seed, "duration": _f(sc.duration_s), "warmup": _f(cfg.warmup_s)})
    if sc.duration_s <= 0:
        return trace, setup.topology
    rng = np.random.default_rng([sc.seed, 7])
    topo = setup.topology
    link_q = {l.id: QueueModel(1.0) for l in topo.links}
    edge_q = QueueModel(topo.node(setup.edge_node).proc_rate) if setup.edge_node is not None else None
    bbu_q = QueueModel(topo.node(0).proc_rate)
    q = EventQueue()
    phases = rng.uniform(0.0, d.report_period_s, len(setup.sources))
    task = 0
    for k, src in enumerate(setup.sources):
        # the two sources are staggered by half a period on top of the random phase
        t0 = float(phases[0]) + k * d.report_period_s / 2
        n = int(math.floor((sc.duration_s - t0) / d.report_period_s)) + 1
        for i in range(n):
            t = t0 + i * d.report_period_s
            if t < sc.duration_s:
                q.push(t, EventKind.TASK_ARRIVAL, (task, src))
                task += 1
    period = sc.sample_period_s
    for i in range(1, int(math.floor(sc.duration_s / period + 1e-9)) + 1):
        q.push(i * period, EventKind.METRICS_SAMPLE)
    q.push(sc.duration_s, EventKind.END)
    # every F-RRH hovers on station for the whole run
    states = {f.id: FrrhState.DEPLOYED for f in topo.frrhs}
    fleet_w = total_power(topo, {}, states, standby_w=cfg.power.standby_w,
                          bbu_per_srrh_w=cfg.power.bbu_per_srrh_w,
                          include_hover=cfg.power.include_hover)
    admitted = blocked = 0
    add = trace.lines.append
    while q:
        ev = q.pop()
        t = ev.time
        if ev.kind is EventKind.METRICS_SAMPLE:
            add(f"{repr(t)} POWER {repr(fleet_w)}")
            continue
        if ev.kind is EventKind.END:
            add(f"{repr(t)} END {admitted} {blocked} 0")
            break
        if ev.kind is EventKind.TASK_DONE:
            add(f"{repr(t)} DONE {ev.payload}")
            continue
        tid, src = ev.payload
        add(f"{repr(t)} ARR {tid} 0 {src}")
        try:
            comm_bbu = path_delay(setup.routes_bbu[src], d.payload_bits, now=t)
            edge_opt = None
            if edge_q is not None:
                comm_edge = path_delay(setup.routes_edge[src], d.payload_bits, now=t)
                edge_opt = SiteOption.from_queue(comm_edge, edge_q, t)
            dec = processing_site_decision(edge_opt, SiteOption.from_queue(comm_bbu, bbu_q, t))
        except (DropNoLink, DropNoProcessor) as exc:
            blocked += 1
            add(f"{repr(t)} BLK {tid} {type(exc).__name__}")
            continue
        if dec.site is Site.EDGE:
            route, queue, node = setup.routes_edge[src], edge_q, setup.edge_node
        else:
            route, queue, node = setup.routes_bbu[src], bbu_q, 0
        comm = path_delay(route, d.payload_bits, now=t, queues=link_q)
        service = float(rng.exponential(1.0 / queue.service_rate))
        proc = queue.submit(t + comm, service)
        bd = total_delay(comm, proc, dec.site)
        admitted += 1
        add(f"{repr(t)} ADM {tid} {node} 0")
        add(f"{repr(t)} SITE {tid} {dec.site.value} {_opt(dec.edge_total)} {_opt(dec.bbu_total)}")
        add(f"{repr(t)} DLY {tid} {repr(t)} {bd.site.value} {repr(bd.comm_s)} "
            f"{repr(bd.proc_s)} {repr(bd.total_s)}")
        q.push(t + bd.total_s, EventKind.TASK_DONE, tid)
    return trace, topo


def _opt(x):
    return "-" if x is None else repr(x)


# -- complex terrain -------------------------------------------------------------

@dataclass
class TerrainSetup:
    topology: Topology
    ue_positions: np.ndarray
    serving: list[NodeSpec]
    env: ChannelEnv


def member_positions(count: int, spacing: float, altitude: float,
                     fanout: int) -> list[tuple[float, float, float]]:
    """Nested hover points: the first ``k`` entries never depend on ``count``."""
    out = []
    depth1 = []
    for i in range(fanout):
        ang = 2 * math.pi * i / fanout
        depth1.append(ang)
        out.append((spacing * math.cos(ang), spacing * math.sin(ang), altitude))
    for j in range(fanout * fanout):
        parent = j // fanout
        ang = depth1[parent] + (j % fanout - (fanout - 1) / 2) * (math.pi / (2 * fanout))
        px, py, _ = out[parent]
        out.append((px + spacing * math.cos(ang), py + spacing * math.sin(ang), altitude))
    return out[:count]


def scenario_terrain(cfg: ScenarioConfig) -> TerrainSetup:
    """One extended-star cluster over a region without ground infrastructure.

    Under CRAN/Macro the same UEs can only reach a ground node
    ``srrh_distance_m`` away from the region centre.
    """
    tr, tp, pw = cfg.terrain, cfg.topology, cfg.power
    env = ChannelEnv(**{**cfg.channel.__dict__, "excess_nlos_db": tr.excess_nlos_db})
    rng = np.random.default_rng([cfg.scenario.seed, 11])
    rad = tr.region_radius_m * np.sqrt(rng.uniform(0, 1, tr.ue_count))
    ang = rng.uniform(0, 2 * np.pi, tr.ue_count)
    ues = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    from .channel import prbs_for
    prbs = prbs_for(tr.frrh_bandwidth_mhz * 1e6) * tp.sched_window_tti
    arch = cfg.scenario.architecture
    if arch is Architecture.UCRAN:
        head = NodeSpec(1, "F-RRH1", NodeKind.FRRH_ACTIVE, (0.0, 0.0, tr.altitude_m),
                        tp.frrh_tx_power_dbm, prbs, tp.frrh_proc_rate,
                        pw.profile(NodeKind.FRRH_ACTIVE), battery_wh=tp.frrh_battery_wh)
        members = [NodeSpec(2 + i, f"F-RRH{2 + i}", NodeKind.FRRH_PASSIVE, pos,
                            tp.frrh_tx_power_dbm, prbs, 0.0, pw.profile(NodeKind.FRRH_PASSIVE),
                            battery_wh=tp.frrh_battery_wh)
                   for i, pos in enumerate(member_positions(tr.members, tr.member_spacing_m,
                                                            tr.altitude_m, tp.fanout))]
        bbu = NodeSpec(0, "BBU", NodeKind.BBU_POOL, (-tr.srrh_distance_m, 0.0, 0.0), 0.0, 0,
                       tp.bbu_proc_rate, pw.profile(NodeKind.BBU_POOL))
        topo = build_cluster_topology(head, members, fanout=tp.fanout, bbu=bbu,
                                      link_latency_s=tp.wireless_fh_latency_s,
                                      backhaul_latency_s=tp.backhaul_latency_s,
                                      backhaul_capacity_bps=tp.backhaul_capacity_bps,
                                      demand_prbs=cfg.traffic.demand_prbs)
        serving = [head, *members]
    else:
        h = tp.height_ft * FT
        kind = NodeKind.SRRH if arch is Architecture.CRAN else NodeKind.MACRO_BS
        ground = NodeSpec(1, "S-RRH1" if kind is NodeKind.SRRH else "MBS1", kind,
                          (-tr.srrh_distance_m, 0.0, h), tp.tx_power_dbm,
                          prbs_for(tp.bandwidth_mhz * 1e6) * tp.sched_window_tti,
                          tp.macro_proc_rate if kind is NodeKind.MACRO_BS else 0.0,
                          pw.profile(kind), cell=1)
        nodes = [ground]
        links = []
        if kind is NodeKind.SRRH:
            nodes.insert(0, NodeSpec(0, "BBU", NodeKind.BBU_POOL, (-tr.srrh_distance_m, -100.0, 0.0),
                                     0.0, 0, tp.bbu_proc_rate, pw.profile(NodeKind.BBU_POOL)))
            links.append(LinkSpec(1, (1, 0), LinkKind.OPTICAL_FRONTHAUL, tp.optical_latency_s,
                                  tp.optical_capacity_bps))
        cell = Cell(1, (1,), math.pi * tr.region_radius_m ** 2 / 1e6,
                    ground.capacity_prbs // cfg.traffic.demand_prbs)
        topo = Topology(tuple(nodes), tuple(links), (cell,), arch)
        serving = [ground]
    return TerrainSetup(topo, ues, serving, env)


def uplink_rate(node: NodeSpec, ue_xy, cfg: ScenarioConfig, env: ChannelEnv) -> float:
    """UE-to-node rate; the uplink is the binding direction for coverage."""
    tr = cfg.terrain
    dx = ue_xy[0] - node.position[0]
    dy = ue_xy[1] - node.position[1]
    ground = math.hypot(dx, dy)
    if node.is_aerial:
        pl = atg_path_loss(ground, node.altitude - env.ue_height_m, env)
        bw = tr.frrh_bandwidth_mhz * 1e6
    else:
        pl = terrestrial_path_loss(math.hypot(ground, node.altitude - env.ue_height_m), env)
        bw = cfg.topology.bandwidth_mhz * 1e6
    return link_rate(tr.ue_tx_power_dbm, pl, bw, env).rate_bps


def _run_terrain(cfg: ScenarioConfig) -> tuple[Trace, Topology]:
    setup = scenario_terrain(cfg)
    sc, tr = cfg.scenario, cfg.terrain
    arch = sc.architecture
    trace = Trace({"scenario": "terrain", "arch": arch.label, "ue_count": tr.ue_count,
                   "seed": sc.seed, "duration": _f(sc.duration_s), "warmup": "0.0"})
    topo = setup.topology
    if sc.duration_s <= 0:
        return trace, topo
    add = trace.lines.append
    rng = np.random.default_rng([sc.seed, 13])
    times = np.sort(rng.uniform(0.0, sc.duration_s, tr.ue_count))
    head = setup.serving[0]
    backhaul_site = topo.bbu.id if topo.bbu else head.id
    served_by: dict[int, int] = {}
    covered = 0
    bits = cfg.traffic.packet_bits
    for ue, (t, xy) in enumerate(zip(times, setup.ue_positions)):
        add(f"{repr(float(t))} ARR {ue} 1 L")
        best = None
        for n in setup.serving:
            r = uplink_rate(n, xy, cfg, setup.env)
            if r > 0 and (best is None or r > best[1]):
                best = (n, r)
        if best is None:
            add(f"{repr(float(t))} BLK {ue}")
            continue
        node, rate = best
        covered += 1
        served_by[node.id] = served_by.get(node.id, 0) + 1
        add(f"{repr(float(t))} ADM {ue} {node.id} {served_by[node.id]}")
        access = bits / rate
        if node.is_aerial:
            route = topo.route(node.id, head.id)
            site, site_id = Site.EDGE, head.id
        elif node.kind is NodeKind.SRRH:
            route = topo.route(node.id, backhaul_site)
            site, site_id = Site.BBU, backhaul_site
        else:
            route, site, site_id = [], Site.MACRO, node.id
        comm = access + path_delay(route, bits, now=float(t) + access)
        lam = cfg.traffic.task_rate * covered
        proc = mm1_expected_sojourn(lam, topo.node(site_id).proc_rate)
        if proc is None:
            add(f"{repr(float(t))} SAT {ue} {site_id}")
            continue
        bd = total_delay(comm, proc, site)
        add(f"{repr(float(t))} DLY {ue} {repr(float(t))} {bd.site.value} {repr(bd.comm_s)} "
            f"{repr(bd.proc_s)} {repr(bd.total_s)}")
    states = {f.id: FrrhState.DEPLOYED for f in topo.frrhs}
    loads = {n.id: min(1.0, served_by.get(n.id, 0) * cfg.traffic.demand_prbs / n.capacity_prbs)
             for n in setup.serving}
    watts = total_power(topo, loads, states, standby_w=cfg.power.standby_w,
                        bbu_per_srrh_w=cfg.power.bbu_per_srrh_w,
                        include_hover=cfg.power.include_hover)
    add(f"{_f(sc.duration_s)} POWER {repr(watts)}")
    add(f"{_f(sc.duration_s)} METRIC coverage {repr(covered / tr.ue_count if tr.ue_count else 0.0)}")
    add(f"{_f(sc.duration_s)} END {covered} {tr.ue_count - covered} 0")
    return trace, topo


# -- public entry points ------------------------------------------------------------

def run(config: ScenarioConfig, *, backend=None) -> RunResult:
    """Execute one scenario run; identical config gives an identical trace."""
    from .config import validate_config
    validate_config(config)
    kind = config.scenario.scenario
    if kind is ScenarioKind.HOTSPOT:
        sim = HotspotRun(config, backend=get_backend(backend) if isinstance(backend, str) or backend is None else backend)
        trace = sim.run()
        topo = sim.topo
    elif kind is ScenarioKind.DISASTER:
        trace, topo = _run_disaster(config)
    else:
        trace, topo = _run_terrain(config)
    report = compute_metrics(trace)
    return RunResult(report, trace, topo, run_record(config, trace))


def run_record(config: ScenarioConfig, trace: Trace) -> dict:
    from .core import BACKEND
    return {
        "code_version": __version__,
        "kernel_backend": BACKEND,
        "config": config.to_dict(),
        "trace_digest": trace.digest(),
        "derived": {
            "max_ues": config.max_ues(),
            "max_ues_rule": "ground-node PRBs (LTE grid x scheduling window) // per-UE PRB demand",
            "delay_boundary": "UE arrival (or task generation) to processing completion",
            "power_mode": "with hover" if config.power.include_hover else "communication only",
        },
    }


@dataclass
class SweepResult:
    report: MetricsReport
    runs: list[tuple[str, int, int, MetricsRow, str]]   # arch, ue_count, seed, row, digest

    def per_seed(self, architecture: str, ue_count: int) -> dict[int, MetricsRow]:
        return {s: r for a, u, s, r, _ in self.runs if a == architecture and u == ue_count}


class SweepAbort(RuntimeError):
    """A single run of a sweep failed; ``point`` is (architecture, fraction, seed)."""

    def __init__(self, point, cause):
        super().__init__(f"sweep aborted at {point[0].label} load={point[1]} seed={point[2]}: {cause}")
        self.point = point


def _sweep_one(cfg: ScenarioConfig, backend):
    res = run(cfg, backend=backend)
    return res.report, res.trace.digest(), res


def run_sweep(config: ScenarioConfig, fractions=None, seeds=None, architectures=None, *,
              backend=None, on_run=None, workers: int = 1) -> SweepResult:
    """Every (architecture, load, seed) combination, aggregated over seeds.

    Runs are independent, so ``workers > 1`` spreads them over processes;
    aggregation only starts once all of them are back.  ``on_run(cfg, result)``
    is called after each run in the parent process (serial mode only).
    """
    from .traffic import LoadSchedule
    sw = config.sweep
    schedule = LoadSchedule(tuple(fractions or sw.fractions), config.max_ues())
    seeds = tuple(sw.seeds if seeds is None else seeds)
    if not seeds:
        raise ValidationError("a sweep needs at least one seed")
    archs = tuple(architectures or sw.architectures)
    points = [(arch, frac, seed) for arch in archs for frac in schedule.fractions
              for seed in seeds]
    configs = [config.replace(scenario={"architecture": a, "seed": s},
                              traffic={"load_fraction": f}) for a, f, s in points]
    outcomes = []
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        name = backend if isinstance(backend, str) or backend is None else backend.__name__
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_one, c, name) for c in configs]
            for point, fut in zip(points, futures):
                try:
                    outcomes.append(fut.result()[:2])
                except Exception as exc:
                    raise SweepAbort(point, exc) from exc
    else:
        for point, cfg in zip(points, configs):
            try:
                report, digest, res = _sweep_one(cfg, backend)
            except Exception as exc:
                raise SweepAbort(point, exc) from exc
            outcomes.append((report, digest))
            if on_run is not None:
                on_run(cfg, res)
    runs = []
    grouped: dict[tuple[str, int], list[MetricsRow]] = {}
    for (arch, frac, seed), (report, digest) in zip(points, outcomes):
        for row in report.rows:
            runs.append((row.architecture, row.ue_count, seed, row, digest))
            grouped.setdefault((row.architecture, row.ue_count), []).append(row)
    rows = [aggregate(v) for v in grouped.values()]
    return SweepResult(MetricsReport(rows), runs)
