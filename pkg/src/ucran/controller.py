"""Hotspot control loop and UE admission.

The control unit in the BBU pool samples each S-RRH's utilisation factor,
dispatches standby F-RRHs into an overloaded cell and calls them back once the
cell load falls under the recall threshold.  ``admit_ue``/``release_ue`` are
the reference admission rules; the event kernel in :mod:`ucran.core`
implements the same rules over arrays.
"""
from __future__ import annotations

import copy
import dataclasses
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConsistencyError, DomainError, ValidationError
from .topology import FrrhState
from .traffic import SessionStatus, UeSession


def utilization_factor(load_prbs: int, capacity_prbs: int) -> float:
    """Percentage of the S-RRH's PRBs demanded; exceeds 100 under overload."""
    if capacity_prbs <= 0:
        raise DomainError("capacity_prbs must be > 0")
    return 100 * load_prbs / capacity_prbs


@dataclass(frozen=True)
class UtilizationSample:
    node: int
    time: float
    load_prbs: int
    capacity_prbs: int
    uf_percent: float = field(default=math.nan)

    def __post_init__(self):
        if self.capacity_prbs <= 0:
            raise ValidationError("capacity_prbs must be > 0")
        object.__setattr__(self, "uf_percent",
                           utilization_factor(self.load_prbs, self.capacity_prbs))


@dataclass(frozen=True)
class ControlAction:
    kind: str          # "Deploy" | "Recall" | "Alert"
    time: float
    frrh: int | None = None
    cell: int | None = None
    travel_s: float = 0.0
    target: tuple[float, float, float] | None = None
    reason: str = ""


@dataclass
class ControllerState:
    """Controller-owned view of the F-RRH fleet.

    ``srrh_cells`` maps each monitored S-RRH to its cell, ``cell_slots`` lists
    the hover points available in each cell.
    """

    frrh_states: dict[int, FrrhState]
    deploy_threshold: float = 85.0
    recall_threshold: float = 60.0
    samples: deque = field(default_factory=lambda: deque(maxlen=64))
    srrh_cells: dict[int, int] = field(default_factory=dict)
    frrh_capacity: dict[int, int] = field(default_factory=dict)
    battery_wh: dict[int, float] = field(default_factory=dict)
    min_deploy_charge_wh: float = 0.0
    positions: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    home: dict[int, tuple[float, float, float]] = field(default_factory=dict)
    cell_slots: dict[int, list[tuple[float, float, float]]] = field(default_factory=dict)
    targets: dict[int, int] = field(default_factory=dict)
    slot_of: dict[int, int] = field(default_factory=dict)
    uav_speed: float = 10.0
    control_period: float = 1.0
    last_action: dict[int, tuple[str, float]] = field(default_factory=dict)
    alerted: set[int] = field(default_factory=set)

    def __post_init__(self):
        if not self.recall_threshold < self.deploy_threshold:
            raise ValidationError("recall_threshold must be below deploy_threshold")

    def copy(self) -> "ControllerState":
        """Independent successor; every stored value is immutable, so one level suffices."""
        new = copy.copy(self)
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, deque):
                setattr(new, f.name, deque(v, maxlen=v.maxlen))
            elif isinstance(v, (dict, set)):
                setattr(new, f.name, type(v)(v))
        return new

    def deployable(self, frrh: int) -> bool:
        state = self.frrh_states[frrh]
        if state not in (FrrhState.STANDBY, FrrhState.CHARGING):
            return False
        return self.battery_wh.get(frrh, math.inf) >= self.min_deploy_charge_wh

    def committed(self, cell: int) -> int:
        """PRBs of F-RRHs already heading to or serving ``cell``."""
        return sum(self.frrh_capacity.get(f, 0) for f, c in self.targets.items()
                   if c == cell and self.frrh_states[f] in (FrrhState.EN_ROUTE, FrrhState.DEPLOYED))

    def travel_time(self, a, b) -> float:
        return math.dist(a, b) / self.uav_speed

    # transitions driven by kernel events
    def arrive(self, frrh: int) -> None:
        self._expect(frrh, FrrhState.EN_ROUTE)
        self.frrh_states[frrh] = FrrhState.DEPLOYED
        cell = self.targets[frrh]
        self.positions[frrh] = self.cell_slots[cell][self.slot_of[frrh]]

    def start_return(self, frrh: int, now: float) -> float:
        """Send ``frrh`` home; returns the flight time."""
        if self.frrh_states[frrh] not in (FrrhState.DEPLOYED, FrrhState.EN_ROUTE):
            raise ConsistencyError(f"F-RRH {frrh} cannot return from {self.frrh_states[frrh].value}")
        self.frrh_states[frrh] = FrrhState.RETURNING
        self.last_action[frrh] = ("Recall", now)
        return self.travel_time(self.positions[frrh], self.home[frrh])

    def returned(self, frrh: int) -> None:
        self._expect(frrh, FrrhState.RETURNING)
        self.frrh_states[frrh] = FrrhState.CHARGING
        self.positions[frrh] = self.home[frrh]
        self.targets.pop(frrh, None)
        self.slot_of.pop(frrh, None)

    def charged(self, frrh: int) -> None:
        self._expect(frrh, FrrhState.CHARGING)
        self.frrh_states[frrh] = FrrhState.STANDBY

    def _expect(self, frrh: int, state: FrrhState) -> None:
        if self.frrh_states[frrh] is not state:
            raise ConsistencyError(
                f"F-RRH {frrh} is {self.frrh_states[frrh].value}, expected {state.value}")

    def free_slot(self, cell: int) -> int:
        taken = {self.slot_of[f] for f, c in self.targets.items() if c == cell and f in self.slot_of}
        slots = self.cell_slots.get(cell, [])
        for i in range(len(slots)):
            if i not in taken:
                return i
        return len(taken) % max(len(slots), 1)


def control_step(state: ControllerState, samples: Sequence[UtilizationSample],
                 now: float) -> tuple[ControllerState, list[ControlAction]]:
    """One monitoring period: returns the successor state and its actions."""
    new = state.copy()
    new.samples.extend(samples)
    actions: list[ControlAction] = []
    for sample in sorted(samples, key=lambda s: s.node):
        cell = new.srrh_cells.get(sample.node)
        if cell is None:
            continue
        uf = sample.uf_percent
        if uf >= new.deploy_threshold:
            excess = sample.load_prbs - new.deploy_threshold / 100 * sample.capacity_prbs
            excess -= new.committed(cell)
            if excess <= 0:
                continue
            candidates = [f for f in sorted(new.frrh_states) if new.deployable(f)]
            for f in candidates:
                if excess <= 0:
                    break
                last = new.last_action.get(f)
                if last and last[0] == "Recall" and now - last[1] < new.control_period:
                    continue
                slot = new.free_slot(cell)
                target = new.cell_slots[cell][slot]
                travel = new.travel_time(new.positions[f], target)
                new.frrh_states[f] = FrrhState.EN_ROUTE
                new.targets[f] = cell
                new.slot_of[f] = slot
                new.last_action[f] = ("Deploy", now)
                actions.append(ControlAction("Deploy", now, f, cell, travel, target))
                excess -= new.frrh_capacity.get(f, 0)
            if excess > 0 and cell not in new.alerted:
                new.alerted.add(cell)
                actions.append(ControlAction("Alert", now, None, cell,
                                             reason="no deployable F-RRH for overload"))
        else:
            new.alerted.discard(cell)
            if uf <= new.recall_threshold:
                for f in sorted(new.targets):
                    if new.targets[f] != cell or new.frrh_states[f] is not FrrhState.DEPLOYED:
                        continue
                    last = new.last_action.get(f)
                    if last and last[0] == "Deploy" and now - last[1] < new.control_period:
                        continue
                    travel = new.start_return(f, now)
                    actions.append(ControlAction("Recall", now, f, cell, travel, new.home[f],
                                                 reason="load below recall threshold"))
    return new, actions


# -- admission -------------------------------------------------------------

def select_candidate(candidates: Iterable[tuple[int, int]], demand: int) -> int | None:
    """Node with the most free PRBs (ties to the lowest id) if it fits ``demand``."""
    best = None
    for node, free in candidates:
        if best is None or free > best[1] or (free == best[1] and node < best[0]):
            best = (node, free)
    if best is None or best[1] < demand:
        return None
    return best[0]


def admit_ue(ue: UeSession, candidates: Iterable[tuple[int, int]], timeout: float) -> int | None:
    """Try to attach ``ue``; returns the node id, or None if it must wait.

    With ``timeout <= 0`` there is no waiting room and a miss blocks the UE.
    """
    node = select_candidate(candidates, ue.demand_prbs)
    if node is not None:
        ue.admit(node)
        return node
    if timeout <= 0:
        ue.block()
    return None


class PrbPool:
    """Per-node PRB bookkeeping with conservation checks."""

    def __init__(self, capacities: dict[int, int]):
        self.capacity = dict(capacities)
        self.free = dict(capacities)
        self.holders: dict[int, set[int]] = {n: set() for n in capacities}

    def candidates(self, nodes: Iterable[int]) -> list[tuple[int, int]]:
        return [(n, self.free[n]) for n in nodes]

    def allocate(self, ue: UeSession) -> None:
        node = ue.node
        if ue.status is not SessionStatus.ADMITTED or node is None:
            raise ConsistencyError(f"session {ue.id} is not admitted")
        if self.free[node] < ue.demand_prbs:
            raise ConsistencyError(f"node {node} over-allocated by session {ue.id}")
        self.free[node] -= ue.demand_prbs
        self.holders[node].add(ue.id)

    def allocated(self, node: int) -> int:
        return self.capacity[node] - self.free[node]

    def check(self) -> None:
        for n, cap in self.capacity.items():
            if not (0 <= self.free[n] <= cap):
                raise ConsistencyError(f"node {n}: free PRBs {self.free[n]} outside [0, {cap}]")


def release_ue(ue: UeSession, pool: PrbPool) -> int:
    """Return the session's PRBs to its node; the freed count is returned."""
    if ue.status is not SessionStatus.ADMITTED or ue.node is None:
        raise ConsistencyError(f"cannot release session {ue.id} in state {ue.status.value}")
    holders = pool.holders[ue.node]
    if ue.id not in holders:
        raise ConsistencyError(f"double release of session {ue.id} on node {ue.node}")
    holders.remove(ue.id)
    pool.free[ue.node] += ue.demand_prbs
    pool.check()
    return ue.demand_prbs
