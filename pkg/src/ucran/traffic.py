"""UE session streams: local Poisson traffic, handover waves, load sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConsistencyError, ValidationError
from .topology import Cell

# stream tags keep the local, handover and background draws independent
LOCAL_STREAM = 1
HANDOVER_STREAM = 2


class Origin(Enum):
    LOCAL = "L"
    HANDOVER = "H"


class SessionStatus(Enum):
    PENDING = "Pending"
    ADMITTED = "Admitted"
    BLOCKED = "Blocked"


@dataclass(slots=True)
class UeSession:
    id: int
    cell: int
    arrival_time: float
    holding_time: float
    demand_prbs: int = 2
    demand_rate: float = 0.0
    origin: Origin = Origin.LOCAL
    status: SessionStatus = SessionStatus.PENDING
    node: int | None = None

    def __post_init__(self):
        if self.holding_time <= 0:
            raise ValidationError(f"session {self.id}: holding_time must be > 0")
        if self.demand_prbs < 1:
            raise ValidationError(f"session {self.id}: demand_prbs must be >= 1")

    def admit(self, node: int) -> None:
        if self.status is not SessionStatus.PENDING:
            raise ConsistencyError(f"session {self.id}: {self.status.value} -> Admitted")
        self.status = SessionStatus.ADMITTED
        self.node = node

    def block(self) -> None:
        if self.status is not SessionStatus.PENDING:
            raise ConsistencyError(f"session {self.id}: {self.status.value} -> Blocked")
        self.status = SessionStatus.BLOCKED

    @property
    def departure_time(self) -> float:
        return self.arrival_time + self.holding_time


def _rng(seed: int, cell: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(cell), stream])


def _holding(rng: np.random.Generator, mean: float, n: int) -> np.ndarray:
    h = rng.exponential(mean, n)
    # exponential draws can underflow to exactly 0
    return np.maximum(h, np.finfo(float).tiny)


def generate_arrivals(cell: Cell, target_count: int, duration: float, seed: int, *,
                      mean_holding: float = 120.0, demand_prbs: int = 2,
                      demand_rate: float = 0.0, hard_cap: int = 200_000,
                      stationary_start: bool = True) -> list[UeSession]:
    """Poisson arrivals carrying ``target_count`` Erlangs of sessions.

    The arrival rate is ``target_count / mean_holding``.  With
    ``stationary_start`` the run opens with a Poisson(``target_count``)
    population already attached at t = 0 (the M/M/inf steady state), so the
    mean number of concurrent sessions is ``target_count`` from the first
    instant instead of ramping up over a few holding times.
    """
    if target_count < 0:
        raise ValidationError("target_count must be >= 0")
    if target_count > hard_cap:
        raise ValidationError(f"target_count {target_count} exceeds hard cap {hard_cap}")
    if duration <= 0:
        raise ValidationError("duration must be > 0")
    if target_count == 0:
        return []
    rng = _rng(seed, cell.id, LOCAL_STREAM)
    rate = target_count / mean_holding
    n_new = int(rng.poisson(rate * duration))
    times = np.sort(rng.uniform(0.0, duration, n_new))
    n0 = int(rng.poisson(target_count)) if stationary_start else 0
    holds = _holding(rng, mean_holding, n0 + n_new)
    arrivals = np.concatenate([np.zeros(n0), times])
    return [UeSession(i, cell.id, float(t), float(h), demand_prbs, demand_rate)
            for i, (t, h) in enumerate(zip(arrivals, holds))]


def generate_handover_wave(from_cell: Cell, to_cell: Cell, count: int,
                           window: tuple[float, float], seed: int, *,
                           mean_holding: float = 120.0, demand_prbs: int = 2,
                           demand_rate: float = 0.0) -> list[UeSession]:
    """``count`` sessions handed from ``from_cell`` into ``to_cell``.

    Arrival instants are uniform over ``window``; the sessions are added on
    top of the destination cell's local traffic.
    """
    if count < 0:
        raise ValidationError("handover count must be >= 0")
    start, end = window
    if not (0.0 <= start <= end):
        raise ValidationError(f"bad handover window {window}")
    if count == 0:
        return []
    rng = _rng(seed, from_cell.id * 1000 + to_cell.id, HANDOVER_STREAM)
    times = np.sort(rng.uniform(start, end, count))
    holds = _holding(rng, mean_holding, count)
    return [UeSession(i, to_cell.id, float(t), float(h), demand_prbs, demand_rate,
                      Origin.HANDOVER)
            for i, (t, h) in enumerate(zip(times, holds))]


def merge_streams(*streams: list[UeSession]) -> list[UeSession]:
    """One stream ordered by arrival time, with ids renumbered 0..n-1.

    Ties keep the order of the arguments, then the order inside each stream.
    """
    tagged = [(s.arrival_time, k, i, s) for k, stream in enumerate(streams)
              for i, s in enumerate(stream)]
    tagged.sort(key=lambda x: x[:3])
    out = []
    for new_id, (_, _, _, s) in enumerate(tagged):
        s.id = new_id
        out.append(s)
    return out


@dataclass(frozen=True)
class LoadSchedule:
    fractions: tuple[float, ...]
    max_ues: int

    def __post_init__(self):
        fr = tuple(self.fractions)
        if any(not (0.1 - 1e-12 <= f <= 1.0 + 1e-12) for f in fr):
            raise ValidationError("load fractions must lie in [0.1, 1.0]")
        if any(b <= a for a, b in zip(fr, fr[1:])):
            raise ValidationError("load fractions must be strictly increasing")
        if self.max_ues <= 0:
            raise ValidationError("max_ues must be > 0")

    def ues_at(self, fraction: float) -> int:
        return int(math.floor(fraction * self.max_ues + 0.5))

    @property
    def ues_at_fraction(self) -> dict[float, int]:
        return {f: self.ues_at(f) for f in self.fractions}


@dataclass(frozen=True)
class SweepPoint:
    fraction: float
    ue_count: int


def schedule_sweep(schedule: LoadSchedule) -> list[SweepPoint]:
    if not schedule.fractions:
        raise ValidationError("empty load schedule")
    return [SweepPoint(f, schedule.ues_at(f)) for f in schedule.fractions]


def event_lines(sessions: list[UeSession]) -> list[str]:
    """Arrival/departure trace lines ``time ue cell kind`` in time order."""
    events = []
    for s in sessions:
        events.append((s.arrival_time, 1, s.id, f"{s.arrival_time!r} {s.id} {s.cell} ARR"))
        events.append((s.departure_time, 0, s.id, f"{s.departure_time!r} {s.id} {s.cell} DEP"))
    events.sort(key=lambda e: e[:3])
    return [e[3] for e in events]
