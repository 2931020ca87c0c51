"""End-to-end delay: per-hop communication, site processing, site choice."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DomainError, DropNoLink, DropNoProcessor, RoutingError
from .topology import LinkSpec


class Site(Enum):
    EDGE = "EdgeFRRH"
    BBU = "BBUPool"
    MACRO = "MacroBS"


@dataclass(frozen=True)
class DelayBreakdown:
    comm_s: float
    proc_s: float
    total_s: float
    site: Site


def total_delay(comm_s: float, proc_s: float, site: Site) -> DelayBreakdown:
    if comm_s < 0 or proc_s < 0:
        raise DomainError(f"delays must be >= 0 (comm={comm_s}, proc={proc_s})")
    return DelayBreakdown(comm_s, proc_s, comm_s + proc_s, site)


@dataclass
class QueueModel:
    """Single FIFO server fed task by task (Lindley recursion).

    Service times are supplied by the caller, so the same object serves both
    the exponential-service processing sites and deterministic link queues.
    """

    service_rate: float
    busy_until: float = 0.0
    _in_system: deque = field(default_factory=deque, repr=False)
    completions: int = 0
    busy_area: float = 0.0

    def __post_init__(self):
        if self.service_rate <= 0:
            raise DomainError("service_rate must be > 0")

    def in_system(self, now: float) -> int:
        q = self._in_system
        while q and q[0] <= now:
            q.popleft()
        return len(q)

    def predict_sojourn(self, now: float) -> float:
        """Expected sojourn of a task arriving now (memoryless service)."""
        return (self.in_system(now) + 1) / self.service_rate

    def wait(self, now: float) -> float:
        return max(0.0, self.busy_until - now)

    def submit(self, now: float, service_s: float) -> float:
        """Enqueue a task; returns its sojourn (wait + service)."""
        start = max(now, self.busy_until)
        self.busy_until = start + service_s
        self._in_system.append(self.busy_until)
        self.completions += 1
        self.busy_area += self.busy_until - now
        return self.busy_until - now


def hop_delay(link: LinkSpec, payload_bits: float, rate_bps: float | None = None, *,
              now: float = 0.0, queue: QueueModel | None = None) -> float:
    """Fixed latency + serialisation + wait behind earlier frames on the link."""
    rate = link.capacity_bps if rate_bps is None else rate_bps
    if rate <= 0:
        raise DropNoLink(f"link {link.id} has zero rate")
    tx = payload_bits / rate
    if queue is None:
        return link.fixed_latency + tx
    return link.fixed_latency + queue.submit(now, tx)


def path_delay(route: Sequence[LinkSpec], payload_bits: float,
               rates: Sequence[float] | None = None, *, now: float = 0.0,
               queues: dict[int, QueueModel] | None = None) -> float:
    """Sum of hop delays along ``route``; each hop starts when the previous ends."""
    for a, b in zip(route, route[1:]):
        if not set(a.endpoints) & set(b.endpoints):
            raise RoutingError(f"links {a.id} and {b.id} are not adjacent")
    t = now
    total = 0.0
    for k, link in enumerate(route):
        rate = None if rates is None else rates[k]
        q = None if queues is None else queues.get(link.id)
        d = hop_delay(link, payload_bits, rate, now=t, queue=q)
        total += d
        t += d
    return total


@dataclass(frozen=True)
class SiteOption:
    """Predicted communication and processing delay of one candidate site."""

    comm_s: float
    proc_s: float

    @classmethod
    def from_queue(cls, comm_s: float, queue: QueueModel, now: float) -> "SiteOption":
        return cls(comm_s, queue.predict_sojourn(now + comm_s))


@dataclass(frozen=True)
class SiteDecision:
    site: Site
    edge_total: float | None
    bbu_total: float | None

    def consistent(self) -> bool:
        """The chosen site is the argmin of the two predictions (ties to edge)."""
        if self.edge_total is None:
            return self.site is Site.BBU
        if self.bbu_total is None:
            return self.site is Site.EDGE
        want = Site.EDGE if self.edge_total <= self.bbu_total else Site.BBU
        return self.site is want


def processing_site_decision(edge: SiteOption | None, bbu: SiteOption | None) -> SiteDecision:
    """Pick the site with the smaller predicted comm + processing delay.

    ``edge`` is None when no MEC-enabled F-RRH sits on the path.
    """
    if edge is None and bbu is None:
        raise DropNoProcessor("no MEC F-RRH on the path and no reachable BBU pool")
    e = None if edge is None else edge.comm_s + edge.proc_s
    b = None if bbu is None else bbu.comm_s + bbu.proc_s
    if e is not None and (b is None or e <= b):
        return SiteDecision(Site.EDGE, e, b)
    return SiteDecision(Site.BBU, e, b)


def mm1_expected_sojourn(arrival_rate: float, service_rate: float) -> float | None:
    """Steady-state sojourn, or None when the site is saturated."""
    if arrival_rate >= service_rate:
        return None
    return 1.0 / (service_rate - arrival_rate)


@dataclass(frozen=True)
class QueueRun:
    arrivals: int
    mean_sojourn: float
    time_avg_in_system: float
    arrival_rate: float
    horizon: float

    @property
    def little_ratio(self) -> float:
        return self.time_avg_in_system / (self.arrival_rate * self.mean_sojourn)


def simulate_mm1(arrival_rate: float, service_rate: float, completions: int, seed: int,
                 backend=None) -> QueueRun:
    """Poisson/exponential FIFO queue run through the compiled kernels.

    The time-average number in system is integrated over ``[0, last arrival]``
    independently of the per-task sojourns, so Little's law is a real check.
    """
    from . import core
    k = backend or core.kernels
    rng = np.random.default_rng(seed)
    arrivals = np.cumsum(rng.exponential(1.0 / arrival_rate, completions))
    services = rng.exponential(1.0 / service_rate, completions)
    sojourn = k.fifo_sojourn(arrivals, services)
    horizon = float(arrivals[-1])
    area = k.time_average_in_system(arrivals, arrivals + sojourn, 0.0, horizon)
    return QueueRun(completions, float(np.mean(sojourn)), area,
                    completions / horizon, horizon)
