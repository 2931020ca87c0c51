"""Closed-form queueing results used to cross-check the simulator."""
from __future__ import annotations

import math

from .errors import DomainError


def erlang_b(servers: int, offered: float) -> float:
    """Blocking probability of an M/M/c/c loss system.

    Uses the recursion ``B_k = a B_{k-1} / (k + a B_{k-1})`` from ``B_0 = 1``.
    """
    if servers < 0 or offered < 0:
        raise DomainError("servers and offered load must be >= 0")
    b = 1.0
    for k in range(1, servers + 1):
        b = offered * b / (k + offered * b)
    return b


def erlang_b_direct(servers: int, offered: float) -> float:
    """Same quantity from the defining ratio, for small ``servers``."""
    terms = [offered ** k / math.factorial(k) for k in range(servers + 1)]
    return terms[-1] / sum(terms)


def mm1_sojourn(arrival_rate: float, service_rate: float) -> float:
    if not 0 <= arrival_rate < service_rate:
        raise DomainError("M/M/1 needs 0 <= lambda < mu")
    return 1.0 / (service_rate - arrival_rate)


def mm1_in_system(arrival_rate: float, service_rate: float) -> float:
    rho = arrival_rate / service_rate
    if not 0 <= rho < 1:
        raise DomainError("M/M/1 needs utilisation below 1")
    return rho / (1.0 - rho)


def mm1_wait(arrival_rate: float, service_rate: float) -> float:
    """Mean time in queue, excluding service."""
    return mm1_sojourn(arrival_rate, service_rate) - 1.0 / service_rate
