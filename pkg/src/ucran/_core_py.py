"""Pure-Python event kernels; reference semantics for the compiled ``_core``.

Both modules expose the same names and must produce identical logs.
"""
from __future__ import annotations

import heapq
import math
from collections import deque

import numpy as np

ARRIVE, ADMIT, PEND, BLOCK, DEPART, DROP, MOVE = range(7)

_FUTURE, _PENDING, _ACTIVE, _BLOCKED, _DONE, _DROPPED = range(6)


class AdmissionCore:
    """PRB admission over a fixed session stream.

    Sessions are indexed 0..n-1 in arrival order; nodes 0..m-1 in ascending
    node-id order, so "lowest index" is the tie rule.  ``advance(until)``
    processes every kernel event strictly before ``until``: departures first,
    then admission-timeout expiries, then arrivals at equal instants.
    """

    def __init__(self, arrival, holding, demand, cell, capacity, coverage, available,
                 timeout):
        self.arrival = [float(x) for x in arrival]
        self.holding = [float(x) for x in holding]
        self.demand = [int(x) for x in demand]
        self.cell = [int(x) for x in cell]
        self.capacity = [int(x) for x in capacity]
        self.free = list(self.capacity)
        self.n_active = [0] * len(self.capacity)
        cov = np.asarray(coverage, dtype=np.uint8)
        self.n_cells, self.n_nodes = cov.shape
        self.coverage = [[int(v) for v in row] for row in cov]
        self.available = [int(x) for x in available]
        self.timeout = float(timeout)
        n = len(self.arrival)
        self.n = n
        self.status = [_FUTURE] * n
        self.node_of = [-1] * n
        self.next_arrival = 0
        self.pending = [deque() for _ in range(self.n_cells)]
        self.cell_admitted = [0] * self.n_cells
        self.cell_pending = [0] * self.n_cells
        self.dep_heap: list = []
        self.seq = 0
        self.admitted_total = 0
        self.blocked_total = 0
        self.dropped_total = 0
        self._log = ([], [], [], [], [])
        for c in self.arrival:
            if c < 0:
                raise ValueError("arrival times must be >= 0")
        if any(b < a for a, b in zip(self.arrival, self.arrival[1:])):
            raise ValueError("arrival times must be sorted")

    # -- queries ----------------------------------------------------------
    def free_prbs(self, node):
        return self.free[node]

    def allocated(self, node):
        return self.capacity[node] - self.free[node]

    def active(self, node):
        return self.n_active[node]

    def cell_demand(self, cell):
        return self.cell_admitted[cell] + self.cell_pending[cell]

    def pending_count(self, cell):
        return len(self.pending[cell])

    def session_status(self, ue):
        return self.status[ue]

    def session_node(self, ue):
        return self.node_of[ue]

    def take_log(self):
        out = self._log
        self._log = ([], [], [], [], [])
        return out

    # -- internals ----------------------------------------------------------
    def _emit(self, t, code, ue, node, count):
        log = self._log
        log[0].append(t)
        log[1].append(code)
        log[2].append(ue)
        log[3].append(node)
        log[4].append(count)

    def _select(self, c, d):
        best = -1
        best_free = -1
        cov = self.coverage[c]
        avail = self.available
        free = self.free
        for k in range(self.n_nodes):
            if cov[k] and avail[k] and free[k] > best_free:
                best = k
                best_free = free[k]
        return best if best_free >= d else -1

    def _admit(self, ue, k, now):
        d = self.demand[ue]
        self.status[ue] = _ACTIVE
        self.node_of[ue] = k
        self.free[k] -= d
        self.n_active[k] += 1
        self.cell_admitted[self.cell[ue]] += d
        self.admitted_total += 1
        heapq.heappush(self.dep_heap, (now + self.holding[ue], self.seq, ue))
        self.seq += 1
        self._emit(now, ADMIT, ue, k, self.n_active[k])

    def _serve_pending(self, node, now):
        while True:
            best = -1
            best_cell = -1
            for c in range(self.n_cells):
                if not self.coverage[c][node] or not self.pending[c]:
                    continue
                h = self.pending[c][0]
                if best < 0 or self.arrival[h] < self.arrival[best] or \
                        (self.arrival[h] == self.arrival[best] and h < best):
                    best, best_cell = h, c
            if best < 0:
                return
            k = self._select(best_cell, self.demand[best])
            if k < 0:
                return
            self.pending[best_cell].popleft()
            self.cell_pending[best_cell] -= self.demand[best]
            self._admit(best, k, now)

    def _next_expiry(self):
        t = math.inf
        c_best = -1
        for c in range(self.n_cells):
            q = self.pending[c]
            if q:
                te = self.arrival[q[0]] + self.timeout
                if te < t:
                    t, c_best = te, c
        return t, c_best

    # -- driving -----------------------------------------------------------
    def advance(self, until):
        heap = self.dep_heap
        status = self.status
        arrival = self.arrival
        n = self.n
        count = 0
        while True:
            while heap and status[heap[0][2]] != _ACTIVE:
                heapq.heappop(heap)
            td = heap[0][0] if heap else math.inf
            te, ce = self._next_expiry()
            ta = arrival[self.next_arrival] if self.next_arrival < n else math.inf
            if td <= te and td <= ta:
                if td >= until:
                    break
                t, _, ue = heapq.heappop(heap)
                k = self.node_of[ue]
                d = self.demand[ue]
                status[ue] = _DONE
                self.free[k] += d
                self.n_active[k] -= 1
                self.cell_admitted[self.cell[ue]] -= d
                self._emit(t, DEPART, ue, k, self.n_active[k])
                self._serve_pending(k, t)
            elif te <= ta:
                if te >= until:
                    break
                ue = self.pending[ce].popleft()
                self.cell_pending[ce] -= self.demand[ue]
                status[ue] = _BLOCKED
                self.blocked_total += 1
                self._emit(te, BLOCK, ue, -1, 0)
            else:
                if ta >= until:
                    break
                ue = self.next_arrival
                self.next_arrival += 1
                c = self.cell[ue]
                self._emit(ta, ARRIVE, ue, -1, c)
                k = self._select(c, self.demand[ue])
                if k >= 0:
                    self._admit(ue, k, ta)
                elif self.timeout > 0:
                    status[ue] = _PENDING
                    self.pending[c].append(ue)
                    self.cell_pending[c] += self.demand[ue]
                    self._emit(ta, PEND, ue, -1, 0)
                else:
                    status[ue] = _BLOCKED
                    self.blocked_total += 1
                    self._emit(ta, BLOCK, ue, -1, 0)
            count += 1
        return count

    def set_coverage(self, cell, node, flag):
        self.coverage[cell][node] = 1 if flag else 0

    def set_available(self, node, flag, now):
        """Bring a node into service (serving waiting UEs) or take it out.

        Taking a node out hands each of its sessions, in id order, to the
        best other candidate of the session's cell; sessions nobody can take
        are dropped.
        """
        if flag:
            self.available[node] = 1
            self._serve_pending(node, now)
            return
        self.available[node] = 0
        for ue in range(self.n):
            if self.status[ue] != _ACTIVE or self.node_of[ue] != node:
                continue
            d = self.demand[ue]
            self.free[node] += d
            self.n_active[node] -= 1
            k = self._select(self.cell[ue], d)
            if k >= 0:
                self.node_of[ue] = k
                self.free[k] -= d
                self.n_active[k] += 1
                self._emit(now, MOVE, ue, k, self.n_active[k])
            else:
                self.status[ue] = _DROPPED
                self.cell_admitted[self.cell[ue]] -= d
                self.dropped_total += 1
                self._emit(now, DROP, ue, node, self.n_active[node])

    def finish(self, now):
        """Block every UE still waiting when the run ends."""
        for c in range(self.n_cells):
            q = self.pending[c]
            while q:
                ue = q.popleft()
                self.cell_pending[c] -= self.demand[ue]
                self.status[ue] = _BLOCKED
                self.blocked_total += 1
                self._emit(now, BLOCK, ue, -1, 0)


def fifo_sojourn(arrivals, services):
    """Sojourn times of a single FIFO server (Lindley recursion)."""
    arrivals = np.asarray(arrivals, dtype=float)
    services = np.asarray(services, dtype=float)
    out = np.empty(len(arrivals))
    free_at = -math.inf
    for i in range(len(arrivals)):
        a = arrivals[i]
        start = a if a > free_at else free_at
        free_at = start + services[i]
        out[i] = free_at - a
    return out


def time_average_in_system(starts, ends, t0, t1):
    """Time-average count of intervals ``[start, end)`` alive inside ``[t0, t1]``.

    Sweeps the merged start/end instants rather than summing durations.
    """
    starts = np.asarray(starts, dtype=float)
    ends = np.asarray(ends, dtype=float)
    if t1 <= t0:
        return 0.0
    si = np.sort(starts)
    ei = np.sort(ends)
    i = j = 0
    n = len(si)
    level = 0
    area = 0.0
    t = t0
    # intervals already open at t0
    while i < n and si[i] <= t0:
        level += 1
        i += 1
    while j < n and ei[j] <= t0:
        level -= 1
        j += 1
    while True:
        ns = si[i] if i < n else math.inf
        ne = ei[j] if j < n else math.inf
        nxt = ns if ns < ne else ne
        if nxt >= t1:
            area += level * (t1 - t)
            break
        area += level * (nxt - t)
        t = nxt
        if ne <= ns:
            level -= 1
            j += 1
        else:
            level += 1
            i += 1
    return area / (t1 - t0)
