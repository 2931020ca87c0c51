# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event kernels; same names and logs as :mod:`ucran._core_py`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY
from libcpp.vector cimport vector

cnp.import_array()

DEF _FUTURE = 0
DEF _PENDING = 1
DEF _ACTIVE = 2
DEF _BLOCKED = 3
DEF _DONE = 4
DEF _DROPPED = 5

ARRIVE, ADMIT, PEND, BLOCK, DEPART, DROP, MOVE = range(7)


cdef class AdmissionCore:
    """PRB admission over a fixed session stream (see the Python twin)."""

    cdef double[::1] arrival, holding
    cdef int[::1] demand, cell, capacity, free, n_active, status, node_of, available
    cdef unsigned char[:, ::1] coverage
    cdef public int n_cells, n_nodes, n
    cdef double timeout
    cdef int next_arrival
    # pending FIFOs as linked lists threaded through session ids
    cdef int[::1] pend_head, pend_tail, pend_next, pend_len
    cdef long[::1] cell_admitted, cell_pending
    # departure heap keyed on (time, seq)
    cdef double[::1] h_t
    cdef long[::1] h_seq
    cdef int[::1] h_ue
    cdef int h_size
    cdef long seq
    cdef public long admitted_total, blocked_total, dropped_total
    cdef vector[double] log_t
    cdef vector[int] log_code, log_ue, log_node, log_count

    def __init__(self, arrival, holding, demand, cell, capacity, coverage, available, timeout):
        self.arrival = np.ascontiguousarray(arrival, dtype=np.float64)
        self.holding = np.ascontiguousarray(holding, dtype=np.float64)
        self.demand = np.ascontiguousarray(demand, dtype=np.int32)
        self.cell = np.ascontiguousarray(cell, dtype=np.int32)
        self.capacity = np.ascontiguousarray(capacity, dtype=np.int32)
        self.free = np.array(capacity, dtype=np.int32)
        self.n_nodes = self.capacity.shape[0]
        self.n_active = np.zeros(self.n_nodes, dtype=np.int32)
        cov = np.ascontiguousarray(coverage, dtype=np.uint8)
        self.coverage = cov
        self.n_cells = cov.shape[0]
        self.available = np.array(available, dtype=np.int32)
        self.timeout = float(timeout)
        self.n = self.arrival.shape[0]
        n = self.n
        self.status = np.zeros(n, dtype=np.int32)
        self.node_of = np.full(n, -1, dtype=np.int32)
        self.next_arrival = 0
        self.pend_head = np.full(self.n_cells, -1, dtype=np.int32)
        self.pend_tail = np.full(self.n_cells, -1, dtype=np.int32)
        self.pend_len = np.zeros(self.n_cells, dtype=np.int32)
        self.pend_next = np.full(max(n, 1), -1, dtype=np.int32)
        self.cell_admitted = np.zeros(self.n_cells, dtype=np.int64)
        self.cell_pending = np.zeros(self.n_cells, dtype=np.int64)
        self.h_t = np.zeros(max(n, 1), dtype=np.float64)
        self.h_seq = np.zeros(max(n, 1), dtype=np.int64)
        self.h_ue = np.zeros(max(n, 1), dtype=np.int32)
        self.h_size = 0
        self.seq = 0
        self.admitted_total = 0
        self.blocked_total = 0
        self.dropped_total = 0
        arr = np.asarray(self.arrival)
        if n and arr.min() < 0:
            raise ValueError("arrival times must be >= 0")
        if n > 1 and np.any(np.diff(arr) < 0):
            raise ValueError("arrival times must be sorted")

    # -- queries ----------------------------------------------------------
    def free_prbs(self, int node):
        return self.free[node]

    def allocated(self, int node):
        return self.capacity[node] - self.free[node]

    def active(self, int node):
        return self.n_active[node]

    def cell_demand(self, int cell):
        return self.cell_admitted[cell] + self.cell_pending[cell]

    def pending_count(self, int cell):
        return self.pend_len[cell]

    def session_status(self, int ue):
        return self.status[ue]

    def session_node(self, int ue):
        return self.node_of[ue]

    def take_log(self):
        out = (list(self.log_t), list(self.log_code), list(self.log_ue),
               list(self.log_node), list(self.log_count))
        self.log_t.clear()
        self.log_code.clear()
        self.log_ue.clear()
        self.log_node.clear()
        self.log_count.clear()
        return out

    # -- internals ----------------------------------------------------------
    cdef inline void _emit(self, double t, int code, int ue, int node, int count):
        self.log_t.push_back(t)
        self.log_code.push_back(code)
        self.log_ue.push_back(ue)
        self.log_node.push_back(node)
        self.log_count.push_back(count)

    cdef inline bint _less(self, int a, int b):
        return self.h_t[a] < self.h_t[b] or (self.h_t[a] == self.h_t[b] and self.h_seq[a] < self.h_seq[b])

    cdef void _swap(self, int a, int b):
        cdef double t = self.h_t[a]
        cdef long s = self.h_seq[a]
        cdef int u = self.h_ue[a]
        self.h_t[a] = self.h_t[b]
        self.h_seq[a] = self.h_seq[b]
        self.h_ue[a] = self.h_ue[b]
        self.h_t[b] = t
        self.h_seq[b] = s
        self.h_ue[b] = u

    cdef void _heap_push(self, double t, long s, int ue):
        cdef int i = self.h_size
        cdef int p
        self.h_t[i] = t
        self.h_seq[i] = s
        self.h_ue[i] = ue
        self.h_size += 1
        while i > 0:
            p = (i - 1) >> 1
            if self._less(i, p):
                self._swap(i, p)
                i = p
            else:
                break

    cdef void _heap_pop(self):
        cdef int i = 0, l, r, m
        self.h_size -= 1
        if self.h_size == 0:
            return
        self.h_t[0] = self.h_t[self.h_size]
        self.h_seq[0] = self.h_seq[self.h_size]
        self.h_ue[0] = self.h_ue[self.h_size]
        while True:
            l = 2 * i + 1
            r = l + 1
            m = i
            if l < self.h_size and self._less(l, m):
                m = l
            if r < self.h_size and self._less(r, m):
                m = r
            if m == i:
                break
            self._swap(i, m)
            i = m

    cdef int _select(self, int c, int d):
        cdef int best = -1, best_free = -1, k
        for k in range(self.n_nodes):
            if self.coverage[c, k] and self.available[k] and self.free[k] > best_free:
                best = k
                best_free = self.free[k]
        return best if best_free >= d else -1

    cdef void _admit(self, int ue, int k, double now):
        cdef int d = self.demand[ue]
        self.status[ue] = _ACTIVE
        self.node_of[ue] = k
        self.free[k] -= d
        self.n_active[k] += 1
        self.cell_admitted[self.cell[ue]] += d
        self.admitted_total += 1
        self._heap_push(now + self.holding[ue], self.seq, ue)
        self.seq += 1
        self._emit(now, 1, ue, k, self.n_active[k])

    cdef void _pend_push(self, int c, int ue):
        self.pend_next[ue] = -1
        if self.pend_tail[c] >= 0:
            self.pend_next[self.pend_tail[c]] = ue
        else:
            self.pend_head[c] = ue
        self.pend_tail[c] = ue
        self.pend_len[c] += 1

    cdef int _pend_pop(self, int c):
        cdef int ue = self.pend_head[c]
        self.pend_head[c] = self.pend_next[ue]
        if self.pend_head[c] < 0:
            self.pend_tail[c] = -1
        self.pend_len[c] -= 1
        return ue

    cdef void _serve_pending(self, int node, double now):
        cdef int best, best_cell, c, h, k
        while True:
            best = -1
            best_cell = -1
            for c in range(self.n_cells):
                if not self.coverage[c, node] or self.pend_head[c] < 0:
                    continue
                h = self.pend_head[c]
                if best < 0 or self.arrival[h] < self.arrival[best] or \
                        (self.arrival[h] == self.arrival[best] and h < best):
                    best = h
                    best_cell = c
            if best < 0:
                return
            k = self._select(best_cell, self.demand[best])
            if k < 0:
                return
            self._pend_pop(best_cell)
            self.cell_pending[best_cell] -= self.demand[best]
            self._admit(best, k, now)

    cdef double _next_expiry(self, int* c_best):
        cdef double t = INFINITY, te
        cdef int c
        c_best[0] = -1
        for c in range(self.n_cells):
            if self.pend_head[c] >= 0:
                te = self.arrival[self.pend_head[c]] + self.timeout
                if te < t:
                    t = te
                    c_best[0] = c
        return t

    # -- driving -----------------------------------------------------------
    def advance(self, double until):
        cdef double td, te, ta, t
        cdef int ce, ue, k, d, c
        cdef long count = 0
        while True:
            while self.h_size > 0 and self.status[self.h_ue[0]] != _ACTIVE:
                self._heap_pop()
            td = self.h_t[0] if self.h_size > 0 else INFINITY
            te = self._next_expiry(&ce)
            ta = self.arrival[self.next_arrival] if self.next_arrival < self.n else INFINITY
            if td <= te and td <= ta:
                if td >= until:
                    break
                t = self.h_t[0]
                ue = self.h_ue[0]
                self._heap_pop()
                k = self.node_of[ue]
                d = self.demand[ue]
                self.status[ue] = _DONE
                self.free[k] += d
                self.n_active[k] -= 1
                self.cell_admitted[self.cell[ue]] -= d
                self._emit(t, 4, ue, k, self.n_active[k])
                self._serve_pending(k, t)
            elif te <= ta:
                if te >= until:
                    break
                ue = self._pend_pop(ce)
                self.cell_pending[ce] -= self.demand[ue]
                self.status[ue] = _BLOCKED
                self.blocked_total += 1
                self._emit(te, 3, ue, -1, 0)
            else:
                if ta >= until:
                    break
                ue = self.next_arrival
                self.next_arrival += 1
                c = self.cell[ue]
                self._emit(ta, 0, ue, -1, c)
                k = self._select(c, self.demand[ue])
                if k >= 0:
                    self._admit(ue, k, ta)
                elif self.timeout > 0:
                    self.status[ue] = _PENDING
                    self._pend_push(c, ue)
                    self.cell_pending[c] += self.demand[ue]
                    self._emit(ta, 2, ue, -1, 0)
                else:
                    self.status[ue] = _BLOCKED
                    self.blocked_total += 1
                    self._emit(ta, 3, ue, -1, 0)
            count += 1
        return count

    def set_coverage(self, int cell, int node, flag):
        self.coverage[cell, node] = 1 if flag else 0

    def set_available(self, int node, flag, double now):
        cdef int ue, d, k
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
                self._emit(now, 6, ue, k, self.n_active[k])
            else:
                self.status[ue] = _DROPPED
                self.cell_admitted[self.cell[ue]] -= d
                self.dropped_total += 1
                self._emit(now, 5, ue, node, self.n_active[node])

    def finish(self, double now):
        cdef int c, ue
        for c in range(self.n_cells):
            while self.pend_head[c] >= 0:
                ue = self._pend_pop(c)
                self.cell_pending[c] -= self.demand[ue]
                self.status[ue] = _BLOCKED
                self.blocked_total += 1
                self._emit(now, 3, ue, -1, 0)


def fifo_sojourn(arrivals, services):
    """Sojourn times of a single FIFO server (Lindley recursion)."""
    cdef double[::1] a = np.ascontiguousarray(arrivals, dtype=np.float64)
    cdef double[::1] s = np.ascontiguousarray(services, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double free_at = -INFINITY, start
    for i in range(n):
        start = a[i] if a[i] > free_at else free_at
        free_at = start + s[i]
        o[i] = free_at - a[i]
    return out


def time_average_in_system(starts, ends, double t0, double t1):
    """Time-average count of intervals ``[start, end)`` alive inside ``[t0, t1]``."""
    if t1 <= t0:
        return 0.0
    cdef double[::1] si = np.sort(np.asarray(starts, dtype=np.float64))
    cdef double[::1] ei = np.sort(np.asarray(ends, dtype=np.float64))
    cdef Py_ssize_t i = 0, j = 0, n = si.shape[0]
    cdef long level = 0
    cdef double area = 0.0, t = t0, ns, ne, nxt
    while i < n and si[i] <= t0:
        level += 1
        i += 1
    while j < n and ei[j] <= t0:
        level -= 1
        j += 1
    while True:
        ns = si[i] if i < n else INFINITY
        ne = ei[j] if j < n else INFINITY
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
