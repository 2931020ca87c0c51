"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat 3]

Times the admission kernel on its own (no trace building), the FIFO
recursion, and one full hotspot run per backend, and checks the backends
agree while doing so.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from ucran.config import ScenarioConfig
from ucran.core import available_backends, get_backend
from ucran.engine import run


def _admission_inputs(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    arrival = np.cumsum(rng.exponential(1 / 50.0, n))
    holding = rng.exponential(1.0, n)
    demand = rng.integers(1, 4, n).astype(np.int32)
    cell = rng.integers(0, 2, n).astype(np.int32)
    capacity = np.array([40, 40, 20], dtype=np.int32)
    coverage = np.array([[1, 0, 1], [0, 1, 1]], dtype=np.uint8)
    available = np.array([1, 1, 1], dtype=np.uint8)
    return arrival, holding, demand, cell, capacity, coverage, available


def bench_admission(kernels, n: int) -> tuple[float, tuple]:
    args = _admission_inputs(n)
    t = time.perf_counter()
    core = kernels.AdmissionCore(*args, 0.5)
    core.advance(float(args[0][-1]) + 100.0)
    core.finish(float(args[0][-1]) + 100.0)
    log = core.take_log()
    return time.perf_counter() - t, (core.admitted_total, core.blocked_total, len(log[0]))


def bench_fifo(kernels, n: int) -> tuple[float, float]:
    rng = np.random.default_rng(1)
    arr = np.cumsum(rng.exponential(1 / 50.0, n))
    svc = rng.exponential(1 / 100.0, n)
    t = time.perf_counter()
    out = kernels.fifo_sojourn(arr, svc)
    return time.perf_counter() - t, float(out.mean())


def bench_run(name: str) -> tuple[float, str]:
    t = time.perf_counter()
    res = run(ScenarioConfig(), backend=name)
    return time.perf_counter() - t, res.trace.digest()


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sessions", type=int, default=200_000)
    args = ap.parse_args()
    names = available_backends()
    if "compiled" not in names:
        print("compiled kernels not built; only the Python backend is timed")
    rows = {}
    for name in names:
        k = get_backend(name)
        adm = min(bench_admission(k, args.sessions)[0] for _ in range(args.repeat))
        fifo = min(bench_fifo(k, args.sessions)[0] for _ in range(args.repeat))
        full = min(bench_run(name)[0] for _ in range(args.repeat))
        rows[name] = (adm, fifo, full)
        print(f"{name:>9}: admission {adm:8.4f}s  fifo {fifo:8.4f}s  hotspot run {full:7.3f}s")
    if len(rows) == 2:
        results = {n: bench_admission(get_backend(n), 20_000)[1] for n in names}
        digests = {n: bench_run(n)[1] for n in names}
        same = len(set(results.values())) == 1 and len(set(digests.values())) == 1
        p, c = rows["python"], rows["compiled"]
        print(f"  speed-up: admission x{p[0] / c[0]:.1f}  fifo x{p[1] / c[1]:.1f}  "
              f"hotspot run x{p[2] / c[2]:.2f}")
        print(f"  backends agree: {same}")


if __name__ == "__main__":
    main()
