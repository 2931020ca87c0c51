"""Run traces, per-run metrics, sweep aggregation and CSV/text emission."""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from statistics import mean, stdev
from typing import Iterable

from scipy import stats

from .errors import ValidationError

CSV_HEADER = ("architecture,ue_count,seed_count,avg_e2e_delay_s,delay_ci,blocking_prob,"
              "blocking_ci,total_power_w,power_ci")
NA = "NA"
ARCH_ORDER = {"Macro": 0, "CRAN": 1, "UCRAN": 2}


class Trace:
    """Line-oriented event log of one run.

    The first line is a ``#`` header of ``key=value`` pairs; every other line
    starts with the event time and an upper-case kind tag.
    """

    def __init__(self, header: dict | None = None):
        self.header = dict(header or {})
        self.lines: list[str] = []

    def add(self, line: str) -> None:
        self.lines.append(line)

    def extend(self, lines: Iterable[str]) -> None:
        self.lines.extend(lines)

    def header_line(self) -> str:
        return "# ucran-trace v1 " + " ".join(f"{k}={v}" for k, v in self.header.items())

    def text(self) -> str:
        return "\n".join([self.header_line(), *self.lines]) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.text())

    @property
    def empty(self) -> bool:
        """A zero-length run: header only, no events at all."""
        return not self.lines and float(self.header.get("duration", "nan")) == 0.0

    @property
    def complete(self) -> bool:
        if self.empty:
            return True
        return bool(self.lines) and self.lines[-1].split(" ", 2)[1] == "END"

    @classmethod
    def parse(cls, text: str) -> "Trace":
        rows = text.splitlines()
        if not rows or not rows[0].startswith("# ucran-trace"):
            raise ValidationError("not a ucran trace (missing header)")
        header = dict(tok.split("=", 1) for tok in rows[0].split()[3:])
        t = cls(header)
        t.lines = rows[1:]
        return t

    @classmethod
    def read(cls, path: str | Path) -> "Trace":
        return cls.parse(Path(path).read_text())


@dataclass
class MetricsRow:
    architecture: str
    ue_count: int
    seed_count: int
    avg_e2e_delay_s: float | None
    blocking_probability: float
    total_power_w: float | None
    delay_ci: float | None = None
    blocking_ci: float | None = None
    power_ci: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.blocking_probability <= 1.0):
            raise ValidationError(f"blocking probability {self.blocking_probability} outside [0, 1]")


@dataclass
class MetricsReport:
    rows: list[MetricsRow]

    def __post_init__(self):
        keys = [(r.architecture, r.ue_count) for r in self.rows]
        if len(set(keys)) != len(keys):
            raise ValidationError("metrics rows must be unique per (architecture, ue_count)")

    def row(self, architecture: str, ue_count: int) -> MetricsRow:
        for r in self.rows:
            if r.architecture == architecture and r.ue_count == ue_count:
                return r
        raise KeyError((architecture, ue_count))

    def sorted_rows(self) -> list[MetricsRow]:
        return sorted(self.rows, key=lambda r: (ARCH_ORDER.get(r.architecture, 9),
                                                r.architecture, r.ue_count))


def compute_metrics(trace: Trace) -> MetricsReport:
    """Per-run averages restricted to UEs / samples after the warm-up."""
    if not trace.complete:
        raise ValidationError("trace incomplete: no END event")
    if trace.empty:
        return MetricsReport([])
    h = trace.header
    warmup = float(h.get("warmup", 0.0))
    arrived_at: dict[int, float] = {}
    generated = admitted = blocked = dropped = 0
    delays: list[float] = []
    power: list[float] = []
    extras: dict = {}
    edge = bbu = 0
    for line in trace.lines:
        parts = line.split(" ")
        kind = parts[1]
        if kind == "ARR":
            t = float(parts[0])
            ue = int(parts[2])
            arrived_at[ue] = t
            if t >= warmup:
                generated += 1
        elif kind == "ADM":
            if arrived_at[int(parts[2])] >= warmup:
                admitted += 1
        elif kind == "BLK":
            if arrived_at[int(parts[2])] >= warmup:
                blocked += 1
        elif kind == "DRP":
            if arrived_at.get(int(parts[2]), -1.0) >= warmup:
                dropped += 1
        elif kind == "DLY":
            if float(parts[3]) >= warmup:
                delays.append(float(parts[7]))
                if parts[4] == "EdgeFRRH":
                    edge += 1
                elif parts[4] == "BBUPool":
                    bbu += 1
        elif kind == "POWER":
            if float(parts[0]) >= warmup:
                power.append(float(parts[2]))
        elif kind == "METRIC":
            extras[parts[2]] = float(parts[3])
    if admitted + blocked != generated:
        raise ValidationError(
            f"session conservation broken: {admitted} admitted + {blocked} blocked "
            f"!= {generated} generated")
    if generated:
        extras["dropped"] = dropped
    if edge + bbu:
        extras["edge_fraction"] = edge / (edge + bbu)
    row = MetricsRow(
        architecture=h.get("arch", "?"),
        ue_count=int(h.get("ue_count", 0)),
        seed_count=1,
        avg_e2e_delay_s=mean(delays) if delays else None,
        blocking_probability=blocked / generated if generated else 0.0,
        total_power_w=mean(power) if power else None,
        extras=extras,
    )
    return MetricsReport([row])


def ci_halfwidth(values: list[float], level: float = 0.95) -> float | None:
    """Student-t half width of the mean; None with fewer than two values."""
    if len(values) < 2:
        return None
    s = stdev(values)
    return float(stats.t.ppf(0.5 + level / 2, len(values) - 1) * s / math.sqrt(len(values)))


def aggregate(rows: list[MetricsRow]) -> MetricsRow:
    """Combine per-seed rows of one (architecture, ue_count) point."""
    delays = [r.avg_e2e_delay_s for r in rows if r.avg_e2e_delay_s is not None]
    blocking = [r.blocking_probability for r in rows]
    power = [r.total_power_w for r in rows if r.total_power_w is not None]
    extras: dict = {}
    for key in sorted({k for r in rows for k in r.extras}):
        vals = [r.extras[k] for r in rows for k in [key] if k in r.extras]
        extras[key] = mean(vals)
    return MetricsRow(
        architecture=rows[0].architecture,
        ue_count=rows[0].ue_count,
        seed_count=len(rows),
        avg_e2e_delay_s=mean(delays) if delays else None,
        blocking_probability=mean(blocking),
        total_power_w=mean(power) if power else None,
        delay_ci=ci_halfwidth(delays),
        blocking_ci=ci_halfwidth(blocking),
        power_ci=ci_halfwidth(power),
        extras=extras,
    )


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return NA
    return format(x, ".6g")


def csv_text(report: MetricsReport) -> str:
    out = [CSV_HEADER]
    for r in report.sorted_rows():
        out.append(",".join([
            r.architecture, str(r.ue_count), str(r.seed_count),
            _num(r.avg_e2e_delay_s), _num(r.delay_ci),
            _num(r.blocking_probability), _num(r.blocking_ci),
            _num(r.total_power_w), _num(r.power_ci),
        ]))
    return "\n".join(out) + "\n"


def text_report(report: MetricsReport) -> str:
    out = []
    for r in report.sorted_rows():
        out.append(f"[{r.architecture} ue_count={r.ue_count}]")
        out.append(f"seed_count = {r.seed_count}")
        out.append(f"avg_e2e_delay_s = {_num(r.avg_e2e_delay_s)} +/- {_num(r.delay_ci)}")
        out.append(f"blocking_prob = {_num(r.blocking_probability)} +/- {_num(r.blocking_ci)}")
        out.append(f"total_power_w = {_num(r.total_power_w)} +/- {_num(r.power_ci)}")
        for k, v in sorted(r.extras.items()):
            out.append(f"{k} = {_num(float(v))}")
        out.append("")
    return "\n".join(out)


def read_csv(text: str) -> list[dict]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append({k: (None if v == NA else v) for k, v in rec.items()})
    return rows


def emit_results(report: MetricsReport, out_dir: str | Path, fmt: str = "csv",
                 stem: str = "results") -> Path:
    if not report.rows:
        raise ValidationError("refusing to emit an empty report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        path = out_dir / f"{stem}.csv"
        path.write_text(csv_text(report))
    elif fmt == "txt":
        path = out_dir / f"{stem}.txt"
        path.write_text(text_report(report))
    else:
        raise ValidationError(f"unknown output format {fmt!r}")
    return path
