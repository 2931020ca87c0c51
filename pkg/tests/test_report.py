import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucran.errors import ValidationError
from ucran.report import (CSV_HEADER, MetricsReport, MetricsRow, Trace, aggregate, ci_halfwidth,
                          compute_metrics, csv_text, emit_results, read_csv, text_report)


def trace(lines, warmup=0.0, arch="CRAN", ue=100):
    t = Trace({"arch": arch, "ue_count": ue, "duration": "10.0", "warmup": repr(warmup)})
    t.extend(lines)
    return t


def test_mean_delay():
    t = trace(["0.0 ARR 0 2 L", "0.0 ADM 0 2 1", "0.0 DLY 0 0.0 BBUPool 0.001 0.003 0.004",
               "1.0 ARR 1 2 L", "1.0 ADM 1 2 1", "1.0 DLY 1 1.0 BBUPool 0.002 0.004 0.006",
               "2.0 END 2 0 0"])
    assert compute_metrics(t).rows[0].avg_e2e_delay_s == pytest.approx(0.005)


def test_blocking_ratio():
    lines = []
    for i in range(100):
        lines.append(f"{i}.0 ARR {i} 2 L")
        lines.append(f"{i}.0 {'BLK' if i % 10 == 0 else 'ADM'} {i}" + ("" if i % 10 == 0 else " 2 1"))
    lines.append("100.0 END 90 10 0")
    row = compute_metrics(trace(lines)).rows[0]
    assert row.blocking_probability == 0.10


def test_constant_power():
    lines = [f"{i}.0 POWER 500.0" for i in range(1, 11)] + ["10.0 END 0 0 0"]
    assert compute_metrics(trace(lines)).rows[0].total_power_w == 500.0


def test_zero_completions_is_not_available_not_zero():
    row = compute_metrics(trace(["0.0 ARR 0 2 L", "0.0 BLK 0", "1.0 END 0 1 0"])).rows[0]
    assert row.avg_e2e_delay_s is None
    assert "NA" in csv_text(MetricsReport([row])).splitlines()[1]


def test_warmup_excluded():
    t = trace(["0.5 ARR 0 2 L", "0.5 BLK 0", "2.0 ARR 1 2 L", "2.0 ADM 1 2 1",
               "2.0 DLY 1 2.0 MacroBS 0.1 0.1 0.2", "0.5 POWER 1.0", "3.0 POWER 5.0",
               "4.0 END 1 1 0"], warmup=1.0)
    row = compute_metrics(t).rows[0]
    assert row.blocking_probability == 0.0 and row.total_power_w == 5.0


def test_incomplete_and_unbalanced_traces():
    with pytest.raises(ValidationError, match="END"):
        compute_metrics(trace(["0.0 ARR 0 2 L"]))
    with pytest.raises(ValidationError, match="conservation"):
        compute_metrics(trace(["0.0 ARR 0 2 L", "1.0 END 0 0 0"]))


def test_trace_roundtrip(tmp_path):
    t = trace(["0.0 ARR 0 2 L", "0.0 BLK 0", "1.0 END 0 1 0"])
    t.write(tmp_path / "t.txt")
    back = Trace.read(tmp_path / "t.txt")
    assert back.digest() == t.digest() and back.header["arch"] == "CRAN"
    with pytest.raises(ValidationError):
        Trace.parse("no header\n")


def test_ci_halfwidth():
    assert ci_halfwidth([1.0]) is None
    # t(0.975, 4) = 2.776445...
    vals = [1.0, 2.0, 3.0, 4.0, 5.0]
    assert ci_halfwidth(vals) == pytest.approx(2.776445 * math.sqrt(2.5) / math.sqrt(5), rel=1e-6)


def row(arch="CRAN", ue=100, d=0.1, b=0.0, p=300.0, n=1):
    return MetricsRow(arch, ue, n, d, b, p)


def test_aggregate():
    agg = aggregate([row(d=0.1, b=0.1, p=100.0), row(d=0.3, b=0.3, p=300.0)])
    assert agg.seed_count == 2
    assert agg.avg_e2e_delay_s == pytest.approx(0.2) and agg.blocking_probability == pytest.approx(0.2)
    assert agg.delay_ci is not None


def test_rows_unique_and_in_range():
    with pytest.raises(ValidationError):
        MetricsReport([row(), row()])
    with pytest.raises(ValidationError):
        row(b=1.5)


def test_csv_order_and_shape():
    rows = [row(a, u) for a in ("UCRAN", "Macro", "CRAN") for u in range(1000, 0, -100)]
    text = csv_text(MetricsReport(rows))
    lines = text.splitlines()
    assert len(lines) == 31 and lines[0] == CSV_HEADER
    keys = [(l.split(",")[0], int(l.split(",")[1])) for l in lines[1:]]
    assert keys == [(a, u) for a in ("Macro", "CRAN", "UCRAN") for u in range(100, 1001, 100)]


def test_emit_is_byte_deterministic(tmp_path):
    rep = MetricsReport([row(), row("UCRAN")])
    a = emit_results(rep, tmp_path / "a").read_bytes()
    b = emit_results(rep, tmp_path / "b").read_bytes()
    assert a == b
    assert emit_results(rep, tmp_path / "c", fmt="txt").read_text() == text_report(rep)
    with pytest.raises(ValidationError):
        emit_results(MetricsReport([]), tmp_path)


pos = st.floats(1e-9, 1e6, allow_nan=False, allow_infinity=False)


@given(pos, st.floats(0, 1), pos)
def test_csv_roundtrip_six_digits(d, b, p):
    rep = MetricsReport([row(d=d, b=b, p=p)])
    back = read_csv(csv_text(rep))[0]
    for got, want in ((back["avg_e2e_delay_s"], d), (back["blocking_prob"], b),
                      (back["total_power_w"], p)):
        assert float(got) == pytest.approx(want, rel=5e-6, abs=0 if want else 1e-300)
        assert float(got) == float(format(want, ".6g"))
