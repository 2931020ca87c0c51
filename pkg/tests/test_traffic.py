import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucran.errors import ConsistencyError, ValidationError
from ucran.topology import Cell
from ucran.traffic import (LoadSchedule, Origin, SessionStatus, UeSession, event_lines,
                           generate_arrivals, generate_handover_wave, merge_streams,
                           schedule_sweep)

C1 = Cell(1, (1,), 3.0, 1000)
C2 = Cell(2, (2,), 3.0, 1000)


def test_arrivals_sorted_and_deterministic():
    a = generate_arrivals(C2, 300, 1000.0, seed=5)
    b = generate_arrivals(C2, 300, 1000.0, seed=5)
    assert [(s.arrival_time, s.holding_time) for s in a] == \
           [(s.arrival_time, s.holding_time) for s in b]
    times = [s.arrival_time for s in a]
    assert times == sorted(times)
    assert all(0.0 <= t < 1000.0 for t in times)


def test_arrival_rate_matches_offered_load():
    # rate = target / holding; count over the run is Poisson(rate * T)
    s = generate_arrivals(C2, 500, 20_000.0, seed=2, stationary_start=False)
    expected = 500 / 120.0 * 20_000.0
    assert abs(len(s) - expected) < 5 * np.sqrt(expected)


def test_stationary_start_population():
    counts = [sum(1 for s in generate_arrivals(C2, 400, 10.0, seed=k) if s.arrival_time == 0.0)
              for k in range(30)]
    assert np.mean(counts) == pytest.approx(400, rel=0.03)


def test_holding_mean():
    s = generate_arrivals(C2, 1000, 5000.0, seed=3)
    assert np.mean([x.holding_time for x in s]) == pytest.approx(120.0, rel=0.03)


def test_zero_target_and_bad_inputs():
    assert generate_arrivals(C2, 0, 100.0, seed=1) == []
    with pytest.raises(ValidationError):
        generate_arrivals(C2, -1, 100.0, seed=1)
    with pytest.raises(ValidationError):
        generate_arrivals(C2, 10, 0.0, seed=1)
    with pytest.raises(ValidationError, match="hard cap"):
        generate_arrivals(C2, 10_000, 100.0, seed=1, hard_cap=5_000)


def test_handover_wave_window():
    w = generate_handover_wave(C1, C2, 200, (450.0, 630.0), seed=1)
    assert len(w) == 200
    assert all(450.0 <= s.arrival_time <= 630.0 and s.cell == 2 for s in w)
    assert all(s.origin is Origin.HANDOVER for s in w)


def test_merge_renumbers_in_time_order():
    a = generate_arrivals(C1, 50, 100.0, seed=1)
    b = generate_handover_wave(C1, C2, 20, (10.0, 20.0), seed=1)
    m = merge_streams(a, b)
    assert [s.id for s in m] == list(range(len(a) + len(b)))
    assert [s.arrival_time for s in m] == sorted(s.arrival_time for s in m)


def test_session_transitions():
    s = UeSession(0, 1, 0.0, 1.0)
    s.admit(3)
    assert s.status is SessionStatus.ADMITTED and s.node == 3
    with pytest.raises(ConsistencyError):
        s.block()
    with pytest.raises(ValidationError):
        UeSession(1, 1, 0.0, 0.0)


def test_schedule_table_points():
    sched = LoadSchedule(tuple(round(0.1 * k, 10) for k in range(1, 11)), 1000)
    assert [p.ue_count for p in schedule_sweep(sched)] == list(range(100, 1001, 100))


@given(st.lists(st.floats(0.1, 1.0), min_size=1, max_size=10, unique=True))
def test_schedule_ue_counts_increase(fr):
    fr = tuple(sorted(fr))
    if any(b - a < 1e-9 for a, b in zip(fr, fr[1:])):
        return
    sched = LoadSchedule(fr, 1000)
    counts = [sched.ues_at(f) for f in fr]
    assert counts == sorted(counts)


def test_schedule_rejects_out_of_range_and_unsorted():
    with pytest.raises(ValidationError):
        LoadSchedule((0.05, 0.5), 1000)
    with pytest.raises(ValidationError):
        LoadSchedule((0.5, 0.3), 1000)


def test_event_lines_order():
    s = [UeSession(0, 1, 0.0, 2.0), UeSession(1, 1, 2.0, 1.0)]
    lines = event_lines(s)
    # departure at t=2 precedes the arrival at t=2
    assert lines[1].endswith("DEP") and lines[2].endswith("ARR")
