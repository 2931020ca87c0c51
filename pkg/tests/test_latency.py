import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucran.errors import DomainError, DropNoLink, DropNoProcessor, RoutingError
from ucran.latency import (QueueModel, Site, SiteOption, hop_delay, mm1_expected_sojourn,
                           path_delay, processing_site_decision, simulate_mm1, total_delay)
from ucran.oracles import erlang_b, erlang_b_direct, mm1_in_system, mm1_sojourn, mm1_wait
from ucran.topology import LinkKind, LinkSpec

L1 = LinkSpec(1, (1, 2), LinkKind.WIRELESS_FRONTHAUL, 1e-4, 1e8)
L2 = LinkSpec(2, (2, 0), LinkKind.MICROWAVE_BACKHAUL, 2e-4, 1e9)
L3 = LinkSpec(3, (5, 6), LinkKind.WIRELESS_FRONTHAUL, 1e-4, 1e8)

finite = st.floats(0, 10, allow_nan=False)


@given(finite, finite)
def test_total_is_exact_sum(c, p):
    d = total_delay(c, p, Site.EDGE)
    assert d.total_s == c + p


def test_total_rejects_negative():
    with pytest.raises(DomainError):
        total_delay(-1e-9, 0.0, Site.BBU)


def test_hop_delay():
    assert hop_delay(L1, 1e5) == pytest.approx(1e-4 + 1e-3)
    with pytest.raises(DropNoLink):
        hop_delay(L1, 1e5, rate_bps=0.0)


def test_path_delay_adds_hops():
    assert path_delay([L1, L2], 1e5) == hop_delay(L1, 1e5) + hop_delay(L2, 1e5)
    with pytest.raises(RoutingError):
        path_delay([L1, L3], 1e5)


def test_link_queue_makes_second_frame_wait():
    q = {1: QueueModel(1.0)}
    a = path_delay([L1], 1e5, now=0.0, queues=q)
    b = path_delay([L1], 1e5, now=0.0, queues=q)
    assert b == pytest.approx(a + 1e-3)


def test_queue_model():
    q = QueueModel(100.0)
    assert q.predict_sojourn(0.0) == pytest.approx(0.01)
    assert q.submit(0.0, 0.02) == pytest.approx(0.02)
    assert q.in_system(0.01) == 1
    assert q.submit(0.01, 0.02) == pytest.approx(0.03)
    assert q.in_system(0.05) == 0
    with pytest.raises(DomainError):
        QueueModel(0.0)


@given(finite, finite, finite, finite)
def test_site_decision_is_argmin(ec, ep, bc, bp):
    d = processing_site_decision(SiteOption(ec, ep), SiteOption(bc, bp))
    assert d.consistent()
    assert d.edge_total == ec + ep and d.bbu_total == bc + bp


def test_site_decision_ties_and_missing():
    assert processing_site_decision(SiteOption(1, 1), SiteOption(1.5, 0.5)).site is Site.EDGE
    assert processing_site_decision(None, SiteOption(1, 1)).site is Site.BBU
    assert processing_site_decision(SiteOption(1, 1), None).site is Site.EDGE
    with pytest.raises(DropNoProcessor):
        processing_site_decision(None, None)


def test_mm1_expected_sojourn():
    assert mm1_expected_sojourn(50, 100) == pytest.approx(0.02)
    assert mm1_expected_sojourn(100, 100) is None


def test_oracles():
    # [DERIVED] Erlang-B recursion, frozen: B(4, 2) = 2/21
    assert erlang_b(4, 2.0) == pytest.approx(2 / 21)
    for c in range(0, 12):
        for a in (0.1, 1.0, 3.7, 9.0):
            assert erlang_b(c, a) == pytest.approx(erlang_b_direct(c, a))
    assert mm1_sojourn(50, 100) == pytest.approx(0.02)
    assert mm1_wait(50, 100) == pytest.approx(0.01)
    assert mm1_in_system(50, 100) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        mm1_sojourn(100, 100)


def test_simulated_mm1_small():
    run = simulate_mm1(50.0, 100.0, 20_000, seed=3)
    assert run.mean_sojourn == pytest.approx(0.02, rel=0.1)
    assert run.little_ratio == pytest.approx(1.0, rel=0.05)
