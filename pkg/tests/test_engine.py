import math

import pytest

from conftest import hotspot
from ucran.config import ScenarioConfig, ScenarioKind
from ucran.core import available_backends
from ucran.engine import (EventKind, EventQueue, SweepAbort, member_positions, run, run_sweep,
                          scenario_disaster)
from ucran.errors import ConsistencyError, ValidationError
from ucran.topology import Architecture


def rows_of(trace, tag):
    return [l.split(" ") for l in trace.lines if l.split(" ", 2)[1] == tag]


def test_event_queue_order():
    q = EventQueue()
    q.push(1.0, EventKind.METRICS_SAMPLE, "s")
    q.push(1.0, EventKind.UE_ARRIVAL, "a")
    q.push(1.0, EventKind.UE_DEPARTURE, "d")
    q.push(0.5, EventKind.END, "e")
    q.push(1.0, EventKind.UE_ARRIVAL, "a2")
    assert [q.pop().payload for _ in range(5)] == ["e", "d", "a", "a2", "s"]
    with pytest.raises(ConsistencyError):
        q.push(0.9, EventKind.CONTROL_TICK)


@pytest.mark.parametrize("arch", list(Architecture))
def test_hotspot_determinism(arch):
    cfg = hotspot(arch, load=0.8, duration=300.0)
    assert run(cfg).trace.digest() == run(cfg).trace.digest()


def test_seed_changes_trace():
    assert run(hotspot(seed=1, duration=200.0)).trace.digest() != \
        run(hotspot(seed=2, duration=200.0)).trace.digest()


@pytest.mark.skipif("compiled" not in available_backends(), reason="compiled kernels not built")
@pytest.mark.parametrize("arch", list(Architecture))
def test_backends_give_identical_traces(arch):
    cfg = hotspot(arch, load=1.0, duration=400.0)
    assert run(cfg, backend="python").trace.text() == run(cfg, backend="compiled").trace.text()


@pytest.mark.parametrize("kind", list(ScenarioKind))
def test_zero_duration(kind):
    res = run(ScenarioConfig().replace(scenario={"scenario": kind, "duration_s": 0.0}))
    assert res.report.rows == [] and res.trace.lines == []


def test_causality_and_conservation():
    res = run(hotspot(load=1.0, duration=600.0))
    times = [float(l.split(" ", 1)[0]) for l in res.trace.lines]
    assert times == sorted(times)
    end = res.trace.lines[-1].split()
    arrivals = len(rows_of(res.trace, "ARR"))
    assert int(end[2]) + int(end[3]) == arrivals
    assert len(rows_of(res.trace, "ADM")) == int(end[2])
    assert len(rows_of(res.trace, "BLK")) == int(end[3])


def test_report_has_all_three_metrics(table_cfg):
    cfg = table_cfg.replace(scenario={"duration_s": 300.0})
    row = run(cfg).report.rows[0]
    assert row.architecture == "UCRAN" and row.ue_count == 1000
    assert row.avg_e2e_delay_s > 0 and 0 <= row.blocking_probability <= 1
    assert row.total_power_w > 0


def test_trace_equations_hold_exactly():
    res = run(hotspot(load=1.0, duration=400.0))
    for r in rows_of(res.trace, "UF"):
        load, cap, uf = int(r[3]), int(r[4]), float(r[5])
        assert uf == 100 * load / cap
    dly = rows_of(res.trace, "DLY")
    assert dly
    for r in dly:
        assert float(r[7]) == float(r[5]) + float(r[6])


def test_idle_fleet_power_is_cran_plus_standby():
    cran = run(hotspot(Architecture.CRAN, load=0.2, duration=200.0)).trace
    ucran = run(hotspot(Architecture.UCRAN, load=0.2, duration=200.0)).trace
    assert not rows_of(ucran, "DEPLOY")
    pc = [float(r[2]) for r in rows_of(cran, "POWER")]
    pu = [float(r[2]) for r in rows_of(ucran, "POWER")]
    assert len(pc) == len(pu) == 200
    assert all(u == c + 8.0 for c, u in zip(pc, pu))


def test_overload_deploys_and_arrival_follows_travel():
    tr = run(hotspot(load=1.0, duration=300.0)).trace
    deploys = rows_of(tr, "DEPLOY")
    arrivals = {r[2]: float(r[0]) for r in rows_of(tr, "ARRIVED")}
    assert deploys
    for r in deploys:
        t, f, travel = float(r[0]), r[2], float(r[4])
        if f in arrivals:
            assert arrivals[f] == pytest.approx(t + travel)


def test_no_frrh_deployed_at_light_load():
    tr = run(hotspot(load=0.4, duration=600.0)).trace
    assert not rows_of(tr, "DEPLOY")


def test_battery_forces_return():
    cfg = hotspot(load=1.0, duration=700.0, topology={"frrh_count": 1, "frrh_battery_wh": 20.0},
                  controller={"min_deploy_charge_wh": 10.0},
                  power={"frrh_slope": 0.0, "frrh_hover_w": 115.0})
    tr = run(cfg).trace
    deploy = float(rows_of(tr, "DEPLOY")[0][0])
    forced = [r for r in rows_of(tr, "RECALL") if r[-1] == "battery"]
    alerts = rows_of(tr, "ALERT")
    assert forced and any("battery" in " ".join(a) for a in alerts)
    # 20 Wh at 120 W lasts 600 s
    assert float(forced[0][0]) - deploy == pytest.approx(600.0, abs=cfg.scenario.sample_period_s)


def test_consistency_error_names_event(monkeypatch):
    from ucran import engine

    def broken(self, t):
        raise ConsistencyError("negative free PRBs")
    monkeypatch.setattr(engine.HotspotRun, "_sample", broken)
    with pytest.raises(ConsistencyError, match=r"event seq \d+ \(METRICS_SAMPLE"):
        run(hotspot(duration=10.0))


def test_run_record():
    res = run(hotspot(duration=50.0))
    rec = res.record
    assert rec["trace_digest"] == res.trace.digest()
    assert rec["config"]["scenario"]["duration_s"] == 50.0
    assert rec["code_version"]


# -- sweeps -----------------------------------------------------------------

def test_sweep_counts_and_ci():
    cfg = hotspot(duration=120.0)
    res = run_sweep(cfg, fractions=(0.5, 1.0), seeds=(1, 2))
    assert len(res.runs) == 12 and len(res.report.rows) == 6
    assert {r.seed_count for r in res.report.rows} == {2}
    assert all(r.delay_ci is not None for r in res.report.rows)
    single = run_sweep(cfg, fractions=(1.0,), seeds=(3,), architectures=(Architecture.CRAN,))
    row = single.report.rows[0]
    assert row.delay_ci is None and row.blocking_ci is None and row.power_ci is None


def test_sweep_blocking_grows_with_load():
    res = run_sweep(hotspot(duration=600.0), fractions=(0.1, 1.0), seeds=(1,),
                    architectures=(Architecture.MACRO, Architecture.CRAN))
    for arch in ("Macro", "CRAN"):
        assert res.report.row(arch, 1000).blocking_probability >= \
            res.report.row(arch, 100).blocking_probability


def test_sweep_abort_names_point(monkeypatch):
    from ucran import engine
    real = engine.run

    def flaky(cfg, backend=None):
        if cfg.scenario.seed == 2:
            raise ConsistencyError("boom")
        return real(cfg, backend=backend)
    monkeypatch.setattr(engine, "run", flaky)
    with pytest.raises(SweepAbort, match="CRAN load=1.0 seed=2") as err:
        run_sweep(hotspot(duration=30.0), fractions=(1.0,), seeds=(1, 2),
                  architectures=(Architecture.CRAN,))
    assert err.value.point == (Architecture.CRAN, 1.0, 2)


def test_sweep_needs_a_seed():
    with pytest.raises(ValidationError):
        run_sweep(hotspot(duration=30.0), seeds=())


# -- disaster -----------------------------------------------------------------

def disaster(**kw):
    return ScenarioConfig().replace(scenario={"scenario": ScenarioKind.DISASTER,
                                              "duration_s": 20.0}, disaster=kw)


def test_disaster_chain_shape():
    s = scenario_disaster(disaster())
    names = [n.name for n in s.topology.nodes]
    assert names == ["BBU", "F-RRH1", "F-RRH2", "F-RRH3", "F-RRH4"]
    assert s.edge_node == 4
    assert [l.endpoints for l in s.routes_bbu[2]] == [(2, 3), (3, 4), (4, 0)]


def test_disaster_requires_ucran():
    cfg = disaster().replace(scenario={"architecture": Architecture.CRAN})
    with pytest.raises(ValidationError):
        run(cfg)


def test_passive_relay_sends_everything_to_bbu():
    row = run(disaster(last_relay_active=False)).report.rows[0]
    assert row.extras["edge_fraction"] == 0.0


def test_cheap_edge_takes_everything():
    row = run(disaster(bbu_link_latency_s=10.0)).report.rows[0]
    assert row.extras["edge_fraction"] == 1.0


def test_site_decisions_are_argmin():
    tr = run(disaster()).trace
    sites = rows_of(tr, "SITE")
    assert sites
    for r in sites:
        e, b = float(r[4]), float(r[5])
        assert r[3] == ("EdgeFRRH" if e <= b else "BBUPool")


def test_extra_relay_adds_exactly_one_hop():
    comm = {}
    for relays in (2, 3):
        setup = scenario_disaster(disaster(relays=relays))
        tr = run(disaster(relays=relays)).trace
        comm[relays] = [float(r[5]) for r in rows_of(tr, "DLY")]
    hop = setup.routes_bbu[1][1]
    added = hop.fixed_latency + 1e5 / hop.capacity_bps
    assert len(comm[2]) == len(comm[3])
    diff = sum(comm[3]) / len(comm[3]) - sum(comm[2]) / len(comm[2])
    assert diff == pytest.approx(added, rel=1e-9)


# -- terrain ----------------------------------------------------------------

def terrain(arch=Architecture.UCRAN, members=3, seed=42):
    return ScenarioConfig().replace(scenario={"scenario": ScenarioKind.TERRAIN,
                                              "architecture": arch, "seed": seed,
                                              "duration_s": 100.0},
                                    terrain={"members": members})


def test_member_positions_are_nested():
    full = member_positions(12, 1500.0, 120.0, 3)
    for k in range(13):
        assert member_positions(k, 1500.0, 120.0, 3) == full[:k]


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_coverage_grows_with_members(seed):
    cov = [run(terrain(members=m, seed=seed)).report.rows[0].extras["coverage"]
           for m in range(0, 13)]
    assert cov == sorted(cov)
    assert cov[-1] > cov[0]


def test_ground_only_covers_nobody():
    for arch in (Architecture.CRAN, Architecture.MACRO):
        row = run(terrain(arch)).report.rows[0]
        assert row.extras["coverage"] == 0.0 and row.blocking_probability == 1.0
        assert row.avg_e2e_delay_s is None


def test_head_alone_covers_only_nearby_ues():
    from ucran.engine import scenario_terrain, uplink_rate
    cfg = terrain(members=0)
    setup = scenario_terrain(cfg)
    tr = run(cfg).trace
    served = {int(r[2]) for r in rows_of(tr, "ADM")}
    assert served
    radius = max(math.hypot(*setup.ue_positions[u]) for u in served)
    unserved = set(range(len(setup.ue_positions))) - served
    assert all(math.hypot(*setup.ue_positions[u]) > 0.8 * radius for u in unserved)
    head = setup.serving[0]
    assert all(uplink_rate(head, setup.ue_positions[u], cfg, setup.env) == 0 for u in unserved)


def test_member_ue_served_but_not_by_cran():
    from ucran.engine import scenario_terrain, uplink_rate
    u_cfg, c_cfg = terrain(), terrain(Architecture.CRAN)
    u, c = scenario_terrain(u_cfg), scenario_terrain(c_cfg)
    member = u.serving[1]
    ue = (member.position[0] + 50.0, member.position[1])
    assert uplink_rate(member, ue, u_cfg, u.env) > 0
    assert uplink_rate(c.serving[0], ue, c_cfg, c.env) == 0
