import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucran.config import ScenarioConfig
from ucran.errors import DomainError, ValidationError
from ucran.power import (FRRH_PROFILE, MACRO_PROFILE, SRRH_PROFILE, BatteryState, PowerProfile,
                         battery_step, charge_step, dbm_to_watts, depletion_time, frrh_power,
                         node_power, total_power)
from ucran.topology import Architecture, FrrhState, build_topology


def test_dbm_conversion():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(43.0) == pytest.approx(19.95, abs=0.01)


def test_linear_load_model():
    assert node_power(MACRO_PROFILE, 0.0) == 130.0
    assert node_power(MACRO_PROFILE, 1.0) == pytest.approx(130.0 + 4.7 * 20.0)
    assert node_power(FRRH_PROFILE, 0.5, flying=True) == pytest.approx(5 + 8 * 0.5 + 150)


@pytest.mark.parametrize("bad", [-0.01, 1.01, math.nan])
def test_load_outside_unit_interval(bad):
    with pytest.raises(DomainError):
        node_power(SRRH_PROFILE, bad)


@given(st.floats(0, 1), st.floats(0, 1))
def test_power_monotone_in_load(a, b):
    lo, hi = sorted((a, b))
    assert node_power(SRRH_PROFILE, lo) <= node_power(SRRH_PROFILE, hi)


def test_negative_profile_rejected():
    with pytest.raises(ValidationError):
        PowerProfile(-1.0, 1.0, 1.0)


def test_frrh_states():
    assert frrh_power(FRRH_PROFILE, FrrhState.STANDBY, 0.0, 2.0) == 2.0
    assert frrh_power(FRRH_PROFILE, FrrhState.CHARGING, 0.0, 2.0) == 2.0
    assert frrh_power(FRRH_PROFILE, FrrhState.EN_ROUTE, 0.7, 2.0) == 155.0
    assert frrh_power(FRRH_PROFILE, FrrhState.DEPLOYED, 1.0, 2.0) == 163.0
    assert frrh_power(FRRH_PROFILE, FrrhState.DEPLOYED, 1.0, 2.0, include_hover=False) == 13.0


def _topo(arch):
    return build_topology(ScenarioConfig().replace(scenario={"architecture": arch}))


@given(st.floats(0, 1), st.floats(0, 1))
def test_idle_fleet_adds_exactly_standby(l1, l2):
    cran, ucran = _topo(Architecture.CRAN), _topo(Architecture.UCRAN)
    loads = {1: l1, 2: l2}
    p_c = total_power(cran, loads, {})
    p_u = total_power(ucran, loads, {f.id: FrrhState.STANDBY for f in ucran.frrhs})
    assert p_u == p_c + 4 * 2.0


def test_cran_total_at_zero_load():
    # BBU 100 + 2 x 20 per S-RRH, two S-RRHs at 50 W
    assert total_power(_topo(Architecture.CRAN), {}, {}) == 240.0


def test_battery_step_and_clamp():
    b = BatteryState(300.0, 300.0)
    b = battery_step(b, 200.0, 1800.0)
    assert b.remaining_wh == pytest.approx(200.0)
    b = battery_step(b, 1e6, 3600.0)
    assert b.remaining_wh == 0.0 and b.depleted
    with pytest.raises(DomainError):
        battery_step(b, 1.0, 0.0)


def test_charge_saturates():
    b = charge_step(BatteryState(100.0, 300.0), 300.0, 7200.0)
    assert b.remaining_wh == 300.0


def test_depletion_time_closed_form():
    assert depletion_time(BatteryState(300.0, 300.0), 200.0) == pytest.approx(5400.0)
    assert depletion_time(BatteryState(300.0, 300.0), 0.0) == math.inf


def test_battery_range_checked():
    with pytest.raises(ValidationError):
        BatteryState(301.0, 300.0)
