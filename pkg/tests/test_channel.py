import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ucran.channel import (ChannelEnv, atg_path_loss, free_space_loss, golden_section_min,
                           link_rate, los_probability, noise_power_dbm, optimal_altitude,
                           prbs_for, spectral_efficiency, terrestrial_path_loss)
from ucran.errors import DomainError, ValidationError

ENV = ChannelEnv()


def friis(d, f):
    # independent oracle: wavelength form of the free-space loss
    lam = 299_792_458.0 / f
    return -20 * math.log10(lam / (4 * math.pi * d))


@pytest.mark.parametrize("d", [1.0, 10.0, 100.0, 1234.5, 1e4])
def test_free_space_matches_wavelength_form(d):
    assert free_space_loss(d, 2e9) == pytest.approx(friis(d, 2e9), abs=1e-9)


def test_free_space_1km_2ghz():
    # [DERIVED] 20 log10(4 pi 1000 2e9 / c), frozen
    assert free_space_loss(1000.0, 2e9) == pytest.approx(98.4684, abs=1e-4)


def test_los_probability_is_a_probability_and_increasing():
    thetas = np.linspace(0.0, 90.0, 901)
    p = [los_probability(t, ENV) for t in thetas]
    assert all(0 < x < 1 for x in p)
    assert all(b > a for a, b in zip(p, p[1:]))
    # midpoint of the S-curve sits where the exponent vanishes
    assert los_probability(ENV.s_curve_a, ENV) == pytest.approx(1 / (1 + ENV.s_curve_a))


def test_atg_loss_between_los_and_nlos_bounds():
    for d, h in [(100, 50), (500, 120), (2000, 30)]:
        fs = free_space_loss(math.hypot(d, h), ENV.carrier_hz)
        pl = atg_path_loss(d, h, ENV)
        assert fs + ENV.excess_los_db <= pl <= fs + ENV.excess_nlos_db


def test_atg_rejects_nonpositive_altitude():
    with pytest.raises(DomainError):
        atg_path_loss(100.0, 0.0, ENV)
    with pytest.raises(DomainError):
        atg_path_loss(-1.0, 10.0, ENV)


def test_low_altitude_is_worse_than_moderate():
    # near the ground the NLoS excess dominates
    assert atg_path_loss(500.0, 10.0, ENV) > atg_path_loss(500.0, 120.0, ENV)


def test_optimal_altitude_zero_distance_is_lower_bound():
    assert optimal_altitude(0.0, ENV, bounds=(1.0, 2000.0)) == 1.0


def test_optimal_altitude_bad_bounds():
    with pytest.raises(ValidationError):
        optimal_altitude(100.0, ENV, bounds=(500.0, 100.0))
    with pytest.raises(ValidationError):
        optimal_altitude(100.0, ENV, bounds=(0.0, 100.0))


def test_optimal_altitude_scales_with_distance():
    # for a fixed S-curve the optimum sits at a fixed elevation angle
    angles = [math.degrees(math.atan2(optimal_altitude(d, ENV), d)) for d in (100, 300, 700)]
    assert max(angles) - min(angles) < 0.05


@given(st.floats(-50, 50), st.floats(0.1, 10))
def test_golden_section_on_parabola(c, w):
    lo, hi = c - w, c + 2 * w
    x = golden_section_min(lambda x: (x - c) ** 2, lo, hi, tol=1e-7)
    assert x == pytest.approx(c, abs=1e-6)


def test_golden_section_monotone_returns_endpoint():
    assert golden_section_min(lambda x: x, 2.0, 9.0) == 2.0
    assert golden_section_min(lambda x: -x, 2.0, 9.0) == 9.0


def test_terrestrial_loss_slope():
    a = terrestrial_path_loss(100.0, ENV)
    b = terrestrial_path_loss(1000.0, ENV)
    assert b - a == pytest.approx(10 * ENV.terrestrial_exponent)


def test_noise_power_20mhz():
    # -174 dBm/Hz floor + 7 dB noise figure over 20 MHz
    assert noise_power_dbm(20e6, ENV) == pytest.approx(-174 + 7 + 10 * math.log10(20e6))


def test_spectral_efficiency_floor_cap_and_shape():
    assert spectral_efficiency(-6.01) == 0.0
    assert spectral_efficiency(40.0) == 4.5
    assert spectral_efficiency(0.0) == pytest.approx(0.75)
    assert spectral_efficiency(-6.0) == pytest.approx(0.75 * math.log2(1 + 10 ** -0.6))


@given(st.floats(-20, 40), st.floats(-20, 40))
def test_spectral_efficiency_monotone(a, b):
    lo, hi = sorted((a, b))
    assert spectral_efficiency(lo) <= spectral_efficiency(hi)


def test_link_rate_and_interference():
    clean = link_rate(30.0, 100.0, 10e6, ENV)
    assert clean.rate_bps == pytest.approx(clean.spectral_eff * 10e6)
    noisy = link_rate(30.0, 100.0, 10e6, ENV, interference_dbm=-80.0)
    assert noisy.sinr_db < clean.sinr_db
    assert noisy.rate_bps <= clean.rate_bps
    dead = link_rate(0.0, 200.0, 10e6, ENV)
    assert dead.rate_bps == 0.0


def test_link_rate_rejects_zero_bandwidth():
    with pytest.raises(ValidationError):
        link_rate(30.0, 100.0, 0.0, ENV)


@pytest.mark.parametrize("mhz,prbs", [(1.4, 6), (3, 15), (5, 25), (10, 50), (15, 75), (20, 100)])
def test_lte_grid(mhz, prbs):
    assert prbs_for(mhz * 1e6) == prbs


def test_lte_grid_rejects_odd_bandwidth():
    with pytest.raises(ValidationError):
        prbs_for(7e6)


def test_channel_env_validation():
    with pytest.raises(ValidationError):
        ChannelEnv(excess_los_db=30.0, excess_nlos_db=20.0)
    with pytest.raises(ValidationError):
        ChannelEnv(s_curve_a=0.0)
