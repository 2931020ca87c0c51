"""Path loss, altitude search and rate mapping for ground and aerial links."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ValidationError

SPEED_OF_LIGHT = 299_792_458.0

# 64-QAM, rate-3/4 code
MAX_SPECTRAL_EFF = 4.5
SHANNON_ATTENUATION = 0.75
DECODE_FLOOR_DB = -6.0

# LTE channel bandwidth -> resource blocks in the grid
_LTE_GRID = {1.4e6: 6, 3e6: 15, 5e6: 25, 10e6: 50, 15e6: 75, 20e6: 100}

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ChannelEnv:
    """Radio environment shared by every link in a scenario.

    ``noise_dbm_hz`` is the receiver noise density (thermal floor plus noise
    figure), so the noise power for a link is ``noise_dbm_hz + 10 log10(B)``.
    """

    s_curve_a: float = 9.61
    s_curve_b: float = 0.16
    excess_los_db: float = 1.0
    excess_nlos_db: float = 20.0
    carrier_hz: float = 2.0e9
    terrestrial_exponent: float = 3.5
    noise_dbm_hz: float = -167.0
    ue_height_m: float = 1.5

    def __post_init__(self):
        if self.s_curve_a <= 0:
            raise ValidationError("channel.s_curve_a must be > 0")
        if not (self.excess_nlos_db >= self.excess_los_db >= 0):
            raise ValidationError("channel requires excess_nlos_db >= excess_los_db >= 0")
        if self.carrier_hz <= 0:
            raise ValidationError("channel.carrier_hz must be > 0")


@dataclass(frozen=True)
class LinkBudget:
    path_loss_db: float
    sinr_db: float
    spectral_eff: float
    rate_bps: float


def free_space_loss(distance_m: float, carrier_hz: float) -> float:
    """Friis loss in dB; distances below 1 m are clamped to 1 m."""
    d = max(distance_m, 1.0)
    return 20.0 * math.log10(4.0 * math.pi * d * carrier_hz / SPEED_OF_LIGHT)


def los_probability(elevation_deg: float, env: ChannelEnv) -> float:
    return 1.0 / (1.0 + env.s_curve_a * math.exp(-env.s_curve_b * (elevation_deg - env.s_curve_a)))


def atg_path_loss(ground_distance: float, altitude: float, env: ChannelEnv) -> float:
    """Mean air-to-ground loss (dB) weighted by the LoS probability.

    The elevation angle is measured at the ground terminal, in degrees.
    """
    if ground_distance < 0:
        raise DomainError("ground_distance must be >= 0")
    if altitude <= 0:
        raise DomainError("altitude must be > 0 (elevation angle undefined)")
    theta = math.degrees(math.atan2(altitude, ground_distance))
    p_los = los_probability(theta, env)
    fspl = free_space_loss(math.hypot(ground_distance, altitude), env.carrier_hz)
    return fspl + p_los * env.excess_los_db + (1.0 - p_los) * env.excess_nlos_db


def terrestrial_path_loss(distance_m: float, env: ChannelEnv) -> float:
    """Log-distance loss with a 1 m free-space reference."""
    d = max(distance_m, 1.0)
    return free_space_loss(1.0, env.carrier_hz) + 10.0 * env.terrestrial_exponent * math.log10(d)


def golden_section_min(f, lo: float, hi: float, tol: float = 1e-4) -> float:
    """Minimiser of a unimodal ``f`` on ``[lo, hi]``, endpoints included."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    # the interior search never lands exactly on a bound
    best = min((f(lo), 0, lo), (f(x), 1, x), (f(hi), 2, hi))
    return best[2]


def optimal_altitude(ground_distance: float, env: ChannelEnv,
                     bounds: tuple[float, float] = (1.0, 2000.0)) -> float:
    lo, hi = bounds
    if lo <= 0:
        raise ValidationError("altitude lower bound must be > 0")
    if lo >= hi:
        raise ValidationError(f"altitude bounds inverted: {bounds}")
    return golden_section_min(lambda h: atg_path_loss(ground_distance, h, env), lo, hi)


def noise_power_dbm(bandwidth_hz: float, env: ChannelEnv) -> float:
    return env.noise_dbm_hz + 10.0 * math.log10(bandwidth_hz)


def spectral_efficiency(sinr_db: float) -> float:
    if sinr_db < DECODE_FLOOR_DB:
        return 0.0
    shannon = SHANNON_ATTENUATION * math.log2(1.0 + 10.0 ** (sinr_db / 10.0))
    return min(shannon, MAX_SPECTRAL_EFF)


def link_rate(tx_power_dbm: float, path_loss_db: float, bandwidth_hz: float,
              env: ChannelEnv, interference_dbm: float | None = None) -> LinkBudget:
    if bandwidth_hz <= 0:
        raise ValidationError("bandwidth must be > 0")
    noise_mw = 10.0 ** (noise_power_dbm(bandwidth_hz, env) / 10.0)
    if interference_dbm is not None:
        noise_mw += 10.0 ** (interference_dbm / 10.0)
    sinr_db = tx_power_dbm - path_loss_db - 10.0 * math.log10(noise_mw)
    eff = spectral_efficiency(sinr_db)
    return LinkBudget(path_loss_db, sinr_db, eff, eff * bandwidth_hz)


def prbs_for(bandwidth_hz: float) -> int:
    for bw, n in _LTE_GRID.items():
        if math.isclose(bandwidth_hz, bw, rel_tol=1e-9):
            return n
    raise ValidationError(
        f"unsupported LTE bandwidth {bandwidth_hz / 1e6:g} MHz "
        f"(supported: {', '.join(f'{b / 1e6:g}' for b in _LTE_GRID)})")
