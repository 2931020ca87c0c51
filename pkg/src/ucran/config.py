"""Scenario configuration: dataclass defaults plus an INI-style loader.

Every section of the file maps to one dataclass below; omitted keys keep
their defaults and unknown keys are rejected with the offending line number.
"""
from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .channel import ChannelEnv
from .errors import ValidationError
from .power import BBU_PROFILE, FRRH_PROFILE, MACRO_PROFILE, SRRH_PROFILE, PowerProfile
from .topology import Architecture, NodeKind


class ScenarioKind(Enum):
    HOTSPOT = "hotspot"
    DISASTER = "disaster"
    TERRAIN = "terrain"


DEFAULT_FRACTIONS = tuple(round(0.1 * k, 10) for k in range(1, 11))


@dataclass
class ScenarioParams:
    architecture: Architecture = Architecture.UCRAN
    scenario: ScenarioKind = ScenarioKind.HOTSPOT
    duration_s: float = 1800.0
    seed: int = 42
    warmup_fraction: float = 0.1
    sample_period_s: float = 1.0


@dataclass
class TopologyParams:
    cells: int = 2
    area_km2: float = 3.0
    bbu_pools: int = 1
    bandwidth_mhz: float = 20.0
    sched_window_tti: int = 20
    tx_power_dbm: float = 43.0
    height_ft: float = 100.0
    macro_proc_rate: float = 1000.0
    bbu_proc_rate: float = 2000.0
    frrh_count: int = 4
    frrh_kind: str = "passive"
    frrh_bandwidth_mhz: float = 10.0
    frrh_tx_power_dbm: float = 30.0
    frrh_altitude_ft: float = 100.0
    frrh_proc_rate: float = 200.0
    frrh_battery_wh: float = 300.0
    frrh_cell_radius_m: float = 250.0
    frrh_ring_fraction: float = 0.5
    home_cell: int = 1
    hotspot_cell: int = 2
    optical_latency_s: float = 5e-5
    optical_capacity_bps: float = 10e9
    wireless_fh_latency_s: float = 1e-4
    wireless_fh_bandwidth_mhz: float = 40.0
    backhaul_latency_s: float = 2e-4
    backhaul_capacity_bps: float = 1e9
    fanout: int = 3


@dataclass
class TrafficParams:
    load_fraction: float = 1.0
    mean_holding_s: float = 120.0
    demand_prbs: int = 2
    handover_fraction: float = 0.3
    handover_window: tuple = (0.25, 0.35)
    background_load: float = 0.3
    max_ues: int = 0
    hard_cap: int = 200_000
    task_rate: float = 0.5
    packet_bits: float = 4000.0


@dataclass
class ControllerParams:
    deploy_threshold: float = 85.0
    recall_threshold: float = 60.0
    control_period_s: float = 1.0
    admission_timeout_s: float = 1.0
    uav_speed_mps: float = 10.0
    min_deploy_charge_wh: float = 150.0
    charge_w: float = 300.0
    sample_buffer: int = 64


@dataclass
class PowerParams:
    macro_static_w: float = MACRO_PROFILE.static_w
    macro_slope: float = MACRO_PROFILE.slope
    macro_tx_w: float = MACRO_PROFILE.tx_w
    srrh_static_w: float = SRRH_PROFILE.static_w
    srrh_slope: float = SRRH_PROFILE.slope
    srrh_tx_w: float = SRRH_PROFILE.tx_w
    bbu_static_w: float = BBU_PROFILE.static_w
    bbu_per_srrh_w: float = 20.0
    frrh_static_w: float = FRRH_PROFILE.static_w
    frrh_slope: float = FRRH_PROFILE.slope
    frrh_tx_w: float = FRRH_PROFILE.tx_w
    frrh_hover_w: float = FRRH_PROFILE.hover_w
    standby_w: float = 2.0
    include_hover: bool = True

    def profile(self, kind: NodeKind) -> PowerProfile:
        if kind is NodeKind.MACRO_BS:
            return PowerProfile(self.macro_static_w, self.macro_slope, self.macro_tx_w)
        if kind is NodeKind.SRRH:
            return PowerProfile(self.srrh_static_w, self.srrh_slope, self.srrh_tx_w)
        if kind is NodeKind.BBU_POOL:
            return PowerProfile(self.bbu_static_w, 0.0, 0.0)
        return PowerProfile(self.frrh_static_w, self.frrh_slope, self.frrh_tx_w, self.frrh_hover_w)


@dataclass
class SweepParams:
    fractions: tuple = DEFAULT_FRACTIONS
    seeds: tuple = (1, 2, 3, 4, 5)
    architectures: tuple = (Architecture.MACRO, Architecture.CRAN, Architecture.UCRAN)


@dataclass
class DisasterParams:
    relays: int = 2
    relay_spacing_m: float = 400.0
    altitude_m: float = 100.0
    report_period_s: float = 0.02
    payload_bits: float = 1e5
    last_relay_active: bool = True
    bandwidth_mhz: float = 20.0
    # long-haul microwave hop from the relay chain to the surviving pool
    bbu_link_latency_s: float = 0.01


@dataclass
class TerrainParams:
    members: int = 3
    ue_count: int = 300
    region_radius_m: float = 4000.0
    member_spacing_m: float = 1500.0
    altitude_m: float = 120.0
    frrh_bandwidth_mhz: float = 10.0
    srrh_distance_m: float = 6000.0
    ue_tx_power_dbm: float = 23.0
    # hills and ridges: non-line-of-sight excess is much higher than urban
    excess_nlos_db: float = 30.0


@dataclass
class ScenarioConfig:
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    topology: TopologyParams = field(default_factory=TopologyParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    channel: ChannelEnv = field(default_factory=ChannelEnv)
    controller: ControllerParams = field(default_factory=ControllerParams)
    power: PowerParams = field(default_factory=PowerParams)
    sweep: SweepParams = field(default_factory=SweepParams)
    disaster: DisasterParams = field(default_factory=DisasterParams)
    terrain: TerrainParams = field(default_factory=TerrainParams)

    @property
    def warmup_s(self) -> float:
        return self.scenario.duration_s * self.scenario.warmup_fraction

    def max_ues(self) -> int:
        """UEs one ground node carries when all its PRBs are allocated.

        ``traffic.max_ues`` overrides the derivation when non-zero.
        """
        from .channel import prbs_for
        if self.traffic.max_ues:
            return self.traffic.max_ues
        prbs = prbs_for(self.topology.bandwidth_mhz * 1e6) * self.topology.sched_window_tti
        return prbs // self.traffic.demand_prbs

    def replace(self, **sections) -> "ScenarioConfig":
        """Copy with some fields of some sections overridden.

        ``cfg.replace(scenario={"seed": 3}, traffic={"load_fraction": .5})``
        """
        updates = {}
        for name, changes in sections.items():
            updates[name] = dataclasses.replace(getattr(self, name), **changes)
        return dataclasses.replace(self, **updates)

    def validate(self) -> "ScenarioConfig":
        validate_config(self)
        return self

    def to_dict(self) -> dict:
        return {f.name: _section_dict(getattr(self, f.name)) for f in dataclasses.fields(self)}


def _section_dict(section) -> dict:
    out = {}
    for f in dataclasses.fields(section):
        v = getattr(section, f.name)
        if isinstance(v, Enum):
            v = v.value
        elif isinstance(v, tuple):
            v = [x.value if isinstance(x, Enum) else x for x in v]
        out[f.name] = v
    return out


def validate_config(cfg: ScenarioConfig) -> None:
    s, t, tr, c = cfg.scenario, cfg.topology, cfg.traffic, cfg.controller
    problems = []
    if s.duration_s < 0:
        problems.append("scenario.duration_s must be >= 0")
    if not (0.0 <= s.warmup_fraction < 1.0):
        problems.append("scenario.warmup_fraction must lie in [0, 1)")
    if s.sample_period_s <= 0:
        problems.append("scenario.sample_period_s must be > 0")
    if t.cells < 1:
        problems.append("topology.cells must be >= 1")
    if t.area_km2 <= 0:
        problems.append("topology.area_km2 must be > 0")
    if t.frrh_kind not in ("passive", "active"):
        problems.append("topology.frrh_kind must be 'passive' or 'active'")
    if s.architecture is not Architecture.MACRO and t.bbu_pools < 1:
        problems.append(f"{s.architecture.label} requires topology.bbu_pools >= 1")
    if not (1 <= t.home_cell <= t.cells) or not (1 <= t.hotspot_cell <= t.cells):
        problems.append("topology.home_cell / hotspot_cell must name existing cells")
    if tr.demand_prbs < 1:
        problems.append("traffic.demand_prbs must be >= 1")
    if tr.mean_holding_s <= 0:
        problems.append("traffic.mean_holding_s must be > 0")
    if tr.load_fraction < 0 or tr.background_load < 0 or tr.handover_fraction < 0:
        problems.append("traffic load fractions must be >= 0")
    lo, hi = tr.handover_window
    if not (0.0 <= lo <= hi <= 1.0):
        problems.append("traffic.handover_window must satisfy 0 <= start <= end <= 1")
    if not (c.recall_threshold < c.deploy_threshold):
        problems.append("controller.recall_threshold must be < deploy_threshold")
    if c.admission_timeout_s < 0 or c.control_period_s <= 0 or c.uav_speed_mps <= 0:
        problems.append("controller timings must be positive (timeout may be 0)")
    if not cfg.sweep.fractions or any(not (0 < f <= 1.0) for f in cfg.sweep.fractions):
        problems.append("sweep.fractions must be non-empty and within (0, 1]")
    if list(cfg.sweep.fractions) != sorted(set(cfg.sweep.fractions)):
        problems.append("sweep.fractions must be strictly increasing")
    if not cfg.sweep.seeds:
        problems.append("sweep.seeds must not be empty")
    try:
        from .channel import prbs_for
        prbs_for(t.bandwidth_mhz * 1e6)
        if s.architecture is Architecture.UCRAN:
            prbs_for(t.frrh_bandwidth_mhz * 1e6)
    except ValidationError as exc:
        problems.append(f"topology: {exc}")
    if problems:
        raise ValidationError("; ".join(problems))


# -- file loading ----------------------------------------------------------

class ConfigError(ValidationError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = f"{path or '<config>'}:{line}: " if line else f"{path or '<config>'}: "
        super().__init__(where + message)
        self.line = line


_SECTIONS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_KEY_RE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*[=:]")
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")


def _line_index(text: str) -> dict[tuple[str, str], int]:
    index, section = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        if m := _SECTION_RE.match(line):
            section = m.group(1).strip()
            index.setdefault((section, ""), no)
        elif section and (m := _KEY_RE.match(line)):
            index.setdefault((section, m.group(1).lower()), no)
    return index


def _coerce(raw: str, default, name: str):
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, Enum):
        return type(default)(raw.lower())
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        items = [p.strip() for p in raw.replace(";", ",").split(",") if p.strip()]
        if name == "architectures":
            if items == ["all"]:
                return tuple(Architecture)
            return tuple(Architecture(i.lower()) for i in items)
        if name == "seeds" and len(items) == 1 and ".." in items[0]:
            a, b = items[0].split("..")
            return tuple(range(int(a), int(b) + 1))
        if name == "seeds":
            return tuple(int(i) for i in items)
        return tuple(float(i) for i in items)
    return raw


def parse_config(text: str, path: str | None = None) -> ScenarioConfig:
    lines = _line_index(text)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line, path) from None

    cfg = ScenarioConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, "")), path)
        current = getattr(cfg, section)
        known = {f.name: f for f in dataclasses.fields(current)}
        changes = {}
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in known:
                raise ConfigError(f"unknown key '{key}' in [{section}]", line, path)
            try:
                changes[key] = _coerce(raw, getattr(current, key), key)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}", line, path) from None
        try:
            setattr(cfg, section, dataclasses.replace(current, **changes))
        except ValidationError as exc:
            raise ConfigError(str(exc), lines.get((section, "")), path) from None
    try:
        validate_config(cfg)
    except ValidationError as exc:
        raise ConfigError(str(exc), None, path) from None
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def bundled(name: str) -> Path:
    """Path of a scenario file shipped with the package."""
    return Path(__file__).parent / "scenarios" / name
