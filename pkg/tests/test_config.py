import pytest

from ucran.config import (ConfigError, ScenarioConfig, ScenarioKind, bundled, load_config,
                          parse_config, validate_config)
from ucran.errors import ValidationError
from ucran.topology import Architecture


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    assert cfg == ScenarioConfig()
    validate_config(cfg)


def test_table_config_values(table_cfg):
    t = table_cfg.topology
    assert t.bandwidth_mhz == 20 and t.frrh_count == 4 and t.cells == 2 and t.bbu_pools == 1
    assert (t.tx_power_dbm, t.frrh_tx_power_dbm) == (43, 30)
    assert t.height_ft == 100 and t.frrh_altitude_ft == 100
    assert table_cfg.max_ues() == 1000
    from ucran.traffic import LoadSchedule
    ues = LoadSchedule(table_cfg.sweep.fractions, table_cfg.max_ues()).ues_at_fraction
    assert sorted(ues.values()) == list(range(100, 1001, 100))
    assert table_cfg.sweep.architectures == tuple(Architecture)
    assert table_cfg.sweep.seeds == (1, 2, 3, 4, 5)


@pytest.mark.parametrize("name", ["hotspot_table.cfg", "disaster.cfg", "terrain.cfg",
                                  "erlang_loss.cfg"])
def test_bundled_files_load(name):
    load_config(bundled(name))


def test_negative_duration_rejected():
    with pytest.raises(ConfigError, match="duration"):
        parse_config("[scenario]\nduration_s = -5\n")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("[scenario]\nseed = 3\n\n[traffic]\nload_fraction = 0.5\nbogus = 1\n")
    assert err.value.line == 6
    assert ":6:" in str(err.value)


def test_unknown_section_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("# hi\n[nope]\nx = 1\n")
    assert err.value.line == 2


def test_bad_value_reports_line():
    with pytest.raises(ConfigError) as err:
        parse_config("[scenario]\n\nseed = twelve\n")
    assert err.value.line == 3


def test_coercions():
    cfg = parse_config("[scenario]\narchitecture = CRAN\nscenario = disaster\n"
                       "[sweep]\nseeds = 3..6\narchitectures = macro, ucran\n"
                       "fractions = 0.5, 1.0\n[disaster]\nlast_relay_active = no\n")
    assert cfg.scenario.architecture is Architecture.CRAN
    assert cfg.scenario.scenario is ScenarioKind.DISASTER
    assert cfg.sweep.seeds == (3, 4, 5, 6)
    assert cfg.sweep.architectures == (Architecture.MACRO, Architecture.UCRAN)
    assert cfg.sweep.fractions == (0.5, 1.0)
    assert cfg.disaster.last_relay_active is False


def test_thresholds_must_be_ordered():
    with pytest.raises(ValidationError):
        ScenarioConfig().replace(controller={"recall_threshold": 90.0}).validate()


def test_unsupported_bandwidth():
    with pytest.raises(ValidationError, match="bandwidth"):
        ScenarioConfig().replace(topology={"bandwidth_mhz": 7.0}).validate()


def test_max_ues_override():
    assert ScenarioConfig().replace(traffic={"max_ues": 50}).max_ues() == 50


def test_to_dict_roundtrips_through_json():
    import json
    d = ScenarioConfig().to_dict()
    assert json.loads(json.dumps(d)) == d
    assert d["scenario"]["architecture"] == "ucran"
