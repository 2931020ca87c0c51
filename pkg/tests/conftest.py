import pytest
from hypothesis import HealthCheck, settings

from ucran.config import ScenarioConfig
from ucran.topology import Architecture

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def hotspot(arch=Architecture.UCRAN, load=1.0, seed=1, duration=600.0, **sections):
    """Table-parameter hotspot config, shortened for unit tests."""
    cfg = ScenarioConfig().replace(
        scenario={"architecture": arch, "seed": seed, "duration_s": duration},
        traffic={"load_fraction": load})
    return cfg.replace(**sections) if sections else cfg


@pytest.fixture
def table_cfg():
    from ucran.config import bundled, load_config
    return load_config(bundled("hotspot_table.cfg"))
