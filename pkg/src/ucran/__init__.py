"""Discrete-event comparison of Macro BS, C-RAN and UAV-assisted C-RAN."""
from ._version import __version__
from .config import ScenarioConfig, load_config, parse_config
from .engine import run
from .topology import Architecture

__all__ = ["__version__", "Architecture", "ScenarioConfig", "load_config", "parse_config", "run"]
