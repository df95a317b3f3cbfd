"""Configuration files, CLI and experiment orchestration."""
from .config import ConfigError, SimConfig, SweepSpec, dumps_config, load_config, loads_config, save_config

__all__ = ["ConfigError", "SimConfig", "SweepSpec", "dumps_config", "load_config", "loads_config", "save_config"]
