"""Maintenance scheduling for component fleets sharing a spare-parts stock."""

from .config import SystemConfig, ConfigError, load_config, save_config

__all__ = ["SystemConfig", "ConfigError", "load_config", "save_config"]
