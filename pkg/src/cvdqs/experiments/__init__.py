from .commands import run_config
from .config import ConfigError, ScenarioConfig, load_config, preset_names

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "preset_names", "run_config"]
