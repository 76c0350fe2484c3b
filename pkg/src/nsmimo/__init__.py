"""3-D non-stationary wideband MIMO channel simulator with birth-death cluster evolution."""

from .antenna import AntennaArray
from .cir import ChannelSimulator, CirRecord, RayEnsemble, run, transfer_function
from .scenario import PRESETS, ConfigError, ScenarioParams, SimulationConfig, load_config, loads_config

__version__ = "0.1.0"

__all__ = [
    "AntennaArray",
    "ChannelSimulator",
    "CirRecord",
    "RayEnsemble",
    "run",
    "transfer_function",
    "PRESETS",
    "ConfigError",
    "ScenarioParams",
    "SimulationConfig",
    "load_config",
    "loads_config",
]
