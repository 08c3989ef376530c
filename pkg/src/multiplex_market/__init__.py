"""Two-asset market simulator on a multiplex network.

An informative small-world layer accumulates private information and relaxes
through avalanches whose participants imitate the triggering trader; a
trading layer of fundamentalists and chartists clears two limit order books
whose price updates are coupled by the parameter ``delta``.
"""
from .config import SimConfig, parse_config
from .engine import RunRecord, Simulation, run
from .errors import (
    ConfigError,
    DegenerateSeriesError,
    InputError,
    MarketError,
    RunawayAvalancheError,
    SettlementError,
)

__version__ = "0.1.0"

__all__ = [
    "SimConfig",
    "parse_config",
    "Simulation",
    "RunRecord",
    "run",
    "MarketError",
    "ConfigError",
    "RunawayAvalancheError",
    "SettlementError",
    "DegenerateSeriesError",
    "InputError",
]
