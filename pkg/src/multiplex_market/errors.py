"""Exception types raised by the simulator and the analysis pipeline."""


class MarketError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MarketError, ValueError):
    """Invalid or unknown configuration values.

    ``keys`` lists the offending configuration keys so callers (and the CLI)
    can report them.
    """

    def __init__(self, message: str, keys=()):
        super().__init__(message)
        self.keys = tuple(keys)


class RunawayAvalancheError(MarketError, RuntimeError):
    """An avalanche exceeded the toppling cap without relaxing."""


class SettlementError(MarketError, RuntimeError):
    """A trade could not be settled because a portfolio precondition failed."""


class DegenerateSeriesError(MarketError, ValueError):
    """A series has zero variance (or is too short) for the requested statistic."""


class InputError(MarketError, ValueError):
    """Malformed or missing input data (CSV files, mismatched series)."""
