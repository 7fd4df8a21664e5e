"""Exception types shared across the package."""


class NeurontrimError(Exception):
    """Base class for all package errors."""


class DimensionError(NeurontrimError):
    """Operands have incompatible or invalid shapes."""


class ArgumentError(NeurontrimError):
    """An argument is outside its documented domain."""


class ConfigError(NeurontrimError):
    """An experiment configuration failed to parse or validate."""


class DataFormatError(NeurontrimError):
    """A data file is malformed (bad magic, truncation, count mismatch)."""


class MetricError(NeurontrimError):
    """A metric is undefined for the given inputs (e.g. all-zero reference)."""


class DivergenceError(NeurontrimError):
    """Training produced a non-finite cost."""

    def __init__(self, epoch, cost):
        super().__init__(f"non-finite training cost {cost!r} at epoch {epoch}")
        self.epoch = epoch
        self.cost = cost


class DegenerateNetworkError(NeurontrimError):
    """Compaction would leave a layer with zero surviving neurons."""
