"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class OrderingError(ValueError):
    """Event or sample supplied out of time order."""


class ProtocolError(ValueError):
    """Malformed protocol data, e.g. mismatched batch sizes."""


class InsufficientDataError(ValueError):
    """Too few samples for the requested statistic."""


class DegenerateBatchError(RuntimeError):
    """Preprocessing left no usable observations in a batch."""


class NumericalError(RuntimeError):
    """A numerical invariant (e.g. covariance positive semidefiniteness) failed."""
