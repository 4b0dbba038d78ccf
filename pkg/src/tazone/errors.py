"""Exception hierarchy shared by all tazone modules."""


class TazoneError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(TazoneError):
    """Invalid, overlapping, or otherwise unusable polygon geometry."""


class IngestionError(TazoneError):
    """Input data is incomplete or malformed.

    Carries an optional list of per-item issues so callers can emit a
    machine-readable error report.
    """

    def __init__(self, message, issues=None):
        super().__init__(message)
        self.issues = list(issues) if issues else []


class ConsistencyError(TazoneError):
    """Cross-referenced identifiers or node sets do not line up."""


class ConfigurationError(TazoneError):
    """A parameter is outside its documented range."""


class DegenerateGraphError(TazoneError):
    """Graph has zero total weight; modularity is undefined."""


class DegenerateInputError(TazoneError):
    """Statistic undefined for this input (e.g. a single region)."""


class InsufficientDataError(TazoneError):
    """Not enough observations to run the requested analysis."""
