"""Exception types shared across the package."""


class IssLabError(Exception):
    """Base class for all isslab domain errors."""


class ValidationError(IssLabError):
    """Invalid input data (bad grade, bad region, malformed CSV row, ...).

    CSV loaders prefix messages with ``path:line`` so callers can point at
    the offending row.
    """


class MalformedAggregatorError(IssLabError):
    """An aggregator definition is unusable (bad exponent, non-monotone or
    incomplete evaluation table)."""


class InsufficientSampleError(IssLabError):
    """A statistic was requested on fewer observations than it needs."""


class UndefinedStatisticError(IssLabError):
    """The statistic does not exist for this input (zero variance, zero
    total entropy)."""


class InvalidChangeError(IssLabError):
    """Applying a change vector would push a grade outside the AIS range."""
