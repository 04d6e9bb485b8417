"""Exception hierarchy for altmas.

Every error carries the exit code the CLI reports for it.
"""


class AltmasError(Exception):
    """Base class for all altmas errors."""

    exit_code = 1


class ConfigError(AltmasError, ValueError):
    """Invalid experiment configuration or metric set."""

    exit_code = 1


class DataFormatError(AltmasError, ValueError):
    """A pool, label or predictions file is malformed."""

    exit_code = 2


class OracleError(AltmasError):
    """An oracle query violated the labeling protocol."""

    exit_code = 1


class BudgetExhaustedError(OracleError):
    pass


class AlreadyLabeledError(OracleError):
    pass


class IndexOutOfRangeError(OracleError, IndexError):
    pass


class MetricError(AltmasError, ValueError):
    """Confusion counts or labels are inconsistent with a metric."""

    exit_code = 3


class SurrogateError(AltmasError, ValueError):
    """The surrogate or agreement classifier cannot be trained."""

    exit_code = 3


class ReportError(AltmasError):
    exit_code = 2


class AcquisitionError(AltmasError, ValueError):
    """Nothing left to score or select."""

    exit_code = 3
