"""Exception hierarchy.

Three top-level classes map onto the CLI exit codes: ConfigError -> 1,
DataError -> 2, RuntimeFailure -> 3.  Everything raised by the library is a
subclass of SharpefolioError so callers can catch broadly.
"""


class SharpefolioError(Exception):
    pass


class ConfigError(SharpefolioError):
    """Invalid configuration (bad value, unknown key, unreadable file)."""


class DataError(SharpefolioError):
    """Problems with input data or insufficient history."""


class RuntimeFailure(SharpefolioError):
    """Computation-level failures (solver, degenerate statistics...)."""


# -- data layer -------------------------------------------------------------

class MissingFile(DataError):
    pass


class SchemaViolation(DataError):
    pass


class EmptyPanel(DataError):
    pass


class InsufficientHistory(DataError):
    pass


class NoDataAtDate(DataError):
    pass


# -- selection / optimization ------------------------------------------------

class EmptyUniverse(SharpefolioError):
    """No asset survives the screen; callers should hold cash."""


class NoAssets(RuntimeFailure):
    pass


class SingularStats(RuntimeFailure):
    pass


class Infeasible(RuntimeFailure):
    pass


class NotConverged(RuntimeFailure):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


# -- risk / metrics -----------------------------------------------------------

class NonPositiveEquity(RuntimeFailure):
    pass


class IndexOutOfRange(RuntimeFailure):
    pass


class NonPositiveStart(RuntimeFailure):
    pass


class NonPositiveValues(RuntimeFailure):
    pass


class EmptySeries(RuntimeFailure):
    pass


class ZeroVariance(RuntimeFailure):
    pass


class NoDownside(RuntimeFailure):
    pass


class DegenerateBenchmark(RuntimeFailure):
    pass


class InsufficientSample(RuntimeFailure):
    pass


class InsufficientSnapshots(RuntimeFailure):
    pass


# -- alpha expressions --------------------------------------------------------

class MalformedTree(RuntimeFailure):
    pass


class DegenerateSignal(RuntimeFailure):
    pass
