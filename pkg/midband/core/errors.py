"""Exception hierarchy shared by every module.

Stores and services raise these; the CLI maps ``exit_code`` to the process
exit status (config=2, data=3, compute=4).
"""


class MidbandError(Exception):
    exit_code: int = 1


# -------- Config --------
class ConfigError(MidbandError, ValueError):
    exit_code = 2


# -------- Data --------
class DataError(MidbandError, ValueError):
    exit_code = 3


class ParseError(DataError):
    pass


class ValidationError(DataError):
    pass


class UnknownCarrier(DataError, KeyError):
    pass


class GridMismatch(DataError):
    pass


# -------- Compute --------
class ComputeError(MidbandError, ArithmeticError):
    exit_code = 4


class DomainError(ComputeError, ValueError):
    pass


class EmptyDeployment(ComputeError):
    pass


class NoCoveredCells(ComputeError):
    pass


class NoReferenceCoverage(ComputeError, ZeroDivisionError):
    pass


class Infeasible(ComputeError):
    pass
