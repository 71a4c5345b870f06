"""
Exception hierarchy for the travel feature toolkit.

Each top-level family carries the process exit code the CLI reports for it.
"""


class TravelFeatureError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1


class ConfigError(TravelFeatureError):
    """Invalid configuration value, file or flag"""

    exit_code = 2


class InputDataError(TravelFeatureError):
    """Unusable input data (missing file, malformed header, bad coordinates)"""

    exit_code = 3


class InvalidCoordinateError(InputDataError, ValueError):
    pass


class MalformedHeaderError(InputDataError):
    pass


class ProfileNotFoundError(InputDataError, KeyError):
    """A passenger uid is absent from every fitted attribute model"""


class NumericalError(TravelFeatureError):
    """Numerical or degenerate-data failure"""

    exit_code = 4


class IsolatedPointError(NumericalError):
    """Flat-kernel window around a point contains no data points"""


class EmptyLifeCircleError(NumericalError):
    """A life circle has no POI mass to normalize"""


class UndefinedIndexError(NumericalError):
    """A cluster validity index is undefined for the given partition"""
