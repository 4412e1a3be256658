class SfgSimError(ValueError):
    """Base class for every domain error raised by sfg_sim"""


class ConfigError(SfgSimError):
    """Scenario or settings problem; carries an optional source location"""

    def __init__(self, message: str, path: str = None, line: int = None):
        self.path = path
        self.line = line
        if path is not None and line is not None:
            message = f"{path}:{line}: {message}"
        elif path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class DegenerateFitError(SfgSimError):
    pass


class DimensionOverflowError(SfgSimError):
    pass


class UndefinedRatioError(SfgSimError):
    pass


class EngineModeError(SfgSimError):
    pass
