from typing import Optional


class DriftEnsembleError(Exception):
    """
    Base class for errors that should end a command with a specific exit code.
    """
    exit_code = 1


class ConfigError(DriftEnsembleError):
    exit_code = 2


class StorageError(DriftEnsembleError):
    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None):
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path


class DataError(DriftEnsembleError):
    exit_code = 4

    def __init__(self, message: str, line: Optional[int] = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TrainingError(DataError):
    pass


class NumericalError(DataError):
    pass
