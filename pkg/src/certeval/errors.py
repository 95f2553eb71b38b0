from typing import Optional


class CertevalError(Exception):
    """Base class for every error raised by the evaluator."""


class InputError(CertevalError):
    """Bad input: unreadable file, invalid parameter or inconsistent corpus."""

    def __init__(self, message: str, source: Optional[str] = None):
        self.source = source
        super().__init__(f"{source}: {message}" if source else message)


class FormatError(InputError):
    """A UEM1/UCM1/PGM/CSV file does not follow its format."""

    def __init__(self, message: str, source: Optional[str] = None, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, source)


class DimensionError(InputError):
    """Two grids that must be evaluated together have different shapes."""


class NumericalError(CertevalError):
    """The GVF solver produced non-finite values."""

    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"{message} (iteration {iteration})")
