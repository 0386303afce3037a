"""Exception types raised by lurbreak."""


class ParameterError(ValueError):
    """Invalid model, simulation or tuning parameter."""


class DegenerateSegmentError(ValueError):
    """A regime segment cannot be fitted (too short or zero-variance regressor)."""

    def __init__(self, message: str, side: str | None = None) -> None:
        super().__init__(message)
        self.side = side
