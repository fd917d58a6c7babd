"""Exception types shared across the package."""


class GameFormatError(ValueError):
    """A serialized game or policy document is malformed or invalid."""


class ScheduleError(ValueError):
    """Schedule parameters are out of range (need v > u > 1, T >= 1)."""


class NumericalError(RuntimeError):
    """A solver failed to reach its required tolerance."""


class MatrixGameError(NumericalError):
    """Matrix game solver hit its iteration cap before the gap tolerance.

    Carries the residual duality gap in `gap`.
    """

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = gap
