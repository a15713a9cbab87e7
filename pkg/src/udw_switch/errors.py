"""Exception types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain where the quantity is defined."""


class DegenerateStateError(ValueError):
    """A field state vanishes identically, so normalized quantities are undefined."""


class ConvergenceError(RuntimeError):
    """A numerical refinement loop hit its hard limit before reaching tolerance.

    Parameters
    ----------
    message : str
        Human-readable description.
    achieved : float
        Best tolerance reached before giving up.
    partial : object, optional
        Whatever partial results were gathered (e.g. a truncated sequence).
    """

    def __init__(self, message, achieved=float("nan"), partial=None):
        super().__init__(message)
        self.achieved = achieved
        self.partial = partial
