"""Shared exception types."""


class ConvergenceError(RuntimeError):
    """Iterative solver failed to reach the requested duality gap.

    Carries the final gap so callers can decide whether the answer is
    still usable.
    """

    def __init__(self, message, gap):
        super().__init__(message)
        self.gap = float(gap)
