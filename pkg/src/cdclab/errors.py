"""Exceptions shared across the package."""


class InfeasibleSearchError(RuntimeError):
    """Raised when a BER-driven size/cluster search has no passing candidate.

    Carries the best BER achieved so the caller can report how far off the
    target the search ended up.
    """

    def __init__(self, message: str, best_ber: float):
        super().__init__(f"{message} (best BER achieved: {best_ber:.3e})")
        self.best_ber = best_ber
