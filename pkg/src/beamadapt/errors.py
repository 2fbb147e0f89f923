"""Exceptions shared across the solver and simulation layers."""


class InfeasibleError(Exception):
    """No admissible configuration satisfies the SINR targets / power cap.

    `spectral_radius` carries the radius of the normalized cross-gain
    matrix when the failing check was a fixed-size power solve.
    """

    def __init__(self, message: str, spectral_radius: float | None = None):
        super().__init__(message)
        self.spectral_radius = spectral_radius


class NonConvergedError(Exception):
    """An iterative solve hit its iteration budget before meeting tolerance."""

    def __init__(self, message: str, iterations: int, worst_gap: float, trace=None):
        super().__init__(message)
        self.iterations = iterations
        self.worst_gap = worst_gap
        self.trace = trace


class ScenarioError(ValueError):
    """A scenario document failed validation; message names the field path."""
