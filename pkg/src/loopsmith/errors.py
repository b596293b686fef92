"""Exception hierarchy shared across the toolkit.

The CLI maps ConfigError to exit code 2 and the numeric family
(DivergenceError, NoCrossoverError, ...) to exit code 3.
"""
from __future__ import annotations


class LoopsmithError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(LoopsmithError):
    """Invalid or inconsistent configuration; message names the field."""


class NumericError(LoopsmithError):
    """Base class for numeric failures during analysis or simulation."""


class PoleEvaluationError(NumericError):
    """Transfer function evaluated exactly at a pole."""

    def __init__(self, s: complex):
        self.s = s
        super().__init__(f"transfer function evaluated at a pole: s = {s}")


class SingularLoopError(NumericError):
    """1 + P*C*H is identically zero; the closed loop is undefined."""


class NoCrossoverError(NumericError):
    """No unity-gain crossover found on the search grid."""


class UncontrollableError(NumericError):
    """Controllability matrix is rank deficient."""

    def __init__(self, rank: int, n: int):
        self.rank = rank
        super().__init__(f"controllability matrix rank {rank} < {n}")


class UnobservableError(NumericError):
    """Observability matrix is rank deficient."""

    def __init__(self, rank: int, n: int):
        self.rank = rank
        super().__init__(f"observability matrix rank {rank} < {n}")


class DesignError(NumericError):
    """A synthesis step could not produce a valid component value."""


class DiscretizationError(NumericError):
    """Forward-Euler discretization would be unstable at the requested rate."""


class DivergenceError(NumericError):
    """Simulation produced a non-finite state."""

    def __init__(self, t_last: float):
        self.t_last = t_last
        super().__init__(f"simulation diverged; last finite state at t = {t_last:.6g} s")


class MetricError(NumericError):
    """A trace does not contain the feature a metric needs (e.g. no step edge)."""
