"""Exception types shared across the solvers and the CLI."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class NoPositiveRootError(ArithmeticError):
    """The Riccati quadratic has no positive root.

    Cannot happen for positive state/control costs; raised defensively so a
    broken problem definition fails loudly instead of propagating garbage.
    """


class DivergedError(RuntimeError):
    """An iteration tripped the divergence monitor.

    Partial results are attached so callers (in particular the CLI) can still
    write artifacts for the diverged run.
    """

    def __init__(self, trip_iteration: int, **artifacts):
        super().__init__(f"diverged at iteration {trip_iteration}")
        self.trip_iteration = trip_iteration
        self.artifacts = artifacts


class NotConvergedError(RuntimeError):
    """The iteration budget ran out before the convergence threshold was met."""

    def __init__(self, n_iterations: int, **artifacts):
        super().__init__(f"not converged after {n_iterations} iterations")
        self.n_iterations = n_iterations
        self.artifacts = artifacts
