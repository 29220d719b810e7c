"""Uniform 1D meshes and the per-node field containers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh of ``n_nodes`` points on ``[x_min, x_max]``.

    Node ``i`` sits at ``x_min + i * dx`` with ``dx = (x_max - x_min) /
    (n_nodes - 1)``; every field type in the package indexes nodes this way.
    """

    x_min: float
    x_max: float
    n_nodes: int

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ValueError(f"n_nodes must be >= 3, got {self.n_nodes}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_nodes - 1)

    def node(self, i: int) -> float:
        if not 0 <= i < self.n_nodes:
            raise IndexError(f"node index {i} outside [0, {self.n_nodes})")
        return self.x_min + i * self.dx

    def nodes(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_nodes) * self.dx

    def snap_index(self, x: float) -> int:
        """Index of the nearest node to ``x`` after clamping to the domain.

        Exact midpoints resolve toward the smaller index so snapping is
        deterministic.
        """
        clamped = min(max(x, self.x_min), self.x_max)
        t = (clamped - self.x_min) / self.dx
        i = np.floor(t + 0.5)
        if i - t == 0.5:
            i -= 1.0
        return int(min(max(i, 0.0), self.n_nodes - 1))

    def snap_indices(self, x: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`snap_index`; identical arithmetic."""
        clamped = np.minimum(np.maximum(x, self.x_min), self.x_max)
        t = (clamped - self.x_min) / self.dx
        i = np.floor(t + 0.5)
        i = np.where(i - t == 0.5, i - 1.0, i)
        return np.clip(i, 0, self.n_nodes - 1).astype(np.int64)


@dataclass
class ValueField:
    """Value estimate per grid node."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError("values shape does not match grid")

    @classmethod
    def zeros(cls, grid: Grid1D) -> "ValueField":
        return cls(grid, np.zeros(grid.n_nodes))

    def copy(self) -> "ValueField":
        return ValueField(self.grid, self.values.copy())


@dataclass
class PolicyField:
    """Control per grid node."""

    grid: Grid1D
    controls: np.ndarray

    def __post_init__(self):
        self.controls = np.asarray(self.controls, dtype=np.float64)
        if self.controls.shape != (self.grid.n_nodes,):
            raise ValueError("controls shape does not match grid")

    @classmethod
    def constant(cls, grid: Grid1D, value: float) -> "PolicyField":
        return cls(grid, np.full(grid.n_nodes, float(value)))

    def copy(self) -> "PolicyField":
        return PolicyField(self.grid, self.controls.copy())
