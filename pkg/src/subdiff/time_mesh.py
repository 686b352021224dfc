"""Time partitions 0 = t_0 < t_1 < ... < t_N = T with quasiuniformity checks.

Interval indices are 1-based throughout the public API: interval n is
(t_{n-1}, t_n] with step k_n = t_n - t_{n-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_MESH_RATIO = 2.0


@dataclass(frozen=True)
class TimeMesh:
    """Immutable time partition.

    Attributes:
        levels: array of length N+1 holding t_0 .. t_N.
        uniform: True when all steps are exactly equal, which enables
            integer index arithmetic in admissibility tests and lag-based
            weight caching.
    """

    levels: np.ndarray
    uniform: bool = field(default=False)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        if levels.ndim != 1 or levels.size < 2:
            raise ValueError("mesh needs at least one interval")
        if levels[0] != 0.0:
            raise ValueError("mesh must start at t_0 = 0")
        if np.any(np.diff(levels) <= 0.0):
            raise ValueError("time levels must be strictly increasing")

    @property
    def N(self) -> int:
        return self.levels.size - 1

    @property
    def T(self) -> float:
        return float(self.levels[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.levels)

    @property
    def k_min(self) -> float:
        return float(self.steps.min())

    @property
    def k_max(self) -> float:
        return float(self.steps.max())

    def step(self, n: int) -> float:
        self._check_index(n)
        return float(self.levels[n] - self.levels[n - 1])

    def level(self, n: int) -> float:
        if not 0 <= n <= self.N:
            raise ValueError(f"level index {n} outside 0..{self.N}")
        return float(self.levels[n])

    def midpoint(self, n: int) -> float:
        """Midpoint of interval n, (t_{n-1} + t_n)/2."""
        self._check_index(n)
        return float(0.5 * (self.levels[n - 1] + self.levels[n]))

    def _check_index(self, n: int) -> None:
        if not 1 <= n <= self.N:
            raise ValueError(f"interval index {n} outside 1..{self.N}")


def uniform_mesh(N: int, T: float) -> TimeMesh:
    """Uniform partition of [0, T] into N intervals."""
    if N < 1:
        raise ValueError("N must be at least 1")
    if T <= 0.0:
        raise ValueError("T must be positive")
    return TimeMesh(np.linspace(0.0, T, N + 1), uniform=True)


def mesh_from_levels(levels, max_ratio: float = DEFAULT_MESH_RATIO) -> TimeMesh:
    """Validating constructor for an arbitrary quasiuniform partition.

    Rejects meshes whose step ratio max k_n / min k_n exceeds max_ratio,
    since the fast summation cost analysis assumes quasiuniformity.
    """
    mesh = TimeMesh(np.asarray(levels, dtype=float))
    steps = mesh.steps
    ratio = steps.max() / steps.min()
    if ratio > max_ratio * (1.0 + 1e-12):
        raise ValueError(
            f"mesh is not quasiuniform: step ratio {ratio:.6g} exceeds {max_ratio:.6g}"
        )
    uniform = bool(steps.max() == steps.min())
    return TimeMesh(mesh.levels, uniform=uniform)
