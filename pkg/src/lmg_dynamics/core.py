"""Collective-spin operators and the interpolating LMG Hamiltonian.

The model lives in the maximal-spin sector S = N/2 of N spin-1/2 sites. All
matrices are expressed in the S_z eigenbasis ordered by increasing m, from
-S to +S, and every index used elsewhere in the package refers to that order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid model or run configuration."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (non-convergence, norm drift, step underflow)."""


class Direction(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class Sector(str, enum.Enum):
    """Parity sector of the S_z basis; parity of a basis state is (-1)**(S - m)."""

    EVEN = "even"
    ODD = "odd"
    FULL = "full"


@dataclass(frozen=True, eq=False)
class SpinSystem:
    N: int
    S: float
    dim: int
    sz: np.ndarray = field(repr=False)
    sx2: np.ndarray = field(repr=False)

    @property
    def m(self) -> np.ndarray:
        return np.diag(self.sz).copy()

    @property
    def parity(self) -> np.ndarray:
        """Diagonal of the parity operator exp(i*pi*(S - S_z))."""
        k = np.rint(self.S - self.m).astype(int)
        return np.where(k % 2 == 0, 1.0, -1.0)

    def sector_indices(self, sector: Sector | str) -> np.ndarray:
        sector = Sector(sector)
        if sector is Sector.FULL:
            return np.arange(self.dim)
        want = 1.0 if sector is Sector.EVEN else -1.0
        return np.flatnonzero(self.parity == want)


def build_spin_system(N: int) -> SpinSystem:
    """Build S_z and S_x^2 for N spin-1/2 sites in the S = N/2 multiplet.

    S_x^2 is assembled in closed form from the ladder-operator matrix
    elements, so it is exactly symmetric and pentadiagonal.
    """
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)):
        raise ConfigError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N < 2 or N % 2:
        raise ConfigError(f"N must be an even integer >= 2, got {N}")
    S = N / 2
    dim = N + 1
    m = np.arange(dim) - S
    ss1 = S * (S + 1)

    sx2 = np.diag((ss1 - m**2) / 2)
    mm = m[:-2]
    off = 0.25 * np.sqrt((ss1 - mm * (mm + 1)) * (ss1 - (mm + 1) * (mm + 2)))
    sx2 += np.diag(off, 2) + np.diag(off, -2)

    sz = np.diag(m)
    sz.setflags(write=False)
    sx2.setflags(write=False)
    return SpinSystem(N=N, S=S, dim=dim, sz=sz, sx2=sx2)


def _coefficients(N: int, direction: Direction, s: float) -> tuple[float, float]:
    # H = -c_x * sx2 - c_z * sz
    if direction is Direction.FORWARD:
        return s / N, 1.0 - s
    return (1.0 - s) / N, s


@dataclass(frozen=True, eq=False)
class Schedule:
    """Sweep direction, total time and the piecewise-constant propagation layout.

    ``grid`` holds the s values where populations are recorded. ``steps`` is
    the total number of fixed-Hamiltonian intervals of length T/steps, and
    must be a multiple of ``len(grid) - 1`` so each recording interval is
    split into an integer number of propagation steps.
    """

    direction: Direction
    T: float
    steps: int
    grid: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        grid = np.asarray(self.grid, dtype=float)
        if not self.T > 0 or not np.isfinite(self.T):
            raise ConfigError(f"total time T must be positive, got {self.T}")
        if grid.ndim != 1 or grid.size < 2:
            raise ConfigError("grid needs at least two points")
        if grid[0] != 0.0 or grid[-1] != 1.0:
            raise ConfigError("grid must start at s=0 and end at s=1")
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("grid must be strictly increasing")
        if self.steps < 1 or self.steps % (grid.size - 1):
            raise ConfigError(
                f"steps={self.steps} must be a positive multiple of len(grid)-1={grid.size - 1}"
            )
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def uniform(cls, direction, T: float, n_grid: int = 501, steps: int | None = None) -> "Schedule":
        if n_grid < 2:
            raise ConfigError(f"grid size must be >= 2, got {n_grid}")
        if steps is None:
            steps = 20 * (n_grid - 1)
        return cls(Direction(direction), float(T), int(steps), np.linspace(0.0, 1.0, n_grid))

    @property
    def dt(self) -> float:
        return self.T / self.steps

    @property
    def substeps(self) -> int:
        return self.steps // (self.grid.size - 1)


def hamiltonian(sys: SpinSystem, sched: Schedule | Direction | str, s: float) -> np.ndarray:
    """H(s) for the chosen sweep direction.

    Forward:  H(s) = -(s/N) S_x^2 - (1 - s) S_z
    Backward: H(s) = -((1 - s)/N) S_x^2 - s S_z
    """
    direction = sched.direction if isinstance(sched, Schedule) else Direction(sched)
    if not 0.0 <= s <= 1.0:
        raise ConfigError(f"s must lie in [0, 1], got {s}")
    cx, cz = _coefficients(sys.N, direction, s)
    return -cx * sys.sx2 - cz * sys.sz


def hamiltonian_stack(sys: SpinSystem, direction: Direction | str, s_values) -> np.ndarray:
    """H(s) for many s at once, shape (len(s_values), dim, dim)."""
    direction = Direction(direction)
    s = np.asarray(s_values, dtype=float)
    if np.any((s < 0) | (s > 1)):
        raise ConfigError("s values must lie in [0, 1]")
    cx, cz = _coefficients(sys.N, direction, s)
    return -cx[:, None, None] * sys.sx2 - cz[:, None, None] * sys.sz


def d_hamiltonian_ds(sys: SpinSystem, sched: Schedule | Direction | str) -> np.ndarray:
    """dH/ds, which is s-independent because H is affine in s."""
    direction = sched.direction if isinstance(sched, Schedule) else Direction(sched)
    dh = -sys.sx2 / sys.N + sys.sz
    return dh if direction is Direction.FORWARD else -dh
