"""Instantaneous spectra along a sweep, gauge alignment and gap analysis.

H(s) only couples basis states m and m +/- 2, so it never mixes the two
parity sectors. Diagonalizing each sector separately keeps eigenvectors
parity-pure even where the two sectors are degenerate to machine precision
(the ordered phase, s -> 1 forward), which a single dense eigh would mix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .core import (
    ConfigError,
    Direction,
    NumericalError,
    Schedule,
    Sector,
    SpinSystem,
    hamiltonian_stack,
)

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SpectralSnapshot:
    """Ascending eigenvalues and eigenvectors (columns) at one value of s."""

    s: float | None
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    degenerate: tuple[tuple[int, ...], ...] = ()

    @property
    def n_levels(self) -> int:
        return self.eigenvalues.size


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component of each column made positive
    idx = np.argmax(np.abs(vecs), axis=-2)
    picked = np.take_along_axis(vecs, idx[..., None, :], axis=-2)
    signs = np.where(picked < 0, -1.0, 1.0)
    return vecs * signs


def _degenerate_clusters(evals: np.ndarray, scale: float) -> tuple[tuple[int, ...], ...]:
    tol = DEGENERACY_TOL * max(1.0, scale)
    clusters = []
    current = [0]
    for i in range(1, evals.size):
        if evals[i] - evals[i - 1] <= tol:
            current.append(i)
        else:
            if len(current) > 1:
                clusters.append(tuple(current))
            current = [i]
    if len(current) > 1:
        clusters.append(tuple(current))
    return tuple(clusters)


def _parity_blocks(H: np.ndarray) -> list[np.ndarray] | None:
    dim = H.shape[-1]
    idx = np.arange(dim)
    odd_offset = (idx[:, None] - idx[None, :]) % 2 == 1
    if dim < 2 or np.any(H[..., odd_offset] != 0.0):
        return None
    return [idx[0::2], idx[1::2]]


def _eigh_stack(H: np.ndarray, blocks: list[np.ndarray] | None, s_label=None):
    """Batched eigh over the leading axis, optionally block by block, embedded in full basis."""
    n = H.shape[0]
    dim = H.shape[-1]
    try:
        if blocks is None:
            evals, vecs = np.linalg.eigh(H)
        else:
            parts_e, parts_v = [], []
            for b in blocks:
                e, v = np.linalg.eigh(H[:, b[:, None], b[None, :]])
                full = np.zeros((n, dim, b.size))
                full[:, b, :] = v
                parts_e.append(e)
                parts_v.append(full)
            evals = np.concatenate(parts_e, axis=1)
            vecs = np.concatenate(parts_v, axis=2)
            order = np.argsort(evals, axis=1, kind="stable")
            evals = np.take_along_axis(evals, order, axis=1)
            vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge (s={s_label})") from exc
    return evals, vecs


def diagonalize(H: np.ndarray, s: float | None = None, indices=None) -> SpectralSnapshot:
    """Full ascending eigendecomposition of a real symmetric matrix.

    ``indices`` restricts the problem to a subset of basis states (a parity
    sector); eigenvectors are always returned embedded in the full basis.
    """
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ConfigError("H must be a square matrix")
    scale = float(np.max(np.abs(H))) if H.size else 0.0
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * max(1.0, scale):
        raise ConfigError(f"H is not symmetric (s={s})")
    if not np.all(np.isfinite(H)):
        raise NumericalError(f"H has non-finite entries (s={s})")
    if indices is not None:
        blocks = [np.asarray(indices, dtype=int)]
    else:
        blocks = _parity_blocks(H)
    evals, vecs = _eigh_stack(H[None], blocks, s)
    evals, vecs = evals[0], _canonical_signs(vecs[0])
    return SpectralSnapshot(s, evals, vecs, _degenerate_clusters(evals, scale))


@dataclass(frozen=True, eq=False)
class SpectralSweep:
    """Spectra over an s-grid with eigenvectors aligned from one point to the next.

    energies has shape (len(grid), n_levels); vectors, when kept, has shape
    (len(grid), dim, n_levels) in the full S_z basis. ``degenerate`` maps a
    grid index to the level clusters that were aligned by subspace rotation.
    """

    N: int
    direction: Direction
    sector: Sector
    grid: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray | None = field(repr=False)
    basis: np.ndarray = field(repr=False)
    degenerate: dict = field(default_factory=dict, repr=False)

    @property
    def n_levels(self) -> int:
        return self.energies.shape[1]

    @property
    def level_x(self) -> np.ndarray:
        return np.arange(self.n_levels) / (self.n_levels - 1)

    @property
    def gaps(self) -> np.ndarray:
        """Adjacent-level gaps, shape (len(grid), n_levels - 1)."""
        return np.diff(self.energies, axis=1)

    def grid_index(self, s) -> int:
        if isinstance(s, (int, np.integer)):
            if not -self.grid.size <= s < self.grid.size:
                raise ConfigError(f"grid index {s} out of range")
            return int(s) % self.grid.size
        k = int(np.argmin(np.abs(self.grid - s)))
        if not np.isclose(self.grid[k], s, rtol=0, atol=1e-12):
            raise ConfigError(f"s={s} is not a grid point")
        return k

    def snapshot(self, s) -> SpectralSnapshot:
        if self.vectors is None:
            raise ConfigError("sweep was computed without eigenvectors")
        k = self.grid_index(s)
        return SpectralSnapshot(
            float(self.grid[k]), self.energies[k], self.vectors[k], self.degenerate.get(k, ())
        )

    def with_vectors(self, vectors) -> "SpectralSweep":
        """Copy with replaced eigenvectors (used for gauge checks)."""
        return SpectralSweep(
            self.N, self.direction, self.sector, self.grid, self.energies,
            vectors, self.basis, dict(self.degenerate),
        )


def _align(prev: np.ndarray, cur: np.ndarray, clusters) -> np.ndarray:
    cur = cur.copy()
    in_cluster = np.zeros(cur.shape[1], dtype=bool)
    for c in clusters:
        c = list(c)
        in_cluster[c] = True
        A = prev[:, c].T @ cur[:, c]
        u, _, wt = np.linalg.svd(A)
        cur[:, c] = cur[:, c] @ (wt.T @ u.T)
    overlaps = np.einsum("ij,ij->j", prev, cur)
    flip = (overlaps < 0) & ~in_cluster
    cur[:, flip] *= -1.0
    return cur


def sweep(
    sys: SpinSystem,
    sched: Schedule | Direction | str,
    grid=None,
    sector: Sector | str = Sector.FULL,
    keep_vectors: bool = True,
) -> SpectralSweep:
    """Diagonalize H(s) on every grid point and align eigenvector signs.

    Each eigenvector is given a non-negative overlap with the same level at
    the previous grid point, the discrete form of the parallel-transport
    gauge. Exactly degenerate clusters are aligned by the orthogonal
    rotation of maximal overlap and recorded in ``degenerate``.
    """
    if isinstance(sched, Schedule):
        direction = sched.direction
        grid = sched.grid if grid is None else grid
    else:
        direction = Direction(sched)
    if grid is None:
        raise ConfigError("a grid is required when no Schedule is given")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ConfigError("grid must be a strictly increasing 1-D array")
    sector = Sector(sector)
    basis = sys.sector_indices(sector)

    H = hamiltonian_stack(sys, direction, grid)
    blocks = [basis] if sector is not Sector.FULL else _parity_blocks(sys.sx2 + sys.sz)
    evals, vecs = _eigh_stack(H, blocks, s_label=f"[{grid[0]}, {grid[-1]}]")
    scale = np.max(np.abs(H), axis=(1, 2))

    degenerate = {}
    for k in range(grid.size):
        clusters = _degenerate_clusters(evals[k], scale[k])
        if clusters:
            degenerate[k] = clusters
    vecs[0] = _canonical_signs(vecs[0])
    for k in range(1, grid.size):
        vecs[k] = _align(vecs[k - 1], vecs[k], degenerate.get(k, ()))

    return SpectralSweep(
        N=sys.N,
        direction=direction,
        sector=sector,
        grid=grid,
        energies=evals,
        vectors=vecs if keep_vectors else None,
        basis=basis,
        degenerate=degenerate,
    )


def gap(sweep: SpectralSweep, i: int, j: int, s) -> float:
    """|e_j - e_i| at a grid point (given as index or s value)."""
    return abs(signed_gap(sweep, i, j, s))


def signed_gap(sweep: SpectralSweep, i: int, j: int, s) -> float:
    if i == j:
        raise ConfigError("gap needs two distinct levels")
    k = sweep.grid_index(s)
    return float(sweep.energies[k, j] - sweep.energies[k, i])


class MinGap(NamedTuple):
    s0: float
    gap_min: float
    interior: bool


def min_gap_location(sweep: SpectralSweep, n: int) -> MinGap:
    """Grid minimum of gap(n, n+1), refined by a three-point parabola.

    A minimum on the grid boundary is returned as is with ``interior=False``.
    """
    if not 0 <= n < sweep.n_levels - 1:
        raise ConfigError(f"level {n} has no upper neighbour")
    g = sweep.energies[:, n + 1] - sweep.energies[:, n]
    s = sweep.grid
    k = int(np.argmin(g))
    if k == 0 or k == g.size - 1 or np.all(g == g[k]):
        return MinGap(float(s[k]), float(g[k]), False)
    x0, x1, x2 = s[k - 1], s[k], s[k + 1]
    y0, y1, y2 = g[k - 1], g[k], g[k + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
    if a <= 0:
        return MinGap(float(x1), float(y1), True)
    xv = -b / (2 * a)
    xv = min(max(xv, x0), x2)
    c = y1 - a * x1**2 - b * x1
    return MinGap(float(xv), float(a * xv**2 + b * xv + c), True)


def integrated_dos(snapshot: SpectralSnapshot | SpectralSweep, level: int) -> float:
    """Normalized level position x = level / (n_levels - 1)."""
    L = snapshot.n_levels
    if not 0 <= level < L:
        raise ConfigError(f"level {level} out of range for {L} levels")
    return level / (L - 1)
