"""Exact piecewise-constant Schrödinger evolution along the sweep.

The sweep s in [0, 1] is cut into ``steps`` intervals of physical length
T/steps. Within an interval the Hamiltonian is frozen at the interval
midpoint and the state is propagated exactly through its eigendecomposition.
Populations of the instantaneous eigenlevels are recorded on the schedule grid.
"""

from __future__ import annotations

import enum

import numpy as np

from .core import (
    ConfigError,
    Direction,
    NumericalError,
    Schedule,
    Sector,
    SpinSystem,
    hamiltonian,
    hamiltonian_stack,
)
from .spectral import SpectralSnapshot, _eigh_stack, diagonalize, sweep
from .traces import ModelTag, PopulationTrace

NORM_ABORT = 1e-8
_CHUNK = 4096


class InitialState(str, enum.Enum):
    """Choice of the s = 0 ground state.

    The backward sweep starts from -S_x^2/N whose ground level is an exact
    parity doublet. EVEN and ODD take the ground state of that parity sector;
    BROKEN takes their symmetric superposition (close to all spins along +x).
    """

    EVEN = "even"
    ODD = "odd"
    BROKEN = "broken"


def ground_state(sys: SpinSystem, direction, choice: InitialState | str = InitialState.EVEN) -> np.ndarray:
    choice = InitialState(choice)
    H0 = hamiltonian(sys, Direction(direction), 0.0)
    if choice is InitialState.BROKEN:
        even = diagonalize(H0, 0.0, sys.sector_indices(Sector.EVEN)).eigenvectors[:, 0]
        odd = diagonalize(H0, 0.0, sys.sector_indices(Sector.ODD)).eigenvectors[:, 0]
        psi = (even + odd) / np.sqrt(2.0)
    else:
        psi = diagonalize(H0, 0.0, sys.sector_indices(Sector(choice.value))).eigenvectors[:, 0]
    return psi.astype(complex)


def state_sector(sys: SpinSystem, state: np.ndarray, tol: float = 1e-14) -> Sector:
    """Parity sector that holds the state, or FULL if it has weight in both."""
    w = np.abs(state) ** 2
    even = w[sys.sector_indices(Sector.EVEN)].sum()
    odd = w[sys.sector_indices(Sector.ODD)].sum()
    if odd <= tol:
        return Sector.EVEN
    if even <= tol:
        return Sector.ODD
    return Sector.FULL


def project_populations(state: np.ndarray, snapshot: SpectralSnapshot) -> np.ndarray:
    """P_i = |<v_i|state>|^2 for the snapshot's eigenvectors."""
    amps = snapshot.eigenvectors.T @ state
    return np.abs(amps) ** 2


def _propagate(psi, evals, vecs, dt):
    return vecs @ (np.exp(-1j * evals * dt) * (vecs.T @ psi))


def propagate_interval(state: np.ndarray, snapshot: SpectralSnapshot, dt: float) -> np.ndarray:
    """Evolve for time dt under the frozen Hamiltonian described by ``snapshot``.

    Raises NumericalError if the norm moves by more than 1e-8, which also
    catches a state with weight outside the snapshot's eigenvector span.
    """
    if dt < 0:
        raise ConfigError("dt must be non-negative")
    out = _propagate(state, snapshot.eigenvalues, snapshot.eigenvectors, dt)
    drift = abs(np.linalg.norm(out) - np.linalg.norm(state))
    if drift > NORM_ABORT:
        raise NumericalError(f"norm drift {drift:.3e} in one interval (s={snapshot.s})")
    return out


def evolve_full(
    sys: SpinSystem,
    sched: Schedule,
    initial: np.ndarray | InitialState | str = InitialState.EVEN,
) -> PopulationTrace:
    """Full Schrödinger evolution from the s = 0 ground state (or a given state).

    Populations are reported on the instantaneous levels of the parity
    sector holding the initial state; H conserves parity, so that sector
    carries all of the weight for the whole sweep.
    """
    if isinstance(initial, np.ndarray):
        psi = np.asarray(initial, dtype=complex)
        if psi.shape != (sys.dim,):
            raise ConfigError(f"initial state must have length {sys.dim}")
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ConfigError("initial state is not normalized")
        initial_label = "custom"
    else:
        initial_label = InitialState(initial).value
        psi = ground_state(sys, sched.direction, initial)

    sector = state_sector(sys, psi)
    basis = sys.sector_indices(sector)
    sw = sweep(sys, sched, sector=sector)
    vecs_rec = sw.vectors[:, basis, :]
    local = psi[basis]

    grid = sched.grid
    sub = sched.substeps
    frac = (np.arange(sub) + 0.5) / sub
    mids = (grid[:-1, None] + np.diff(grid)[:, None] * frac[None, :]).ravel()
    dts = np.repeat(np.diff(grid) * sched.T / sub, sub)

    pops = np.empty((grid.size, basis.size))
    pops[0] = np.abs(vecs_rec[0].T @ local) ** 2
    drift = 0.0
    for start in range(0, mids.size, _CHUNK):
        stop = min(start + _CHUNK, mids.size)
        H = hamiltonian_stack(sys, sched.direction, mids[start:stop])[:, basis[:, None], basis[None, :]]
        evals, vecs = _eigh_stack(H, None, s_label=f"[{mids[start]:.6g}, {mids[stop - 1]:.6g}]")
        for j in range(stop - start):
            local = _propagate(local, evals[j], vecs[j], dts[start + j])
            step = start + j + 1
            if step % sub == 0:
                k = step // sub
                norm = np.linalg.norm(local)
                drift = max(drift, abs(norm - 1.0))
                if drift > NORM_ABORT:
                    raise NumericalError(f"norm drift {drift:.3e} at s={grid[k]:.6g}")
                pops[k] = np.abs(vecs_rec[k].T @ local) ** 2

    meta = {
        "N": sys.N,
        "T": sched.T,
        "steps": sched.steps,
        "direction": sched.direction.value,
        "sector": sector.value,
        "initial": initial_label,
        "norm_drift": drift,
    }
    return PopulationTrace(grid, pops, ModelTag.FULL, meta)
