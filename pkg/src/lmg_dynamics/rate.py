"""Classical master equation for level populations with nearest-neighbour rates.

Populations flow only between adjacent instantaneous levels, with the same
rate in both directions:

    dP_i/ds = G_{i+1,i} P_{i+1} + G_{i-1,i} P_{i-1} - (G_{i,i+1} + G_{i,i-1}) P_i

and G_{i,i+1}(s) = T b / Delta_{i,i+1}(s)^2 for the adiabatic inverse-square
form, or exp(-b Delta^2) for the Landau-Zener-like alternative. The
derivative is taken with respect to s; the factor T in the rate absorbs the
conversion from physical time.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .core import ConfigError
from .integrate import integrate_rk4
from .spectral import SpectralSweep
from .traces import ModelTag, PopulationTrace

DEFAULT_TB = 0.01


class RateForm(str, enum.Enum):
    INVERSE_SQUARE = "inverse-square"
    LANDAU_ZENER = "landau-zener"


@dataclass(frozen=True)
class RateParams:
    b: float
    T: float
    form: RateForm = RateForm.INVERSE_SQUARE
    gap_floor: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "form", RateForm(self.form))
        if not self.b >= 0 or not np.isfinite(self.b):
            raise ConfigError(f"rate coupling b must be non-negative, got {self.b}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if not self.gap_floor > 0:
            raise ConfigError("gap_floor must be positive")

    @classmethod
    def default(cls, T: float, **kw) -> "RateParams":
        return cls(b=DEFAULT_TB / T, T=T, **kw)


def rate_table(sweep: SpectralSweep, params: RateParams) -> np.ndarray:
    """Adjacent-pair rates G_{n,n+1}(s) on the sweep grid, shape (len(grid), L-1)."""
    gaps = np.maximum(np.abs(sweep.gaps), params.gap_floor)
    if params.form is RateForm.INVERSE_SQUARE:
        return params.T * params.b / gaps**2
    return np.exp(-params.b * gaps**2)


def transition_rates(sweep: SpectralSweep, s, params: RateParams) -> np.ndarray:
    """Rate matrix with entry [i, j] the rate from level i to level j (zero off the tridiagonal)."""
    k = sweep.grid_index(s)
    g = rate_table(sweep, params)[k]
    L = sweep.n_levels
    out = np.zeros((L, L))
    i = np.arange(L - 1)
    out[i, i + 1] = g
    out[i + 1, i] = g
    return out


def generator(adjacent_rates: np.ndarray) -> np.ndarray:
    """Master-equation generator A with dP/ds = A P; columns sum to zero."""
    g = np.asarray(adjacent_rates, dtype=float)
    L = g.size + 1
    A = np.zeros((L, L))
    i = np.arange(L - 1)
    A[i + 1, i] = g
    A[i, i + 1] = g
    A[np.arange(L), np.arange(L)] = -A.sum(axis=0)
    return A


def _flow(g: np.ndarray, P: np.ndarray) -> np.ndarray:
    # net flow from level n to n+1
    net = g * (P[:-1] - P[1:])
    d = np.zeros_like(P)
    d[:-1] -= net
    d[1:] += net
    return d


def evolve_rate(
    sweep: SpectralSweep,
    params: RateParams,
    initial=None,
    method: str = "rk4",
    rtol: float = 1e-9,
    atol: float = 1e-13,
    expm_substeps: int = 4,
) -> PopulationTrace:
    """Integrate the master equation over the sweep grid.

    ``method="rk4"`` is the adaptive explicit integrator; negative
    populations make it reject and halve the step. Rates between grid points
    are linearly interpolated. ``method="expm"`` applies the exact
    exponential of the generator frozen at substep midpoints, which stays
    stable for the very large rates reached in wide parameter scans.
    """
    L = sweep.n_levels
    if initial is None:
        P0 = np.zeros(L)
        P0[0] = 1.0
    else:
        P0 = np.asarray(initial, dtype=float)
        if P0.shape != (L,):
            raise ConfigError(f"initial distribution must have {L} entries")
        if np.any(P0 < 0) or abs(P0.sum() - 1.0) > 1e-12:
            raise ConfigError("initial distribution must be non-negative and sum to 1")
    grid = sweep.grid
    table = rate_table(sweep, params)

    if method == "rk4":
        def rhs(s, P):
            k = min(int(np.searchsorted(grid, s, side="right")) - 1, grid.size - 2)
            u = (s - grid[k]) / (grid[k + 1] - grid[k])
            return _flow((1.0 - u) * table[k] + u * table[k + 1], P)

        P = integrate_rk4(rhs, P0, grid, rtol=rtol, atol=atol, accept=lambda y: bool(np.all(y >= -1e-14)))
    elif method == "expm":
        P = np.empty((grid.size, L))
        P[0] = P0
        cur = P0.copy()
        frac = (np.arange(expm_substeps) + 0.5) / expm_substeps
        for k in range(grid.size - 1):
            h = (grid[k + 1] - grid[k]) / expm_substeps
            for u in frac:
                cur = expm(generator((1.0 - u) * table[k] + u * table[k + 1]) * h) @ cur
            P[k + 1] = cur
    else:
        raise ConfigError(f"unknown integration method {method!r}")

    sums = P.sum(axis=1)
    meta = {
        "N": sweep.N,
        "T": params.T,
        "b": params.b,
        "rate_form": params.form.value,
        "gap_floor": params.gap_floor,
        "method": method,
        "direction": sweep.direction.value,
        "sector": sweep.sector.value,
        "sum_drift": float(np.max(np.abs(sums - 1.0))),
        "min_population": float(P.min()),
    }
    return PopulationTrace(grid, P, ModelTag.RATE, meta)
