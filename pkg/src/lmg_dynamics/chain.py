"""Effective quantum chain of instantaneous levels.

In the gauge <d eta_n/ds | eta_n> = 0 the level amplitudes obey

    da_m/ds = -i T e_m a_m - sum_{n != m} <eta_m| dH/ds |eta_n> / (e_n - e_m) a_n

and the chain model keeps only n = m +/- 1. The coupling g_n(s) standing in
for <eta_n| dH/ds |eta_{n+1}> is either a constant, a Gaussian-in-s
profile with log-in-n amplitude fitted to the exact elements, or the exact
elements themselves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .cgc import cgc_crossing
from .core import ConfigError
from .integrate import integrate_rk4
from .spectral import SpectralSweep
from .traces import ModelTag, PopulationTrace


class CouplingVariant(str, enum.Enum):
    CONSTANT = "constant"
    FITTED = "fitted"
    EXACT = "exact"


_TAGS = {
    CouplingVariant.CONSTANT: ModelTag.CHAIN_CONST,
    CouplingVariant.FITTED: ModelTag.CHAIN_FIT,
    CouplingVariant.EXACT: ModelTag.CHAIN_EXACT,
}


def peak_positions(sweep: SpectralSweep) -> np.ndarray:
    """s0(n) for each adjacent pair, read off the analytic curve at x = n/(L-1)."""
    L = sweep.n_levels
    return np.asarray(cgc_crossing(np.arange(L - 1) / (L - 1), sweep.direction), dtype=float)


def log_amplitude(a: float, b_fit: float, n) -> np.ndarray:
    # pair (0, 1) reuses the n = 1 amplitude since log 0 is undefined
    n = np.maximum(np.asarray(n, dtype=float), 1.0)
    return a + b_fit * np.log(n)


@dataclass(frozen=True, eq=False)
class ChainCouplings:
    """Nearest-neighbour couplings g_n(s), n = 0 .. L-2."""

    variant: CouplingVariant
    n_pairs: int
    c: float | None = None
    a: float | None = None
    b_fit: float | None = None
    gamma: float | None = None
    s0: np.ndarray | None = field(default=None, repr=False)
    amplitudes: np.ndarray | None = field(default=None, repr=False)
    exact: np.ndarray | None = field(default=None, repr=False)
    exact_grid: np.ndarray | None = field(default=None, repr=False)

    def table(self, grid) -> np.ndarray:
        """g_n(s) evaluated on a grid, shape (len(grid), n_pairs)."""
        grid = np.asarray(grid, dtype=float)
        if self.variant is CouplingVariant.CONSTANT:
            return np.full((grid.size, self.n_pairs), float(self.c))
        if self.variant is CouplingVariant.FITTED:
            if self.amplitudes is not None:
                amp = self.amplitudes
            else:
                amp = log_amplitude(self.a, self.b_fit, np.arange(self.n_pairs))
            return amp[None, :] * np.exp(-self.gamma * (grid[:, None] - self.s0[None, :]) ** 2)
        if self.exact_grid.shape != grid.shape or not np.allclose(self.exact_grid, grid, rtol=0, atol=1e-12):
            raise ConfigError("exact couplings are only defined on their own sweep grid")
        return self.exact


def exact_matrix_elements(sweep: SpectralSweep, dH: np.ndarray, s) -> np.ndarray:
    """M[m, n] = <v_m| dH/ds |v_n> at one grid point."""
    v = sweep.snapshot(s).eigenvectors
    return v.T @ dH @ v


def exact_coupling_table(sweep: SpectralSweep, dH: np.ndarray) -> np.ndarray:
    """Signed M_{n,n+1}(s) on the sweep grid, shape (len(grid), L-1)."""
    if sweep.vectors is None:
        raise ConfigError("sweep was computed without eigenvectors")
    V = sweep.vectors
    dV = np.einsum("ij,kjl->kil", dH, V)
    return np.einsum("kin,kin->kn", V[:, :, :-1], dV[:, :, 1:])


def exact_couplings(sweep: SpectralSweep, dH: np.ndarray, absolute: bool = False) -> ChainCouplings:
    M = exact_coupling_table(sweep, dH)
    if absolute:
        M = np.abs(M)
    return ChainCouplings(CouplingVariant.EXACT, M.shape[1], exact=M, exact_grid=sweep.grid.copy())


def constant_couplings(sweep: SpectralSweep, dH: np.ndarray, c: float | None = None) -> ChainCouplings:
    """Equal couplings for every pair; by default the mean exact |M_{n,n+1}| over the sweep."""
    if c is None:
        c = float(np.mean(np.abs(exact_coupling_table(sweep, dH))))
    return ChainCouplings(CouplingVariant.CONSTANT, sweep.n_levels - 1, c=float(c))


@dataclass
class CouplingFit:
    couplings: ChainCouplings
    level_amplitudes: np.ndarray
    level_rms: np.ndarray
    residuals: np.ndarray
    log_fit_rms: float
    converged: bool
    message: str = ""

    def report(self) -> dict:
        c = self.couplings
        return {
            "a": c.a,
            "b_fit": c.b_fit,
            "gamma": c.gamma,
            "s0": [float(v) for v in c.s0],
            "level_amplitudes": [float(v) for v in self.level_amplitudes],
            "level_rms": [float(v) for v in self.level_rms],
            "log_fit_rms": self.log_fit_rms,
            "converged": self.converged,
            "uses_amplitude_table": c.amplitudes is not None,
            "message": self.message,
        }


def peak_heights(grid, magnitudes) -> np.ndarray:
    """Maximum of each column, refined by a parabola through log|M| at the top three grid points.

    The refinement is exact for a Gaussian profile.
    """
    grid = np.asarray(grid, dtype=float)
    Y = np.asarray(magnitudes, dtype=float)
    out = Y.max(axis=0).astype(float)
    for n in range(Y.shape[1]):
        k = int(np.argmax(Y[:, n]))
        if 0 < k < grid.size - 1 and np.all(Y[k - 1:k + 2, n] > 0):
            x = grid[k - 1:k + 2]
            c2, c1, c0 = np.polyfit(x, np.log(Y[k - 1:k + 2, n]), 2)
            if c2 < 0:
                xv = -c1 / (2 * c2)
                out[n] = max(out[n], float(np.exp(c0 + c1 * xv + c2 * xv**2)))
    return out


def fit_gaussian_log(grid, magnitudes, s0) -> CouplingFit:
    """Fit |M_{n,n+1}(s)| to A_n exp(-gamma (s - s0(n))^2), then A_n to a + b log n.

    A_n is the peak height of each pair's profile; the shared width gamma is
    then fitted by least squares over the whole grid with s0 held fixed.
    Fitting A_n jointly instead lets the slow rise for small s and the
    clipped peaks near s = 1 drag the amplitudes down, which breaks the
    growth of the maxima with n. If the width fit fails the couplings fall
    back to the per-level amplitude table.
    """
    grid = np.asarray(grid, dtype=float)
    Y = np.asarray(magnitudes, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    n_pairs = Y.shape[1]
    d2 = (grid[:, None] - s0[None, :]) ** 2
    amp = peak_heights(grid, Y)

    def resid(p):
        return (amp[None, :] * np.exp(-p[0] * d2) - Y).ravel()

    half = []
    for n in range(n_pairs):
        above = grid[Y[:, n] >= 0.5 * amp[n]]
        if above.size:
            half.append(max(above.max() - s0[n], s0[n] - above.min(), 1e-3))
    gam0 = np.log(2.0) / np.mean(half) ** 2 if half else 1.0
    sol = least_squares(resid, [gam0], bounds=([0.0], [np.inf]), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    gamma = float(sol.x[0])
    R = resid(sol.x).reshape(Y.shape)
    level_rms = np.sqrt(np.mean(R**2, axis=0))
    converged = bool(sol.success) and np.isfinite(gamma) and gamma > 0

    n = np.arange(1, n_pairs)
    if n.size >= 2:
        X = np.column_stack([np.ones(n.size), np.log(n)])
        (a, b_fit), *_ = np.linalg.lstsq(X, amp[1:], rcond=None)
        log_rms = float(np.sqrt(np.mean((X @ [a, b_fit] - amp[1:]) ** 2)))
    else:
        a, b_fit, log_rms = float(amp[-1]), 0.0, 0.0

    couplings = ChainCouplings(
        CouplingVariant.FITTED, n_pairs, a=float(a), b_fit=float(b_fit), gamma=gamma,
        s0=s0.copy(), amplitudes=None if converged else amp.copy(),
    )
    return CouplingFit(couplings, amp, level_rms, R, log_rms, converged, str(sol.message))


def fit_couplings(sweep: SpectralSweep, dH: np.ndarray) -> CouplingFit:
    """Fitted Gaussian-log couplings from the sweep's exact matrix elements."""
    M = np.abs(exact_coupling_table(sweep, dH))
    return fit_gaussian_log(sweep.grid, M, peak_positions(sweep))


def matrix_element_decay(sweep: SpectralSweep, dH: np.ndarray, s, n: int, ks) -> dict:
    """|<eta_{n+k}| dH/ds |eta_n>| against level distance k, with a straight-line fit of its log."""
    M = exact_matrix_elements(sweep, dH, s)
    ks = np.asarray(ks, dtype=int)
    if np.any(ks == 0) or np.any(n + ks < 0) or np.any(n + ks >= sweep.n_levels):
        raise ConfigError("level distances must be nonzero and stay inside the spectrum")
    mags = np.abs(M[n + ks, n])
    logm = np.log(mags)
    slope, intercept = np.polyfit(ks, logm, 1)
    pred = slope * ks + intercept
    ss_res = float(np.sum((logm - pred) ** 2))
    ss_tot = float(np.sum((logm - logm.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"k": ks, "magnitude": mags, "slope": float(slope), "intercept": float(intercept), "r2": r2}


class PhaseConvention(str, enum.Enum):
    SCALED = "scaled"    # -i T e_m a_m
    LITERAL = "literal"  # -i e_m a_m, as printed without the total time


def evolve_chain(
    sweep: SpectralSweep,
    couplings: ChainCouplings,
    T: float,
    initial=None,
    phase: PhaseConvention | str = PhaseConvention.SCALED,
    gap_floor: float = 1e-6,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> PopulationTrace:
    """Integrate the nearest-neighbour amplitude equations across the sweep.

    The coupling matrix g_n / (e_{n+1} - e_n) enters antisymmetrically, so
    the exact flow conserves the norm and any drift is integrator error.
    """
    if not T > 0:
        raise ConfigError(f"T must be positive, got {T}")
    phase = PhaseConvention(phase)
    L = sweep.n_levels
    if couplings.n_pairs != L - 1:
        raise ConfigError(f"couplings describe {couplings.n_pairs} pairs, sweep has {L - 1}")
    if initial is None:
        a0 = np.zeros(L, dtype=complex)
        a0[0] = 1.0
    else:
        a0 = np.asarray(initial, dtype=complex)
        if a0.shape != (L,) or abs(np.linalg.norm(a0) - 1.0) > 1e-10:
            raise ConfigError(f"initial amplitudes must be a normalized vector of length {L}")

    grid = sweep.grid
    gaps = np.maximum(sweep.gaps, gap_floor)
    K = couplings.table(grid) / gaps
    scale = T if phase is PhaseConvention.SCALED else 1.0
    # a common energy shift only changes the global phase
    E = scale * (sweep.energies - sweep.energies.mean(axis=1, keepdims=True))

    def rhs(s, a):
        k = min(int(np.searchsorted(grid, s, side="right")) - 1, grid.size - 2)
        u = (s - grid[k]) / (grid[k + 1] - grid[k])
        kk = (1.0 - u) * K[k] + u * K[k + 1]
        e = (1.0 - u) * E[k] + u * E[k + 1]
        d = -1j * e * a
        d[:-1] -= kk * a[1:]
        d[1:] += kk * a[:-1]
        return d

    A = integrate_rk4(rhs, a0, grid, rtol=rtol, atol=atol)
    P = np.abs(A) ** 2
    norms = P.sum(axis=1)
    meta = {
        "N": sweep.N,
        "T": float(T),
        "variant": couplings.variant.value,
        "phase": phase.value,
        "gap_floor": gap_floor,
        "direction": sweep.direction.value,
        "sector": sweep.sector.value,
        "norm_drift": float(np.max(np.abs(norms - 1.0))),
    }
    return PopulationTrace(grid, P, _TAGS[couplings.variant], meta)
