"""Driven dynamics of the Lipkin-Meshkov-Glick model across its phase transition.

Three descriptions of the level populations during a linear sweep are
provided: exact Schrödinger evolution, a nearest-neighbour classical rate
equation, and a nearest-neighbour quantum chain of instantaneous levels.
"""

__version__ = "0.1.0"

from .cgc import cgc_crossing, cgc_invert, cgc_x
from .chain import (
    ChainCouplings,
    CouplingVariant,
    constant_couplings,
    evolve_chain,
    exact_couplings,
    exact_matrix_elements,
    fit_couplings,
    matrix_element_decay,
)
from .core import (
    ConfigError,
    Direction,
    NumericalError,
    Schedule,
    Sector,
    SpinSystem,
    build_spin_system,
    d_hamiltonian_ds,
    hamiltonian,
)
from .dynamics import InitialState, evolve_full, ground_state, project_populations, propagate_interval
from .rate import RateForm, RateParams, evolve_rate, transition_rates
from .spectral import SpectralSnapshot, SpectralSweep, diagonalize, gap, integrated_dos, min_gap_location, sweep
from .traces import ModelTag, PopulationTrace, compare_traces, tvd

__all__ = [
    "ChainCouplings", "ConfigError", "CouplingVariant", "Direction", "InitialState", "ModelTag",
    "NumericalError", "PopulationTrace", "RateForm", "RateParams", "Schedule", "Sector",
    "SpectralSnapshot", "SpectralSweep", "SpinSystem", "build_spin_system", "cgc_crossing",
    "cgc_invert", "cgc_x", "compare_traces", "constant_couplings", "d_hamiltonian_ds",
    "diagonalize", "evolve_chain", "evolve_full", "evolve_rate", "exact_couplings",
    "exact_matrix_elements", "fit_couplings", "gap", "ground_state", "hamiltonian",
    "integrated_dos", "matrix_element_decay", "min_gap_location", "project_populations",
    "propagate_interval", "sweep", "transition_rates", "tvd",
]
