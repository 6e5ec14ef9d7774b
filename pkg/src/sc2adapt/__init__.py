"""Surrogate-scored scalable-circuit ADAPT-VQE for the lattice Schwinger model."""

__version__ = "0.1.0"

from .pauli import (MesonGenerator, PauliString, PauliTermSum, apply_generator_exponential,
                    apply_sum, expectation)
from .schwinger import (CONTINUUM_CONDENSATE, LatticeParams, build_hamiltonian,
                        chiral_condensate, reference_state)
from .pool import PoolConfig, PoolLabel, generate_full_pool, instantiate, min_volume
from .surrogate import PoolScore, SurrogateResult, ground_state, overlap_score, truncate_pool
from .ansatz import (AdaptConfig, AdaptHistory, AnsatzCircuit, adapt_run, apply_ansatz,
                     energy_and_gradient, pool_gradients, vqe_optimize)
from .extrapolation import FitResult, SeriesPoint, fit_continuum, fit_thermodynamic

__all__ = [
    "AdaptConfig", "AdaptHistory", "AnsatzCircuit", "CONTINUUM_CONDENSATE", "FitResult",
    "LatticeParams", "MesonGenerator", "PauliString", "PauliTermSum", "PoolConfig", "PoolLabel",
    "PoolScore", "SeriesPoint", "SurrogateResult", "adapt_run", "apply_ansatz",
    "apply_generator_exponential", "apply_sum", "build_hamiltonian", "chiral_condensate",
    "energy_and_gradient", "expectation", "fit_continuum", "fit_thermodynamic",
    "generate_full_pool", "ground_state", "instantiate", "min_volume", "overlap_score",
    "pool_gradients", "reference_state", "truncate_pool", "vqe_optimize",
]
