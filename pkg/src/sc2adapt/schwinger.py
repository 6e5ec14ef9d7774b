"""Lattice Schwinger model with staggered fermions, in qubit form."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import PauliTermSum, expectation, pauli_word

#: Analytic continuum chiral condensate of the massless model, in units of g.
CONTINUUM_CONDENSATE = -math.exp(np.euler_gamma) / (2 * math.pi**1.5)


def stagger(j: int) -> int:
    """Shared staggering factor for the mass term, Gauss law and condensate.

    Chosen as ``-(-1)^j`` so that ``|0101...01>`` (site 0 empty under
    ``Z|0> = +|0>``) has zero electric energy, minimizes the mass term for
    ``m0 > 0`` and has condensate ``-1/2``.
    """
    return -1 if j % 2 == 0 else 1


@dataclass(frozen=True)
class LatticeParams:
    sites: int
    spacing: float = 1.0
    coupling: float = 1.0
    bare_mass: float = 0.0
    improved_mass: bool = False

    def __post_init__(self):
        if self.sites < 2 or self.sites % 2:
            raise ValueError(f"staggered fermions need an even number of sites, got {self.sites}")
        if not self.spacing > 0:
            raise ValueError("lattice spacing must be positive")
        if self.coupling < 0:
            raise ValueError("coupling must be non-negative")

    @property
    def ag(self) -> float:
        return self.spacing * self.coupling

    @property
    def mass(self) -> float:
        """Mass entering the Hamiltonian; ``m0 - a g^2 / 8`` if the improvement is on."""
        if self.improved_mass:
            return self.bare_mass - self.spacing * self.coupling**2 / 8
        return self.bare_mass


def hopping_terms(params: LatticeParams) -> PauliTermSum:
    n, a = params.sites, params.spacing
    terms = []
    for j in range(n - 1):
        for c in "XY":
            terms.append((pauli_word(n, {j: c, j + 1: c}), 1.0 / (4 * a)))
    return PauliTermSum(n, terms)


def mass_terms(params: LatticeParams) -> PauliTermSum:
    n = params.sites
    m = params.mass
    return PauliTermSum(n, [(pauli_word(n, {j: "Z"}), 0.5 * m * stagger(j)) for j in range(n)])


def electric_terms(params: LatticeParams) -> PauliTermSum:
    """``(a g^2 / 8) sum_j (sum_{k<=j} (Z_k + s_k))^2`` multiplied out.

    With ``c_j = sum_{k<=j} s_k`` each square is
    ``(j + 1 + c_j^2) I + 2 c_j sum_k Z_k + 2 sum_{k<l} Z_k Z_l``.
    """
    n = params.sites
    pref = params.spacing * params.coupling**2 / 8
    ident = "I" * n
    terms = []
    for j in range(n - 1):
        c = sum(stagger(k) for k in range(j + 1))
        terms.append((ident, pref * (j + 1 + c * c)))
        for k in range(j + 1):
            terms.append((pauli_word(n, {k: "Z"}), pref * 2 * c))
            for l in range(k + 1, j + 1):
                terms.append((pauli_word(n, {k: "Z", l: "Z"}), pref * 2))
    return PauliTermSum(n, terms)


def build_hamiltonian(params: LatticeParams) -> PauliTermSum:
    """Schwinger Hamiltonian after integrating out the gauge field (open boundaries)."""
    return hopping_terms(params) + mass_terms(params) + electric_terms(params)


def reference_state(sites: int) -> np.ndarray:
    """Strong-coupling vacuum ``|0101...01>``: site ``j`` is occupied for odd ``j``."""
    if sites < 2 or sites % 2:
        raise ValueError(f"reference state needs an even number of sites, got {sites}")
    index = sum(1 << j for j in range(1, sites, 2))
    state = np.zeros(1 << sites)
    state[index] = 1.0
    return state


def condensate_operator(sites: int) -> PauliTermSum:
    return PauliTermSum(
        sites,
        [(pauli_word(sites, {j: "Z"}), stagger(j) / (2 * sites)) for j in range(sites)],
    )


def chiral_condensate(state: np.ndarray) -> float:
    """``(1/2N) sum_j s_j <Z_j>`` in lattice units."""
    sites = int(np.log2(len(state)))
    if 1 << sites != len(state):
        raise ValueError("state length is not a power of two")
    return expectation(condensate_operator(sites), state)


def site_z_expectations(state: np.ndarray) -> np.ndarray:
    """``<Z_j>`` for every site, straight from the probabilities."""
    sites = int(np.log2(len(state)))
    prob = np.abs(state) ** 2
    idx = np.arange(len(state))
    return np.array([prob @ (1.0 - 2.0 * ((idx >> j) & 1)) for j in range(sites)])


__all__ = [
    "CONTINUUM_CONDENSATE",
    "LatticeParams",
    "build_hamiltonian",
    "chiral_condensate",
    "condensate_operator",
    "electric_terms",
    "hopping_terms",
    "mass_terms",
    "reference_state",
    "site_z_expectations",
    "stagger",
]
