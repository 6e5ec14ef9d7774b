"""ADAPT-VQE loop and fixed-ansatz VQE with adjoint-method gradients.

Each pool operator in a circuit is applied as one first-order Trotter step:
its signed meson generators are exponentiated one at a time in ascending
site order, all sharing the entry's angle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .pauli import DimensionError, PauliTermSum, apply_sum, generator_overlap, rotate_pairs_inplace
from .pool import PoolLabel, instantiate, min_volume, pool_min_volume
from .schwinger import reference_state

log = logging.getLogger(__name__)

TROTTER_ORDER = "ascending-site, first order"


class OptimizationError(RuntimeError):
    """The line search gave up before the gradient tolerance was met.

    ``angles``/``energy``/``max_gradient`` hold the best point reached.
    """

    def __init__(self, message, angles, energy, max_gradient, iterations):
        super().__init__(message)
        self.angles = angles
        self.energy = energy
        self.max_gradient = max_gradient
        self.iterations = iterations


class StallError(RuntimeError):
    """ADAPT re-selected an operator that the last optimization could not move."""


@dataclass
class AnsatzCircuit:
    entries: list[tuple[PoolLabel, float]] = field(default_factory=list)
    sites: int = 2
    pool_id: str = ""

    @property
    def labels(self) -> list[PoolLabel]:
        return [lab for lab, _ in self.entries]

    @property
    def angles(self) -> np.ndarray:
        return np.array([theta for _, theta in self.entries], dtype=float)

    def __len__(self):
        return len(self.entries)

    def min_volume(self) -> int:
        return pool_min_volume(self.labels) if self.entries else 2

    def with_angles(self, angles, sites: int | None = None) -> "AnsatzCircuit":
        angles = np.asarray(angles, dtype=float)
        if len(angles) != len(self.entries):
            raise ValueError("angle count does not match circuit depth")
        return AnsatzCircuit(
            [(lab, float(t)) for lab, t in zip(self.labels, angles)],
            self.sites if sites is None else sites,
            self.pool_id,
        )

    def to_list(self) -> list[list]:
        return [[str(lab), float(theta)] for lab, theta in self.entries]

    @classmethod
    def from_list(cls, items, sites: int, pool_id: str = "") -> "AnsatzCircuit":
        return cls([(PoolLabel.parse(s), float(t)) for s, t in items], sites, pool_id)


@dataclass(frozen=True)
class AdaptConfig:
    epsilon: float = 1e-3
    max_depth: int = 100
    optimizer_tol: float = 1e-8
    tie_tolerance: float = 1e-12
    max_optimizer_iter: int = 5000

    def __post_init__(self):
        if not self.optimizer_tol < self.epsilon:
            raise ValueError("optimizer_tol must be smaller than epsilon")


@dataclass
class AdaptStep:
    label: PoolLabel
    max_gradient: float
    energy: float
    angles: list[float]
    optimizer_iterations: int = 0
    optimizer_warning: str | None = None

    def to_dict(self):
        return {
            "label": str(self.label),
            "max_gradient": self.max_gradient,
            "energy": self.energy,
            "angles": list(self.angles),
            "optimizer_iterations": self.optimizer_iterations,
            "optimizer_warning": self.optimizer_warning,
        }


@dataclass
class AdaptHistory:
    initial_energy: float
    steps: list[AdaptStep] = field(default_factory=list)
    final_max_gradient: float = float("nan")
    converged: bool = False
    truncated: bool = False

    @property
    def energies(self) -> list[float]:
        return [self.initial_energy] + [s.energy for s in self.steps]

    @property
    def selections(self) -> list[PoolLabel]:
        return [s.label for s in self.steps]

    def to_dict(self):
        return {
            "initial_energy": self.initial_energy,
            "steps": [s.to_dict() for s in self.steps],
            "final_max_gradient": self.final_max_gradient,
            "converged": self.converged,
            "truncated": self.truncated,
        }


@lru_cache(maxsize=4096)
def _label_factors(label: PoolLabel, sites: int) -> tuple[tuple[int, int, float], ...]:
    return tuple((g.site, g.span, g.sign) for g in instantiate(label, sites))


def _check(labels, angles, state, sites):
    if len(angles) != len(labels):
        raise ValueError(f"{len(angles)} angles for {len(labels)} circuit entries")
    if state.shape != (1 << sites,):
        raise DimensionError(f"state does not live on {sites} sites")
    for lab in labels:
        if min_volume(lab) > sites:
            raise ValueError(f"{lab} is undefined on {sites} sites (min_volume = {min_volume(lab)})")


def _initial_state(sites, state):
    if state is None:
        return reference_state(sites)
    return np.asarray(state)


def _forward(labels, angles, psi, sites):
    for lab, theta in zip(labels, angles):
        for n, d, s in _label_factors(lab, sites):
            rotate_pairs_inplace(psi, sites, n, d, s * theta)
    return psi


def apply_ansatz(circuit: AnsatzCircuit, angles=None, state=None) -> np.ndarray:
    """Return ``U(angles) |state>``; ``state`` defaults to the reference state."""
    angles = circuit.angles if angles is None else np.asarray(angles, dtype=float)
    psi = _initial_state(circuit.sites, state)
    _check(circuit.labels, angles, psi, circuit.sites)
    psi = psi.astype(np.result_type(psi.dtype, np.float64), copy=True)
    return _forward(circuit.labels, angles, psi, circuit.sites)


def energy_and_gradient(circuit: AnsatzCircuit, angles, H: PauliTermSum, state=None):
    """Energy and its exact gradient by one forward and one backward sweep."""
    angles = np.asarray(angles, dtype=float)
    sites = circuit.sites
    labels = circuit.labels
    psi = apply_ansatz(circuit, angles, state)
    hpsi = apply_sum(H, psi)
    energy = float(np.real(np.vdot(psi, hpsi)))
    lam = hpsi
    grad = np.zeros(len(angles))
    for j in range(len(labels) - 1, -1, -1):
        theta = angles[j]
        acc = 0.0
        for n, d, s in reversed(_label_factors(labels[j], sites)):
            acc += s * np.real(generator_overlap(lam, psi, sites, n, d))
            rotate_pairs_inplace(psi, sites, n, d, -s * theta)
            rotate_pairs_inplace(lam, sites, n, d, -s * theta)
        grad[j] = 2.0 * acc
    return energy, grad


def _candidate_gradients(psi, hpsi, pool, sites):
    cache = {}
    out = []
    for lab in pool:
        g = 0.0
        for n, d, s in _label_factors(lab, sites):
            if (n, d) not in cache:
                cache[n, d] = float(np.real(generator_overlap(hpsi, psi, sites, n, d)))
            g += s * cache[n, d]
        out.append((lab, 2.0 * g))
    return out


def pool_gradients(circuit: AnsatzCircuit, angles, H: PauliTermSum, pool, state=None):
    """``dE/dtheta`` of each candidate appended at zero angle, i.e. ``<psi| i[H, O] |psi>``."""
    psi = apply_ansatz(circuit, angles, state)
    for lab in pool:
        if min_volume(lab) > circuit.sites:
            raise ValueError(f"{lab} is undefined on {circuit.sites} sites")
    return _candidate_gradients(psi, apply_sum(H, psi), list(pool), circuit.sites)


def vqe_optimize(circuit: AnsatzCircuit, initial_angles, H: PauliTermSum,
                 config: AdaptConfig | None = None, state=None):
    """Minimize the energy over the circuit angles with BFGS and analytic gradients.

    Returns ``(angles, energy, iterations)``.  Raises :class:`OptimizationError`
    carrying the best point if the line search stalls above ``optimizer_tol``.
    """
    config = config or AdaptConfig()
    x0 = np.asarray(initial_angles, dtype=float)
    if len(x0) == 0:
        psi = apply_ansatz(circuit, x0, state)
        return x0, float(np.real(np.vdot(psi, apply_sum(H, psi)))), 0

    def fun(x):
        return energy_and_gradient(circuit, x, H, state)

    res = minimize(fun, x0, jac=True, method="BFGS",
                   options={"gtol": config.optimizer_tol, "maxiter": config.max_optimizer_iter})
    gmax = float(np.max(np.abs(res.jac)))
    if gmax >= config.optimizer_tol:
        raise OptimizationError(
            f"optimizer stopped with max |grad| = {gmax:.2e}: {res.message}",
            res.x, float(res.fun), gmax, int(res.nit),
        )
    return res.x, float(res.fun), int(res.nit)


def adapt_run(H: PauliTermSum, pool, config: AdaptConfig | None = None, state=None,
              pool_id: str = ""):
    """Grow an ansatz greedily from ``pool`` until every gradient is below epsilon.

    Returns ``(circuit, angles, history)``.  Line-search failures are accepted
    at the best point reached and noted on the step.
    """
    config = config or AdaptConfig()
    sites = H.qubit_count
    pool = sorted(pool)
    if not pool:
        raise ValueError("ADAPT needs a non-empty pool")
    for lab in pool:
        if min_volume(lab) > sites:
            raise ValueError(f"{lab} is undefined on {sites} sites")

    circuit = AnsatzCircuit([], sites, pool_id)
    angles = np.zeros(0)
    psi = apply_ansatz(circuit, angles, state)
    history = AdaptHistory(initial_energy=float(np.real(np.vdot(psi, apply_sum(H, psi)))))
    last_move = np.inf

    while True:
        grads = pool_gradients(circuit, angles, H, pool, state)
        mags = np.abs([g for _, g in grads])
        gmax = float(mags.max())
        history.final_max_gradient = gmax
        if gmax < config.epsilon:
            history.converged = True
            break
        if len(circuit) >= config.max_depth:
            history.truncated = True
            log.warning("ADAPT depth cap %d reached with max gradient %.2e", config.max_depth, gmax)
            break
        pick = pool[int(np.flatnonzero(mags >= gmax - config.tie_tolerance)[0])]
        if circuit.entries and pick == circuit.labels[-1] and last_move < config.tie_tolerance:
            raise StallError(f"{pick} re-selected after an optimization that did not move")

        previous = np.append(angles, 0.0)
        circuit = AnsatzCircuit(circuit.entries + [(pick, 0.0)], sites, pool_id)
        warning = None
        try:
            angles, energy, nit = vqe_optimize(circuit, previous, H, config, state)
        except OptimizationError as exc:
            angles, energy, nit = exc.angles, exc.energy, exc.iterations
            warning = str(exc)
            log.info("accepting partial optimization at depth %d: %s", len(circuit), exc)
        last_move = float(np.max(np.abs(angles - previous)))
        circuit = circuit.with_angles(angles)
        history.steps.append(AdaptStep(pick, gmax, energy, [float(t) for t in angles], nit, warning))
        log.debug("depth %d: %s |g|=%.3e E=%.12f", len(circuit), pick, gmax, energy)

    return circuit, np.asarray(angles, dtype=float), history
