"""Classical surrogate ground state and transition-matrix-element pool scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from .pauli import PauliTermSum, apply_sum
from .pool import PoolLabel, pool_min_volume, pool_operator
from .schwinger import reference_state


class ConvergenceError(RuntimeError):
    def __init__(self, message, best_residual=np.inf, energy=np.nan):
        super().__init__(message)
        self.best_residual = best_residual
        self.energy = energy


@dataclass
class SurrogateResult:
    energy: float
    state: np.ndarray
    residual: float
    iterations: int


@dataclass(frozen=True)
class PoolScore:
    label: PoolLabel
    overlap: float
    ratio: float


def ground_state(H: PauliTermSum, tol: float = 1e-10, max_iter: int = 500,
                 start: np.ndarray | None = None, seed: int = 0,
                 krylov_dim: int = 40) -> SurrogateResult:
    """Lowest eigenpair of ``H`` by implicitly restarted Lanczos (ARPACK).

    The default start vector is the strong-coupling reference state.  The
    Hamiltonian conserves charge, so the search stays in the reference's
    sector.  ``max_iter`` caps the number of restarts and ``krylov_dim`` is
    the Krylov basis size.  The returned residual is ``|H v - E v|``.
    """
    n = H.qubit_count
    dim = 1 << n
    if start is None:
        if n % 2 == 0:
            start = reference_state(n)
        else:
            start = np.random.default_rng(seed).standard_normal(dim)
    v0 = np.asarray(start, dtype=float)
    if np.iscomplexobj(start) and np.any(np.imag(start)):
        raise ValueError("start vector must be real")
    v0 = v0 / np.linalg.norm(v0)

    if dim <= 2:
        evals, evecs = np.linalg.eigh(H.to_dense().real)
        energy, v = float(evals[0]), evecs[:, 0]
        return SurrogateResult(energy, v, float(np.linalg.norm(apply_sum(H, v) - energy * v)), 1)

    products = 0

    def matvec(x):
        nonlocal products
        products += 1
        return np.real(apply_sum(H, x.ravel()))

    op = LinearOperator((dim, dim), matvec=matvec, dtype=float)
    # ARPACK's tolerance is relative to |E|; bound |E| by the weight norm
    scale = 1.0 + sum(abs(t.coefficient) for t in H.terms)
    try:
        evals, evecs = eigsh(op, k=1, which="SA", v0=v0, tol=0.1 * tol / scale,
                             ncv=min(krylov_dim, dim - 1), maxiter=max_iter)
    except ArpackNoConvergence as exc:
        # fall back to the start vector when ARPACK has no converged Ritz pair
        if len(exc.eigenvalues):
            energy, v = float(exc.eigenvalues[0]), exc.eigenvectors[:, 0]
        else:
            v = v0
            energy = float(np.real(np.vdot(v, apply_sum(H, v))))
        best = float(np.linalg.norm(apply_sum(H, v) - energy * v))
        raise ConvergenceError(f"Lanczos did not converge in {max_iter} restarts "
                               f"(best residual {best:.2e})", best, energy) from exc
    energy = float(evals[0])
    v = evecs[:, 0] / np.linalg.norm(evecs[:, 0])
    resid = float(np.linalg.norm(apply_sum(H, v) - energy * v))
    if not resid < tol:
        raise ConvergenceError(f"Lanczos residual {resid:.2e} above tolerance {tol:.1e}",
                               resid, energy)
    return SurrogateResult(energy, v, resid, products)


def overlap_score(label: PoolLabel, surrogate_state: np.ndarray, ref_state: np.ndarray,
                  sites: int) -> float:
    """``|<ref| O_label |sur>|^2`` with the untrotterized pool operator."""
    op = pool_operator(label, sites)
    return float(abs(np.vdot(ref_state, apply_sum(op, surrogate_state))) ** 2)


def score_pool(labels, surrogate_state: np.ndarray, sites: int,
               ref_state: np.ndarray | None = None) -> list[PoolScore]:
    if ref_state is None:
        ref_state = reference_state(sites)
    overlaps = [overlap_score(lab, surrogate_state, ref_state, sites) for lab in labels]
    return make_scores(labels, overlaps)


def make_scores(labels, overlaps) -> list[PoolScore]:
    """Attach ``ratio = overlap / max(overlap)`` to each label."""
    overlaps = np.abs(np.asarray(overlaps, dtype=float))
    top = overlaps.max() if len(overlaps) else 0.0
    if not top > 0:
        raise ValueError(
            "every pool score is zero; the surrogate state has no overlap with any excitation"
        )
    return [PoolScore(lab, float(o), float(o / top)) for lab, o in zip(labels, overlaps)]


def truncate_pool(scores: list[PoolScore], delta: float) -> tuple[list[PoolLabel], int]:
    """Keep labels with ``ratio >= delta``; return them with the pool's minimum volume."""
    if not scores:
        raise ValueError("no scores to truncate")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    ratios = make_scores([s.label for s in scores], [s.overlap for s in scores])
    kept = sorted(s.label for s in ratios if s.ratio >= delta)
    return kept, pool_min_volume(kept)
