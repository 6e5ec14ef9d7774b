"""
Grow a circuit once, then reuse it on smaller lattices
======================================================

ADAPT builds the circuit at the largest volume.  The same operator sequence
is then re-optimized on every smaller volume, starting from the angles of the
next larger one.
"""

from sc2adapt import (AdaptConfig, AnsatzCircuit, LatticeParams, adapt_run, apply_ansatz,
                      build_hamiltonian, chiral_condensate, expectation, generate_full_pool,
                      vqe_optimize)
from sc2adapt.ansatz import OptimizationError
from sc2adapt.surrogate import ground_state, score_pool, truncate_pool

ag, top = 1.0, 12
H = build_hamiltonian(LatticeParams(top, 1.0, ag))
pool, min_volume = truncate_pool(score_pool(generate_full_pool(top), ground_state(H).state, top), 1e-5)
print("truncated pool:", " ".join(map(str, pool)), "| min volume", min_volume)

circuit, angles, history = adapt_run(H, pool, AdaptConfig(epsilon=1e-3))
print(f"ADAPT depth {len(circuit)}, final max gradient {history.final_max_gradient:.2e}")
for k, step in enumerate(history.steps, 1):
    print(f"  {k:2d}  {str(step.label):7s}  |g|={step.max_gradient:.3e}  E={step.energy:.8f}")

# top-down sweep
print(f"{'N':>3s} {'theta_1':>9s} {'E':>12s} {'E_exact':>12s} {'cond/g':>9s}")
for n in range(top, min_volume - 1, -2):
    Hn = build_hamiltonian(LatticeParams(n, 1.0, ag))
    if n != top:
        circ_n = AnsatzCircuit(circuit.entries, n)
        try:
            angles, _, _ = vqe_optimize(circ_n, angles, Hn)
        except OptimizationError as exc:
            # the line search stalled just above the gradient tolerance; keep its best point
            angles = exc.angles
    circ_n = AnsatzCircuit(circuit.entries, n).with_angles(angles)
    psi = apply_ansatz(circ_n)
    exact = ground_state(Hn)
    print(f"{n:3d} {angles[0]:9.5f} {expectation(Hn, psi):12.6f} {exact.energy:12.6f} "
          f"{chiral_condensate(psi) / ag:9.5f}")
