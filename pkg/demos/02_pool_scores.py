"""
Scoring the operator pool with a classical surrogate
====================================================

Each pool operator gets a score |<ref|O|psi_sur>|^2 from the exact ground
state at 12 sites.  The cutoff delta keeps the operators whose score ratio is
at least delta, and the kept pool fixes the smallest volume the circuit can
live on.
"""

from sc2adapt import LatticeParams, build_hamiltonian, generate_full_pool
from sc2adapt.surrogate import ground_state, score_pool, truncate_pool

N = 12
H = build_hamiltonian(LatticeParams(N, 1.0, 1.0))
sur = ground_state(H)
pool = generate_full_pool(N)
scores = sorted(score_pool(pool, sur.state, N), key=lambda s: -s.ratio)

print(f"{'label':8s} {'overlap':>12s} {'ratio':>10s}")
for s in scores:
    print(f"{str(s.label):8s} {s.overlap:12.3e} {s.ratio:10.2e}")

# Heavier cuts give smaller pools that fit on smaller lattices.
for delta in (0.0, 1e-5, 1e-3, 1e-2):
    kept, min_volume = truncate_pool(scores, delta)
    print(f"delta={delta:g}: {len(kept)} operators, min volume {min_volume}")
