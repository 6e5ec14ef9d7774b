import numpy as np
import pytest


def taylor_expm(mat: np.ndarray, terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling and squaring a truncated Taylor series.

    Kept independent of scipy so it can serve as an oracle for the pair-rotation kernel.
    """
    norm = np.linalg.norm(mat, 1)
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0 else 0
    scaled = mat / (2**squarings)
    out = np.eye(len(mat), dtype=complex)
    term = np.eye(len(mat), dtype=complex)
    for k in range(1, terms):
        term = term @ scaled / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def random_state(n_qubits, rng, real=False):
    v = rng.standard_normal(1 << n_qubits)
    if not real:
        v = v + 1j * rng.standard_normal(1 << n_qubits)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def ground16():
    """Exact ground state at 16 sites, ag = 1, m0 = 0 (shared by several modules)."""
    from sc2adapt.schwinger import LatticeParams, build_hamiltonian
    from sc2adapt.surrogate import ground_state

    H = build_hamiltonian(LatticeParams(16, 1.0, 1.0, 0.0))
    return H, ground_state(H)


ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for the acceptance summary."""
    def _report(number, name, ok, detail=""):
        line = f"criterion {number} [{name}]: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        request.config.stash[ACCEPTANCE_KEY].append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
