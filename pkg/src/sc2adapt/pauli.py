"""Matrix-free Pauli-string algebra and statevector kernels.

States are plain 1-D numpy arrays of length ``2**n_qubits``.  Bit ``q`` of a
basis index holds the state of qubit (site) ``q``, so site 0 is the least
significant bit.  The spin convention is ``Z|0> = +|0>`` and ``Z|1> = -|1>``.

Ladder operators follow ``sigma^+ = (X - iY)/2 = |1><0|`` and
``sigma^- = (X + iY)/2 = |0><1|``; anything built from them is expanded into
real-weighted Pauli words before it is stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numpy fallback
    numba = None

PAULI_SYMBOLS = "IXYZ"

#: Tolerance for imaginary residues of expectation values of Hermitian sums.
HERMITICITY_TOL = 1e-12


class DimensionError(ValueError):
    """Operator and state live on different numbers of qubits."""


class HermiticityError(RuntimeError):
    """An expectation value picked up an imaginary part it should not have."""


@dataclass(frozen=True)
class PauliString:
    """A single Pauli word with a real weight.

    ``axes[q]`` is the symbol acting on qubit ``q``.
    """

    axes: str
    coefficient: float = 1.0

    def __post_init__(self):
        if any(c not in PAULI_SYMBOLS for c in self.axes):
            raise ValueError(f"invalid Pauli word {self.axes!r}")
        if not np.isfinite(self.coefficient):
            raise ValueError("Pauli coefficient must be finite")

    @property
    def qubit_count(self) -> int:
        return len(self.axes)

    def masks(self) -> tuple[int, int, int]:
        """Return ``(flip_mask, phase_mask, n_y)`` for bitwise application."""
        flip = phase = 0
        n_y = 0
        for q, c in enumerate(self.axes):
            if c in "XY":
                flip |= 1 << q
            if c in "YZ":
                phase |= 1 << q
            if c == "Y":
                n_y += 1
        return flip, phase, n_y


def pauli_word(qubit_count: int, ops: Mapping[int, str]) -> str:
    """Build a Pauli word from a sparse ``{qubit: symbol}`` mapping."""
    word = ["I"] * qubit_count
    for q, c in ops.items():
        if not 0 <= q < qubit_count:
            raise ValueError(f"qubit {q} out of range for {qubit_count} qubits")
        word[q] = c
    return "".join(word)


class PauliTermSum:
    """Real-weighted sum of Pauli words on a fixed number of qubits.

    Terms with identical words are merged on construction, and terms whose
    weight cancels to exactly zero are dropped.  Since every weight is real,
    the sum is Hermitian by construction.  Instances are treated as immutable;
    arithmetic returns new objects.
    """

    def __init__(self, qubit_count: int, terms: Iterable[PauliString | tuple[str, float]] = ()):
        if qubit_count < 1:
            raise ValueError("qubit_count must be positive")
        self.qubit_count = int(qubit_count)
        merged: dict[str, float] = {}
        for term in terms:
            if not isinstance(term, PauliString):
                term = PauliString(*term)
            if term.qubit_count != self.qubit_count:
                raise DimensionError(
                    f"term {term.axes!r} does not act on {self.qubit_count} qubits"
                )
            merged[term.axes] = merged.get(term.axes, 0.0) + float(term.coefficient)
        self._weights = {k: v for k, v in merged.items() if v != 0.0}
        self._compiled = None

    @classmethod
    def identity(cls, qubit_count: int, weight: float = 1.0) -> "PauliTermSum":
        return cls(qubit_count, [("I" * qubit_count, weight)])

    @property
    def terms(self) -> list[PauliString]:
        return [PauliString(k, v) for k, v in sorted(self._weights.items())]

    def weights(self) -> dict[str, float]:
        return dict(self._weights)

    def __len__(self):
        return len(self._weights)

    def __repr__(self):
        return f"PauliTermSum(qubit_count={self.qubit_count}, n_terms={len(self)})"

    def __add__(self, other: "PauliTermSum") -> "PauliTermSum":
        if not isinstance(other, PauliTermSum):
            return NotImplemented
        if other.qubit_count != self.qubit_count:
            raise DimensionError("cannot add sums on different qubit counts")
        return PauliTermSum(self.qubit_count, [*self.terms, *other.terms])

    def __mul__(self, scalar: float) -> "PauliTermSum":
        scalar = float(scalar)
        return PauliTermSum(self.qubit_count, [(t.axes, scalar * t.coefficient) for t in self.terms])

    __rmul__ = __mul__

    def _compile(self):
        # Group terms by the bits they flip; each group becomes one diagonal
        # weight vector applied to a permuted copy of the state.
        if self._compiled is not None:
            return self._compiled
        dim = 1 << self.qubit_count
        idx = np.arange(dim, dtype=np.int64)
        groups: dict[int, np.ndarray] = {}
        for axes, w in self._weights.items():
            flip, phase, n_y = PauliString(axes).masks()
            # (P psi)[y] = i^{n_y} (-1)^{popcount(x & phase)} psi[x], x = y ^ flip
            sign = 1.0 - 2.0 * (np.bitwise_count((idx ^ flip) & phase) & 1)
            vec = (w * (1j**n_y)) * sign
            groups[flip] = groups.get(flip, 0) + vec
        compiled = []
        for flip in sorted(groups):
            vec = groups[flip]
            if np.all(vec.imag == 0):
                vec = np.ascontiguousarray(vec.real)
            perm = None if flip == 0 else idx ^ flip
            compiled.append((perm, vec))
        self._compiled = compiled
        return compiled

    def to_dense(self) -> np.ndarray:
        """Dense matrix built from Kronecker products (oracle use, small N only)."""
        return dense_matrix(self)


def apply_sum(op: PauliTermSum, state: np.ndarray) -> np.ndarray:
    """Return ``op @ state`` without forming a matrix.  The input is not modified."""
    state = np.asarray(state)
    if state.ndim != 1 or state.shape[0] != 1 << op.qubit_count:
        raise DimensionError(
            f"state of length {state.shape} does not match {op.qubit_count} qubits"
        )
    compiled = op._compile()
    real = not np.iscomplexobj(state) and all(not np.iscomplexobj(v) for _, v in compiled)
    out = np.zeros(state.shape, dtype=np.float64 if real else np.complex128)
    for perm, vec in compiled:
        out += vec * (state if perm is None else state[perm])
    return out


def expectation(op: PauliTermSum, state: np.ndarray) -> float:
    """Return ``Re <psi|op|psi>``; raise if the imaginary residue is not negligible."""
    value = np.vdot(state, apply_sum(op, state))
    if abs(value.imag) > HERMITICITY_TOL * max(1.0, abs(value.real)):
        raise HermiticityError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


_SINGLE = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}


def dense_pauli(axes: str) -> np.ndarray:
    """Kronecker-product matrix of one Pauli word (site 0 least significant)."""
    mat = np.ones((1, 1), dtype=complex)
    for c in axes:
        # the highest qubit is the leftmost Kronecker factor
        mat = np.kron(_SINGLE[c], mat)
    return mat


def dense_matrix(op: PauliTermSum) -> np.ndarray:
    dim = 1 << op.qubit_count
    mat = np.zeros((dim, dim), dtype=complex)
    for t in op.terms:
        mat += t.coefficient * dense_pauli(t.axes)
    return mat


# ---------------------------------------------------------------------------
# Meson generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MesonGenerator:
    """``sign * (i/2)(sigma^+_n Z...Z sigma^-_{n+d} - h.c.)`` on ``qubit_count`` qubits.

    The Z string covers the sites strictly between ``site`` and ``site + span``.
    """

    site: int
    span: int
    sign: float = 1.0
    qubit_count: int = 2

    def __post_init__(self):
        if self.span < 1 or self.site < 0 or self.site + self.span > self.qubit_count - 1:
            raise ValueError(
                f"generator (n={self.site}, d={self.span}) does not fit in {self.qubit_count} sites"
            )

    def to_pauli(self) -> PauliTermSum:
        """Expanded form ``sign/4 (Y_n Z.. X_{n+d} - X_n Z.. Y_{n+d})``."""
        n, m = self.site, self.site + self.span
        string = {q: "Z" for q in range(n + 1, m)}
        yx = pauli_word(self.qubit_count, {**string, n: "Y", m: "X"})
        xy = pauli_word(self.qubit_count, {**string, n: "X", m: "Y"})
        return PauliTermSum(self.qubit_count, [(yx, 0.25 * self.sign), (xy, -0.25 * self.sign)])


@lru_cache(maxsize=1024)
def meson_pairs(qubit_count: int, site: int, span: int):
    """Basis-state pairs coupled by the generator at ``(site, span)``.

    Returns ``(a, b, half_parity)`` where ``a`` has bit ``site`` = 0 and bit
    ``site + span`` = 1, ``b = a`` with both bits flipped, and ``half_parity``
    is ``(-1)^{#ones strictly between} / 2``.  On each pair the unsigned
    generator acts as ``i * half_parity * [[0, -1], [1, 0]]``.
    """
    n, m = site, site + span
    idx = np.arange(1 << qubit_count, dtype=np.int64)
    a = idx[((idx >> n) & 1 == 0) & ((idx >> m) & 1 == 1)]
    b = a ^ ((1 << n) | (1 << m))
    between = ((1 << m) - 1) ^ ((1 << (n + 1)) - 1)
    half_parity = 0.5 - (np.bitwise_count(a & between) & 1).astype(np.float64)
    for arr in (a, b, half_parity):
        arr.setflags(write=False)
    return a, b, half_parity


def _rotate_numpy(state, a, b, hp, c, angle):
    s = np.sin(angle * hp)
    va = state[a]
    vb = state[b]
    state[a] = c * va - s * vb
    state[b] = s * va + c * vb


def _overlap_numpy(left, right, a, b, hp):
    return np.sum(hp * (np.conj(left[b]) * right[a] - np.conj(left[a]) * right[b]))


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _rotate_kernel(state, a, b, hp, c, angle):
        s_pos = np.sin(0.5 * angle)
        for k in range(a.shape[0]):
            s = s_pos if hp[k] > 0 else -s_pos
            ia = a[k]
            ib = b[k]
            va = state[ia]
            vb = state[ib]
            state[ia] = c * va - s * vb
            state[ib] = s * va + c * vb

    @numba.njit(cache=True, nogil=True)
    def _overlap_kernel(left, right, a, b, hp):
        acc = 0.0 * left[0] * right[0]
        for k in range(a.shape[0]):
            ia = a[k]
            ib = b[k]
            acc += hp[k] * (np.conj(left[ib]) * right[ia] - np.conj(left[ia]) * right[ib])
        return acc

else:  # pragma: no cover
    _rotate_kernel = _rotate_numpy
    _overlap_kernel = _overlap_numpy


def rotate_pairs_inplace(state: np.ndarray, qubit_count: int, site: int, span: int, angle: float):
    """Apply ``exp(-i * angle * G)`` in place for the unsigned generator ``G``.

    Each coupled pair ``(a, b)`` rotates by ``phi = angle * parity / 2``:
    ``a -> cos(phi) a - sin(phi) b``, ``b -> sin(phi) a + cos(phi) b``.
    """
    a, b, hp = meson_pairs(qubit_count, site, span)
    # hp is +-1/2, so cos is shared and sin carries the parity sign
    _rotate_kernel(state, a, b, hp, np.cos(0.5 * angle), float(angle))
    return state


def generator_overlap(left: np.ndarray, right: np.ndarray, qubit_count: int, site: int, span: int):
    """Return ``<left| (-i G) |right>`` for the unsigned generator ``G``.

    ``-i G`` is a real antisymmetric matrix, so this is real whenever both
    vectors are real.
    """
    a, b, hp = meson_pairs(qubit_count, site, span)
    if left.dtype != right.dtype:
        left, right = np.asarray(left, complex), np.asarray(right, complex)
    return _overlap_kernel(left, right, a, b, hp)


def apply_generator_exponential(gen: MesonGenerator, angle: float, state: np.ndarray) -> np.ndarray:
    """Return ``exp(-i * angle * gen) |state>`` using the exact pair rotation."""
    state = np.asarray(state)
    if state.ndim != 1 or state.shape[0] != 1 << gen.qubit_count:
        raise DimensionError(
            f"state of length {state.shape} does not match {gen.qubit_count} qubits"
        )
    out = state.astype(np.result_type(state.dtype, np.float64), copy=True)
    return rotate_pairs_inplace(out, gen.qubit_count, gen.site, gen.span, gen.sign * angle)


def total_z(qubit_count: int) -> PauliTermSum:
    """Total Z magnetization; commutes with every charge-conserving operator."""
    return PauliTermSum(
        qubit_count, [(pauli_word(qubit_count, {q: "Z"}), 1.0) for q in range(qubit_count)]
    )
