"""Volume-independent meson-insertion operator pool.

A pool operator is identified by a :class:`PoolLabel` that does not mention
the lattice size; :func:`instantiate` turns it into concrete generators on a
given number of sites.

* ``V(d)``: ``sum_n (-1)^n O_n^(d)`` over every admissible ``n`` (bulk).
* ``S(m,d)``: ``O_m^(d) + O_{N-m-1-d}^(d)``, a mirror pair at distance ``m``
  from the open boundaries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

from .pauli import MesonGenerator, PauliTermSum

VOLUME = "V"
SURFACE = "S"

_LABEL_RE = re.compile(r"^\s*([VS])\(\s*(\d+)\s*(?:,\s*(\d+)\s*)?\)\s*$")


@total_ordering
@dataclass(frozen=True)
class PoolLabel:
    kind: str
    span: int
    offset: int | None = None

    def __post_init__(self):
        if self.kind not in (VOLUME, SURFACE):
            raise ValueError(f"unknown pool operator kind {self.kind!r}")
        if self.span < 1:
            raise ValueError("span must be at least 1")
        if self.kind == VOLUME and self.offset is not None:
            raise ValueError("volume operators carry no boundary offset")
        if self.kind == SURFACE and (self.offset is None or self.offset < 0):
            raise ValueError("surface operators need a non-negative boundary offset")

    @classmethod
    def volume(cls, d: int) -> "PoolLabel":
        return cls(VOLUME, d)

    @classmethod
    def surface(cls, m: int, d: int) -> "PoolLabel":
        return cls(SURFACE, d, m)

    @classmethod
    def parse(cls, text: str) -> "PoolLabel":
        """Inverse of ``str``: ``"V(3)"`` or ``"S(1,5)"``."""
        match = _LABEL_RE.match(text)
        if not match:
            raise ValueError(f"cannot parse pool label {text!r}")
        kind, first, second = match.groups()
        if kind == VOLUME:
            if second is not None:
                raise ValueError(f"volume label takes one argument: {text!r}")
            return cls.volume(int(first))
        if second is None:
            raise ValueError(f"surface label takes two arguments: {text!r}")
        return cls.surface(int(first), int(second))

    def sort_key(self):
        # volume labels first by span, then surface labels by (offset, span)
        if self.kind == VOLUME:
            return (0, self.span, 0)
        return (1, self.offset, self.span)

    def __lt__(self, other):
        if not isinstance(other, PoolLabel):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def __str__(self):
        if self.kind == VOLUME:
            return f"V({self.span})"
        return f"S({self.offset},{self.span})"


@dataclass(frozen=True)
class PoolConfig:
    odd_d_only: bool = True
    max_surface_offset: int = 1
    include_surface: bool = True

    def __post_init__(self):
        if self.max_surface_offset < 0:
            raise ValueError("max_surface_offset must be non-negative")


def _even_at_least(n: int) -> int:
    return n + (n % 2)


def min_volume(label: PoolLabel) -> int:
    """Smallest even lattice on which ``label`` can be instantiated."""
    if label.kind == VOLUME:
        return max(2, _even_at_least(label.span + 1))
    # mirror partner at N - m - 1 - d must not sit left of m
    return max(2, _even_at_least(2 * label.offset + label.span + 1))


def pool_min_volume(labels) -> int:
    labels = list(labels)
    if not labels:
        raise ValueError("empty pool has no minimum volume")
    return max(min_volume(lab) for lab in labels)


def generate_full_pool(sites: int, config: PoolConfig | None = None) -> list[PoolLabel]:
    """Every label defined at ``sites``, in the deterministic pool order."""
    config = config or PoolConfig()
    if sites < 2 or sites % 2:
        raise ValueError(f"pool needs an even number of sites >= 2, got {sites}")
    spans = [d for d in range(1, sites) if d % 2 == 1 or not config.odd_d_only]
    labels = [PoolLabel.volume(d) for d in spans]
    if config.include_surface:
        for m in range(config.max_surface_offset + 1):
            for d in spans:
                lab = PoolLabel.surface(m, d)
                if min_volume(lab) <= sites:
                    labels.append(lab)
    return sorted(labels)


def instantiate(label: PoolLabel, sites: int) -> list[MesonGenerator]:
    """Concrete signed generators for ``label`` on ``sites`` sites, in ascending site order."""
    need = min_volume(label)
    if sites < need or sites % 2:
        raise ValueError(f"{label} is undefined on {sites} sites (min_volume = {need})")
    d = label.span
    if label.kind == VOLUME:
        return [
            MesonGenerator(n, d, 1.0 if n % 2 == 0 else -1.0, sites)
            for n in range(sites - d)
        ]
    left, right = label.offset, sites - label.offset - 1 - d
    if left == right:
        return [MesonGenerator(left, d, 1.0, sites)]
    return [MesonGenerator(left, d, 1.0, sites), MesonGenerator(right, d, 1.0, sites)]


def pool_operator(label: PoolLabel, sites: int) -> PauliTermSum:
    """The pool operator as a real-weighted Pauli sum (untrotterized)."""
    out = PauliTermSum(sites)
    for gen in instantiate(label, sites):
        out = out + gen.to_pauli()
    return out
