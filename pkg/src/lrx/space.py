"""The two searchable spaces: the full LRX Cayley graph of S_n and the
Schreier coset graph on balanced binary strings."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .perm import MOVES, Codec, Move, apply_move, as_perm, format_perm, hash_batch, parse_perm

FULL = "full"
COSET = "coset"


@dataclass(frozen=True)
class GraphSpec:
    kind: str = FULL
    n: int = 4
    x_trick: bool = False

    def __post_init__(self):
        if self.kind not in (FULL, COSET):
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.kind == FULL and self.n < 2:
            raise ValueError("full Cayley graph needs n >= 2")
        if self.kind == COSET and (self.n % 2 or self.n < 4):
            raise ValueError("coset graph needs even n >= 4")

    @property
    def is_coset(self) -> bool:
        return self.kind == COSET

    def identity(self) -> tuple:
        """Reference state: ``e`` or ``0^m 1^m``."""
        if self.is_coset:
            m = self.n // 2
            return (0,) * m + (1,) * m
        return tuple(range(self.n))

    def codec(self) -> Codec:
        return Codec(self.n, 1 if self.is_coset else 4)

    def packable(self) -> bool:
        return self.n <= (64 if self.is_coset else 16)

    def validate(self, state: Sequence[int]) -> tuple:
        if len(state) != self.n:
            raise ValueError(f"state has length {len(state)}, expected {self.n}")
        if self.is_coset:
            s = tuple(int(b) for b in state)
            if set(s) - {0, 1} or sum(s) != self.n // 2:
                raise ValueError(f"not a balanced binary string: {s}")
            return s
        return as_perm(state)

    def keys(self, states: np.ndarray) -> np.ndarray:
        """Exact packed codes when they fit in 64 bits, else a 64-bit hash."""
        if self.packable():
            return self.codec().encode(states)
        return hash_batch(states)

    def parse(self, text: str) -> tuple:
        if self.is_coset:
            return self.validate(tuple(int(ch) for ch in text.strip()))
        return self.validate(parse_perm(text))

    def format(self, state: Sequence[int]) -> str:
        if self.is_coset:
            return "".join(str(int(b)) for b in state)
        return format_perm(state)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GraphSpec":
        return cls(kind=d["kind"], n=int(d["n"]), x_trick=bool(d.get("x_trick", False)))


def x_pruned(state: Sequence[int], spec: GraphSpec) -> bool:
    """True when the X-trick drops the X move at ``state``."""
    if not spec.x_trick:
        return False
    if spec.is_coset:
        return state[0] <= state[1]
    return state[0] < state[1]


def neighbors(state: Sequence[int], spec: GraphSpec) -> list:
    """``[(move, next_state), ...]`` in fixed (L, R, X) order."""
    out = []
    for g in MOVES:
        if g is Move.X and x_pruned(state, spec):
            continue
        out.append((g, apply_move(state, g)))
    return out


def batch_x_mask(states: np.ndarray, spec: GraphSpec) -> np.ndarray:
    """Boolean mask of rows where X is allowed."""
    if not spec.x_trick:
        return np.ones(states.shape[0], dtype=bool)
    return states[:, 0] > states[:, 1]


def longest_element(n: int) -> tuple:
    """``(1, 0, n-1, n-2, ..., 2)``, i.e. ``i -> (1 - i) mod n``."""
    if n < 3:
        raise ValueError("longest element defined for n >= 3")
    return tuple((1 - i) % n for i in range(n))


def dihedral_long_elements(n: int) -> list:
    """The ``n`` reflections ``r_k[i] = (k - i) mod n``, indexed by ``k``."""
    if n < 3:
        raise ValueError("dihedral elements defined for n >= 3")
    return [tuple((k - i) % n for i in range(n)) for k in range(n)]


def coset_project(p: Sequence[int]) -> tuple:
    """Threshold a permutation to a balanced string: bit = 1 iff ``p[i] >= n/2``."""
    n = len(p)
    if n % 2:
        raise ValueError("coset projection needs even n")
    half = n // 2
    return tuple(1 if v >= half else 0 for v in p)


def coset_long_element(n: int) -> tuple:
    """``1^{n0} 0^{n1} 1^{n2} 0^{n3}`` with ``n_i = floor((n + i) / 4)``."""
    if n % 2 or n < 4:
        raise ValueError("coset long element needs even n >= 4")
    n0, n1, n2, n3 = ((n + i) // 4 for i in range(4))
    return (1,) * n0 + (0,) * n1 + (1,) * n2 + (0,) * n3
