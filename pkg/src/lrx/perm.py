"""Permutation states, LRX generator actions, bit packing and hashing.

A permutation is a tuple of ``n`` distinct ints in ``[0, n)`` (one-line
notation).  Moves act on positions of the one-line array:

* ``L``: ``q[i] = p[(i + 1) % n]``   (contents shift left)
* ``R``: ``q[i] = p[(i - 1) % n]``
* ``X``: swap ``p[0]`` and ``p[1]``

Every batch routine works on 2-D ``uint8`` arrays of shape ``(B, n)``; the
packed routines work on ``uint64`` codes holding 4 bits per entry with entry 0
in the lowest nibble (``n <= 16``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

Perm = tuple  # tuple[int, ...]
Word = str  # string over {"L", "R", "X"}

MASK64 = (1 << 64) - 1
NIBBLE = 4
MAX_PACKED_N = 16


class Move(str, enum.Enum):
    L = "L"
    R = "R"
    X = "X"

    @property
    def inverse(self) -> "Move":
        return {Move.L: Move.R, Move.R: Move.L, Move.X: Move.X}[self]


MOVES = (Move.L, Move.R, Move.X)


def as_perm(seq: Iterable[int]) -> Perm:
    """Validate and return ``seq`` as a permutation tuple."""
    p = tuple(int(v) for v in seq)
    if len(p) < 2:
        raise ValueError(f"permutation needs n >= 2, got {len(p)}")
    if sorted(p) != list(range(len(p))):
        raise ValueError(f"not a permutation of 0..{len(p) - 1}: {p}")
    return p


def identity(n: int) -> Perm:
    return tuple(range(n))


def parse_perm(text: str) -> Perm:
    return as_perm(int(tok) for tok in text.replace(" ", "").split(",") if tok)


def format_perm(p: Sequence[int]) -> str:
    return ",".join(str(int(v)) for v in p)


def parse_word(text: str) -> Word:
    w = text.strip().upper()
    bad = set(w) - {"L", "R", "X"}
    if bad:
        raise ValueError(f"invalid moves in word: {sorted(bad)}")
    return w


def inverse_word(w: Word) -> Word:
    return "".join(Move(c).inverse.value for c in reversed(w))


def apply_move(p: Sequence[int], g: Move | str) -> tuple:
    g = Move(g)
    if g is Move.L:
        return tuple(p[1:]) + (p[0],)
    if g is Move.R:
        return (p[-1],) + tuple(p[:-1])
    return (p[1], p[0]) + tuple(p[2:])


def apply_word(p: Sequence[int], w: Iterable[Move | str]) -> tuple:
    """Apply the moves of ``w`` left to right.

    Rotations only move a read offset, so replaying long words costs O(1) per
    move plus one final O(n) rotation.
    """
    arr = list(p)
    n = len(arr)
    if not isinstance(w, str):
        w = "".join(g.value if isinstance(g, Move) else g for g in w)
    if w.strip("LRX"):
        bad = next(c for c in w if c not in "LRX")
        raise ValueError(f"unknown move {bad!r}")
    last = n - 1
    off = 0
    for g in w:
        if g == "X":
            j = off + 1 if off < last else 0
            arr[off], arr[j] = arr[j], arr[off]
        elif g == "L":
            off = off + 1 if off < last else 0
        else:
            off = off - 1 if off else last
    return tuple(arr[off:] + arr[:off])


def inversion_count(p: Sequence[int]) -> int:
    """Number of pairs ``i < j`` with ``p[i] > p[j]`` (Fenwick tree)."""
    n = len(p)
    tree = [0] * (n + 1)
    inv = 0
    for seen, v in enumerate(p):
        # count earlier entries greater than v
        k = v + 1
        le = 0
        while k > 0:
            le += tree[k]
            k -= k & -k
        inv += seen - le
        k = v + 1
        while k <= n:
            tree[k] += 1
            k += k & -k
    return inv


# ---------------------------------------------------------------------------
# batch moves on (B, n) arrays


def batch_move(states: np.ndarray, g: Move | str) -> np.ndarray:
    g = Move(g)
    if g is Move.L:
        return np.roll(states, -1, axis=1)
    if g is Move.R:
        return np.roll(states, 1, axis=1)
    out = states.copy()
    out[:, 0] = states[:, 1]
    out[:, 1] = states[:, 0]
    return out


def batch_inversions(states: np.ndarray) -> np.ndarray:
    n = states.shape[1]
    s = states.astype(np.int16)
    inv = np.zeros(states.shape[0], dtype=np.int64)
    for i in range(n - 1):
        inv += (s[:, i : i + 1] > s[:, i + 1 :]).sum(axis=1)
    return inv


# ---------------------------------------------------------------------------
# packing


@dataclass(frozen=True)
class PackedState:
    """4-bit-per-entry encoding, little-endian inside each 64-bit block."""

    blocks: tuple
    n: int

    @property
    def code(self) -> int:
        return self.blocks[0]


def pack(p: Sequence[int]) -> PackedState:
    n = len(p)
    if n > MAX_PACKED_N:
        raise ValueError(f"4-bit packing supports n <= {MAX_PACKED_N}, got {n}")
    code = 0
    for i, v in enumerate(p):
        code |= int(v) << (NIBBLE * i)
    return PackedState((code,), n)


def unpack(ps: PackedState) -> Perm:
    code = ps.blocks[0]
    return tuple((code >> (NIBBLE * i)) & 0xF for i in range(ps.n))


class Codec:
    """Packed ``uint64`` codes for a fixed entry width and length.

    ``width=4`` packs permutations (n <= 16); ``width=1`` packs balanced
    binary strings (n <= 64).
    """

    def __init__(self, n: int, width: int = NIBBLE):
        if width * n > 64:
            raise ValueError(f"cannot pack n={n} entries of {width} bits into 64 bits")
        self.n = n
        self.width = width
        self._w = np.uint64(width)
        self._m = np.uint64((1 << width) - 1)
        self._top = np.uint64(width * (n - 1))
        self._full = np.uint64((1 << (width * n)) - 1) if width * n < 64 else np.uint64(MASK64)
        self._low2 = np.uint64((1 << (2 * width)) - 1)
        self._shifts = (np.arange(n, dtype=np.uint64) * self._w)[None, :]

    def encode(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states))
        return np.bitwise_or.reduce(states.astype(np.uint64) << self._shifts, axis=1)

    def encode_one(self, state: Sequence[int]) -> int:
        code = 0
        for i, v in enumerate(state):
            code |= int(v) << (self.width * i)
        return code

    def decode(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.uint64).reshape(-1, 1)
        return ((codes >> self._shifts) & self._m).astype(np.uint8)

    def decode_one(self, code: int) -> tuple:
        m = (1 << self.width) - 1
        return tuple((int(code) >> (self.width * i)) & m for i in range(self.n))

    def move(self, codes: np.ndarray, g: Move | str) -> np.ndarray:
        g = Move(g)
        c = codes
        if g is Move.L:
            return (c >> self._w) | ((c & self._m) << self._top)
        if g is Move.R:
            return ((c << self._w) & self._full) | (c >> self._top)
        a = c & self._m
        b = (c >> self._w) & self._m
        return (c & ~self._low2) | (a << self._w) | b


# ---------------------------------------------------------------------------
# hashing


def _mix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


_C0 = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z + _C0
    z = (z ^ (z >> np.uint64(30))) * _C1
    z = (z ^ (z >> np.uint64(27))) * _C2
    return z ^ (z >> np.uint64(31))


def _blocks(p: Sequence[int]) -> list:
    n = len(p)
    if n <= MAX_PACKED_N:
        return [pack(p).code]
    # wide fallback: 16 bits per entry, 4 entries per block
    out = []
    for start in range(0, n, 4):
        b = 0
        for j, v in enumerate(p[start : start + 4]):
            b |= int(v) << (16 * j)
        out.append(b)
    return out


def hash_state(p: Sequence[int], seed: int = 0) -> int:
    """Seeded 64-bit hash over the packed encoding of ``p``."""
    h = _mix64(seed & MASK64)
    for b in _blocks(p):
        h = _mix64(h ^ b)
    return h


def hash_packed(codes: np.ndarray, seed: int = 0) -> np.ndarray:
    """Vectorised ``hash_state`` for single-block packed codes (n <= 16)."""
    h0 = np.uint64(_mix64(seed & MASK64))
    with np.errstate(over="ignore"):
        return _mix64_np(np.asarray(codes, dtype=np.uint64) ^ h0)


def hash_batch(states: np.ndarray, seed: int = 0) -> np.ndarray:
    """Vectorised ``hash_state`` for a ``(B, n)`` array of permutations."""
    states = np.atleast_2d(states)
    n = states.shape[1]
    if n <= MAX_PACKED_N:
        return hash_packed(Codec(n).encode(states), seed)
    h = np.full(states.shape[0], _mix64(seed & MASK64), dtype=np.uint64)
    s = states.astype(np.uint64)
    with np.errstate(over="ignore"):
        for start in range(0, n, 4):
            b = np.zeros(states.shape[0], dtype=np.uint64)
            for j in range(min(4, n - start)):
                b |= s[:, start + j] << np.uint64(16 * j)
            h = _mix64_np(h ^ b)
    return h
