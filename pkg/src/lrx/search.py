"""Exhaustive breadth-first search over the full and coset graphs.

Frontiers are sorted arrays of packed ``uint64`` codes.  Because the move set
is closed under inverses the graph is undirected, so the next layer is the
set of neighbours of the current layer minus the current and previous
layers; dedup is a sort plus two ``searchsorted`` passes.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ResourceLimitError
from .perm import MOVES
from .space import GraphSpec

DEFAULT_MEM_BUDGET = 4 << 30


@dataclass
class LayerProfile:
    layer_sizes: list
    n: int
    kind: str

    @property
    def diameter(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def total(self) -> int:
        return int(sum(self.layer_sizes))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["distance", "layer_size"])
            for d, size in enumerate(self.layer_sizes):
                w.writerow([d, size])


@dataclass
class DistanceTable:
    """Distances from ``start`` to every reachable state, stored by layer."""

    spec: GraphSpec
    start: tuple
    layers: list  # list of sorted uint64 code arrays
    _merged: tuple | None = field(default=None, repr=False)

    @property
    def diameter(self) -> int:
        return len(self.layers) - 1

    gods_number = diameter

    def __len__(self) -> int:
        return int(sum(layer.size for layer in self.layers))

    def distance(self, state: Sequence[int]) -> int | None:
        code = np.uint64(self.spec.codec().encode_one(state))
        for d, layer in enumerate(self.layers):
            i = np.searchsorted(layer, code)
            if i < layer.size and layer[i] == code:
                return d
        return None

    def merged(self) -> tuple:
        """``(codes, distances)`` sorted by code, built once."""
        if self._merged is None:
            codes = np.concatenate(self.layers)
            dist = np.concatenate(
                [np.full(layer.size, d, dtype=np.int16) for d, layer in enumerate(self.layers)]
            )
            order = np.argsort(codes, kind="stable")
            self._merged = (codes[order], dist[order])
        return self._merged

    def lookup(self, codes: np.ndarray) -> np.ndarray:
        """Distances for packed codes; -1 where unreachable."""
        all_codes, dist = self.merged()
        codes = np.asarray(codes, dtype=np.uint64)
        i = np.searchsorted(all_codes, codes)
        i = np.minimum(i, all_codes.size - 1)
        found = all_codes[i] == codes
        return np.where(found, dist[i], -1).astype(np.int64)

    def distances_of(self, states: np.ndarray) -> np.ndarray:
        return self.lookup(self.spec.codec().encode(states))

    def profile(self) -> LayerProfile:
        return LayerProfile([int(layer.size) for layer in self.layers], self.spec.n, self.spec.kind)


def state_count(spec: GraphSpec) -> int:
    if spec.is_coset:
        return math.comb(spec.n, spec.n // 2)
    return math.factorial(spec.n)


def _expand(codec, frontier: np.ndarray) -> np.ndarray:
    return np.unique(np.concatenate([codec.move(frontier, g) for g in MOVES]))


def _drop_known(cand: np.ndarray, known: np.ndarray) -> np.ndarray:
    if known.size == 0 or cand.size == 0:
        return cand
    i = np.searchsorted(known, cand)
    i[i == known.size] = 0
    return cand[known[i] != cand]


def bfs(
    spec: GraphSpec,
    start: Sequence[int] | None = None,
    *,
    mem_budget: int = DEFAULT_MEM_BUDGET,
    threads: int = 1,
) -> tuple:
    """Layer-by-layer BFS; returns ``(LayerProfile, DistanceTable)``."""
    if spec.x_trick:
        raise ValueError("exact BFS requires x_trick=False")
    if not spec.packable():
        raise ResourceLimitError(f"n={spec.n} does not fit the packed BFS representation")
    total = state_count(spec)
    # stored layers plus a transient 3x-expanded frontier and sort buffers
    need = 8 * total * 2
    if need > mem_budget:
        raise ResourceLimitError(
            f"BFS over {total} states needs ~{need >> 20} MiB, budget is {mem_budget >> 20} MiB"
        )
    start = spec.identity() if start is None else spec.validate(start)
    codec = spec.codec()

    prev = np.empty(0, dtype=np.uint64)
    cur = np.array([codec.encode_one(start)], dtype=np.uint64)
    layers = []
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while cur.size:
            layers.append(cur)
            if pool is not None and cur.size >= 4096 * threads:
                shards = np.array_split(cur, threads)
                parts = list(pool.map(lambda s: _expand(codec, s), shards))
                cand = np.unique(np.concatenate(parts))
            else:
                cand = _expand(codec, cur)
            cand = _drop_known(cand, cur)
            cand = _drop_known(cand, prev)
            prev, cur = cur, cand
    finally:
        if pool is not None:
            pool.shutdown()
    table = DistanceTable(spec, tuple(start), layers)
    return table.profile(), table


def farthest_states(table: DistanceTable) -> list:
    """All states in the last layer, sorted lexicographically."""
    codec = table.spec.codec()
    states = [tuple(int(v) for v in row) for row in codec.decode(table.layers[-1])]
    return sorted(states)


class GraphIndex:
    """Dense index of a fully enumerated graph.

    ``codes`` are sorted packed states, ``dist`` their distance from the
    table's start and ``nbr[i]`` the indices of the (L, R, X) neighbours.
    """

    def __init__(self, table: DistanceTable):
        self.spec = table.spec
        self.codec = table.spec.codec()
        self.codes, dist = table.merged()
        self.dist = dist.astype(np.int64)
        self.nbr = np.stack(
            [np.searchsorted(self.codes, self.codec.move(self.codes, g)) for g in MOVES], axis=1
        ).astype(np.int64)
        self.start = self.index_of_state(table.start)

    @classmethod
    def build(cls, spec: GraphSpec, **kw) -> "GraphIndex":
        return cls(bfs(GraphSpec(spec.kind, spec.n), **kw)[1])

    def __len__(self) -> int:
        return self.codes.size

    @property
    def diameter(self) -> int:
        return int(self.dist.max())

    def index_of(self, codes: np.ndarray) -> np.ndarray:
        i = np.searchsorted(self.codes, np.asarray(codes, dtype=np.uint64))
        if np.any(i >= self.codes.size) or np.any(self.codes[np.minimum(i, self.codes.size - 1)] != codes):
            raise KeyError("state not in graph")
        return i

    def index_of_state(self, state: Sequence[int]) -> int:
        return int(self.index_of(np.array([self.codec.encode_one(state)], dtype=np.uint64))[0])

    def states(self) -> np.ndarray:
        return self.codec.decode(self.codes)

    def state(self, i: int) -> tuple:
        return self.codec.decode_one(int(self.codes[i]))

    def bfs_from(self, source: int) -> np.ndarray:
        """Distances from vertex ``source`` over the neighbour matrix."""
        dist = np.full(len(self), -1, dtype=np.int64)
        dist[source] = 0
        frontier = np.array([source])
        d = 0
        while frontier.size:
            d += 1
            nxt = np.unique(self.nbr[frontier].ravel())
            nxt = nxt[dist[nxt] < 0]
            dist[nxt] = d
            frontier = nxt
        return dist


@dataclass
class Geodesics:
    """Expected value positions along a uniformly random shortest path."""

    positions: np.ndarray  # (length + 1, n): E[position of value v at step t]
    count: int  # number of shortest paths
    length: int

    def write_csv(self, path) -> None:
        n = self.positions.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step"] + [f"v{v}" for v in range(n)])
            for t, row in enumerate(self.positions):
                w.writerow([t] + [repr(float(x)) for x in row])


def geodesic_ensemble(
    n: int,
    source: Sequence[int],
    target: Sequence[int] | None = None,
    index: GraphIndex | None = None,
) -> Geodesics:
    """Average all shortest ``source -> target`` paths with exact path counts.

    Weight of a state on step ``t`` is (#geodesics source->s) * (#geodesics
    s->target); counts are Python ints so nothing overflows.
    """
    spec = GraphSpec("full", n)
    index = index or GraphIndex.build(spec)
    target = spec.identity() if target is None else spec.validate(target)
    src = index.index_of_state(spec.validate(source))
    dst = index.index_of_state(target)
    ds = index.bfs_from(src)
    dt = index.bfs_from(dst)
    length = int(ds[dst])
    if length < 0:
        raise ValueError("target unreachable from source")
    on = np.flatnonzero(ds + dt == length)
    by_layer = [[] for _ in range(length + 1)]
    for v in on.tolist():
        by_layer[int(ds[v])].append(v)
    nbr = index.nbr

    fwd = {src: 1}
    for t in range(1, length + 1):
        for v in by_layer[t]:
            fwd[v] = sum(fwd.get(int(u), 0) for u in nbr[v] if ds[u] == t - 1)
    bwd = {dst: 1}
    for t in range(length - 1, -1, -1):
        for v in by_layer[t]:
            bwd[v] = sum(bwd.get(int(u), 0) for u in nbr[v] if ds[u] == t + 1)
    total = fwd[dst]

    positions = np.zeros((length + 1, n))
    for t in range(length + 1):
        acc = [0] * n
        for v in by_layer[t]:
            w = fwd[v] * bwd[v]
            if not w:
                continue
            for i, val in enumerate(index.state(v)):
                acc[val] += w * i
        positions[t] = [a / total for a in acc]
    return Geodesics(positions, total, length)
