"""Random walks from the reference state: training pairs, diffusion distance
(Monte-Carlo and exact) and inversion mixing curves.

Walkers are simulated in fixed-size chunks.  Chunk ``c`` draws from
``default_rng([seed, c])``, so results do not depend on how chunks are
scheduled over threads.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .search import GraphIndex
from .space import GraphSpec

CHUNK = 4096
KINDS = ("plain", "nbt", "x_trick")


@dataclass(frozen=True)
class WalkConfig:
    kind: str = "plain"
    k_max: int = 10
    n_walks: int = 1000
    seed: int = 0
    history: int = 1  # nbt depth m

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown walk kind {self.kind!r}")
        if self.k_max < 1 or self.n_walks < 1:
            raise ValueError("k_max and n_walks must be >= 1")
        if self.kind == "nbt" and self.history < 1:
            raise ValueError("non-backtracking walks need history >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _gathers(n: int) -> np.ndarray:
    """Column index arrays realising L, R, X on a ``(B, n)`` block."""
    i = np.arange(n)
    x = i.copy()
    x[:2] = [1, 0]
    return np.stack([(i + 1) % n, (i - 1) % n, x])


class _Walker:
    """Vectorised single-step engine shared by all walk consumers."""

    def __init__(self, spec: GraphSpec, cfg: WalkConfig, size: int, rng: np.random.Generator):
        self.spec = spec
        self.cfg = cfg
        self.rng = rng
        self.gather = _gathers(spec.n)
        self.rows = np.arange(size)[:, None]
        self.states = np.tile(np.array(spec.identity(), dtype=np.uint8), (size, 1))
        self.hist = None
        if cfg.kind == "nbt":
            # hist[:, 0] is the most recent previous state
            self.hist = np.zeros((size, cfg.history), dtype=np.uint64)
            self.hist_len = 0

    def keys(self, states: np.ndarray) -> np.ndarray:
        return self.spec.keys(states)

    def step(self) -> np.ndarray:
        """Advance every walker one move; returns the move indices (0=L, 1=R, 2=X)."""
        s = self.states
        B = s.shape[0]
        u = self.rng.random(B)
        if self.cfg.kind == "plain":
            moves = np.minimum((u * 3).astype(np.int64), 2)
        else:
            allowed = np.ones((B, 3), dtype=bool)
            if self.cfg.kind == "x_trick":
                allowed[:, 2] = s[:, 0] > s[:, 1]
            else:
                cur = self.keys(s)
                if self.hist_len:
                    h = self.hist[:, : self.hist_len]
                    for g in range(3):
                        nxt = self.keys(s[self.rows, self.gather[g]])
                        allowed[:, g] = ~(h == nxt[:, None]).any(axis=1)
                    allowed[~allowed.any(axis=1)] = True
                self.hist[:, 1:] = self.hist[:, :-1]
                self.hist[:, 0] = cur
                self.hist_len = min(self.hist_len + 1, self.cfg.history)
            count = allowed.sum(axis=1)
            pick = np.minimum((u * count).astype(np.int64), count - 1)
            csum = np.cumsum(allowed, axis=1)
            moves = (csum <= pick[:, None]).sum(axis=1)
        self.states = s[self.rows, self.gather[moves]]
        return moves


def _chunks(total: int):
    return [(c, min(CHUNK, total - c * CHUNK)) for c in range((total + CHUNK - 1) // CHUNK)]


def _run_chunks(fn, total: int, threads: int) -> list:
    jobs = _chunks(total)
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(lambda j: fn(*j), jobs))
    return [fn(*j) for j in jobs]


# ---------------------------------------------------------------------------
# training pairs


@dataclass
class TrainingSet:
    states: np.ndarray  # (M, n) uint8
    labels: np.ndarray  # (M,) int64
    spec: GraphSpec
    cfg: WalkConfig
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.labels.size)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["state", "k"])
            for s, k in zip(self.states, self.labels):
                w.writerow([self.spec.format(s), int(k)])
        with open(f"{path}.json", "w") as fh:
            json.dump({"spec": self.spec.to_dict(), "walks": self.cfg.to_dict(), **self.meta}, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read_csv(cls, path) -> "TrainingSet":
        with open(f"{path}.json") as fh:
            meta = json.load(fh)
        spec = GraphSpec.from_dict(meta.pop("spec"))
        cfg = WalkConfig(**meta.pop("walks"))
        states, labels = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                states.append(spec.parse(row["state"]))
                labels.append(int(row["k"]))
        return cls(np.array(states, dtype=np.uint8), np.array(labels, dtype=np.int64), spec, cfg, meta)


def _walk_chunk(spec: GraphSpec, cfg: WalkConfig, chunk: int, size: int):
    rng = np.random.default_rng([cfg.seed, chunk])
    w = _Walker(spec, cfg, size, rng)
    seen = np.empty((size, cfg.k_max + 1), dtype=np.uint64)
    seen[:, 0] = w.keys(w.states)
    out_s, out_k = [], []
    for k in range(1, cfg.k_max + 1):
        w.step()
        key = w.keys(w.states)
        fresh = ~(seen[:, :k] == key[:, None]).any(axis=1)
        seen[:, k] = key
        out_s.append(w.states[fresh])
        out_k.append(np.full(int(fresh.sum()), k, dtype=np.int64))
    return np.concatenate(out_s), np.concatenate(out_k)


def walk_paths(spec: GraphSpec, cfg: WalkConfig) -> np.ndarray:
    """Full trajectories, shape ``(n_walks, k_max + 1, n)``; meant for small runs."""
    out = []
    for c, size in _chunks(cfg.n_walks):
        w = _Walker(spec, cfg, size, np.random.default_rng([cfg.seed, c]))
        path = [w.states]
        for _ in range(cfg.k_max):
            w.step()
            path.append(w.states)
        out.append(np.stack(path, axis=1))
    return np.concatenate(out)


def generate_walks(spec: GraphSpec, cfg: WalkConfig, threads: int = 1) -> TrainingSet:
    """``(state, k)`` pairs at each state's first visit within its trajectory.

    The start state appears once with label 0; pairs from different
    trajectories are all kept.
    """
    parts = _run_chunks(lambda c, size: _walk_chunk(spec, cfg, c, size), cfg.n_walks, threads)
    e = np.array([spec.identity()], dtype=np.uint8)
    states = np.concatenate([e] + [p[0] for p in parts])
    labels = np.concatenate([np.zeros(1, dtype=np.int64)] + [p[1] for p in parts])
    return TrainingSet(states, labels, spec, cfg)


# ---------------------------------------------------------------------------
# diffusion distance


@dataclass
class StateValues:
    """Per-state values for a set of states (rows aligned)."""

    states: np.ndarray
    values: np.ndarray
    counts: np.ndarray | None = None

    def as_dict(self) -> dict:
        return {tuple(int(v) for v in s): float(x) for s, x in zip(self.states, self.values)}

    def write_csv(self, path, spec: GraphSpec, column: str = "dd") -> None:
        order = np.lexsort(self.states.T[::-1])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["state", column] + (["visits"] if self.counts is not None else []))
            for i in order:
                row = [spec.format(self.states[i]), repr(float(self.values[i]))]
                if self.counts is not None:
                    row.append(int(self.counts[i]))
                w.writerow(row)


def mc_diffusion_estimate(spec: GraphSpec, cfg: WalkConfig, threads: int = 1) -> StateValues:
    """Mean first-visit step per visited state."""
    ts = generate_walks(spec, cfg, threads)
    keys = spec.keys(ts.states)
    uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    counts = np.bincount(inv)
    sums = np.bincount(inv, weights=ts.labels.astype(np.float64))
    # every trajectory starts at e
    e_pos = inv[0]
    counts[e_pos] += cfg.n_walks - 1
    return StateValues(ts.states[first], sums / counts, counts)


def exact_diffusion_distance(
    spec: GraphSpec,
    k_max: int,
    mode: str = "walk",
    index: GraphIndex | None = None,
    block: int = 256,
) -> StateValues:
    """Exact diffusion distance from the reference state.

    ``mode="walk"`` weights step ``k`` by the probability ``A^k[e, V] / 3^k``
    that a plain walk stands at V after k steps.  ``mode="first_visit"``
    weights it by the probability that the walk reaches V for the first time
    at step k, which is the quantity ``mc_diffusion_estimate`` samples.  The
    second needs a taboo recursion per target and is limited to a few
    thousand states.
    """
    if spec.x_trick:
        raise ValueError("exact diffusion distance is defined for x_trick=False only")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    index = index or GraphIndex.build(spec)
    nbr = index.nbr
    N = len(index)
    e = index.start
    num = np.zeros(N)
    den = np.zeros(N)
    if mode == "walk":
        P = np.zeros(N)
        P[e] = 1.0
        for k in range(k_max + 1):
            num += k * P
            den += P
            P = P[nbr].sum(axis=1) / 3.0
    elif mode == "first_visit":
        if N > 5040:
            raise ValueError("first_visit mode limited to graphs with <= 5040 states")
        den[e] = 1.0
        for t0 in range(0, N, block):
            targets = np.arange(t0, min(N, t0 + block))
            rows = np.arange(targets.size)
            Q = np.zeros((targets.size, N))
            Q[:, e] = 1.0
            Q[rows, targets] = 0.0
            for k in range(1, k_max + 1):
                Q = Q[:, nbr].sum(axis=2) / 3.0
                hit = Q[rows, targets]
                num[targets] += k * hit
                den[targets] += hit
                Q[rows, targets] = 0.0
    else:
        raise ValueError(f"unknown mode {mode!r}")
    # the start is pinned to 0; walk mode would otherwise count returns to it
    num[e] = 0.0
    den[e] = 1.0
    reach = den > 0
    return StateValues(index.states()[reach], num[reach] / den[reach], None)


def layer_means(index: GraphIndex, dd: StateValues) -> np.ndarray:
    """Mean DD per BFS layer (NaN where a layer has no DD values)."""
    d = index.dist[index.index_of(index.codec.encode(dd.states))]
    sums = np.bincount(d, weights=dd.values, minlength=index.diameter + 1)
    cnt = np.bincount(d, minlength=index.diameter + 1)
    with np.errstate(invalid="ignore"):
        return sums / cnt


# ---------------------------------------------------------------------------
# mixing


@dataclass
class MixingCurve:
    mean: np.ndarray  # indexed by step 0..k_max
    stderr: np.ndarray
    trials: int

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["step", "mean_inversions", "stderr"])
            for t, (m, s) in enumerate(zip(self.mean, self.stderr)):
                w.writerow([t, repr(float(m)), repr(float(s))])


def _mix_chunk(spec: GraphSpec, cfg: WalkConfig, chunk: int, size: int):
    n = spec.n
    rng = np.random.default_rng([cfg.seed, chunk])
    w = _Walker(spec, cfg, size, rng)
    inv = np.zeros(size, dtype=np.int64)
    total = np.zeros(cfg.k_max + 1)
    total_sq = np.zeros(cfg.k_max + 1)
    for t in range(1, cfg.k_max + 1):
        s = w.states
        first = s[:, 0].astype(np.int64)
        last = s[:, -1].astype(np.int64)
        moves = w.step()
        delta = np.where(
            moves == 0,
            n - 1 - 2 * first,
            np.where(moves == 1, 2 * last - (n - 1), np.where(first < s[:, 1], 1, -1)),
        )
        inv += delta
        total[t] = inv.sum()
        total_sq[t] = (inv * inv).sum()
    return total, total_sq


def mixing_curve(spec: GraphSpec, cfg: WalkConfig, trials: int | None = None, threads: int = 1) -> MixingCurve:
    """Mean inversion count after each step over ``trials`` walks from e."""
    if spec.is_coset:
        raise ValueError("mixing curves are defined on the full graph")
    trials = cfg.n_walks if trials is None else trials
    parts = _run_chunks(lambda c, size: _mix_chunk(spec, cfg, c, size), trials, threads)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / trials
    var = np.maximum(s2 / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return MixingCurve(mean, np.sqrt(var / trials), trials)

