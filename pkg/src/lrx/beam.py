"""Guided beam search toward the reference state.

Each step expands the whole beam, drops duplicate children and children seen
in the last ``history`` frontiers (the current beam counts as the most recent
one), ranks the rest by heuristic value with the state hash as tie-break, and
keeps the best ``width``.  Parent links are kept per step (spilled to disk
past a memory budget) so the path can be rebuilt and replayed.
"""

from __future__ import annotations

import csv
import os
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ResourceLimitError
from .perm import MOVES, apply_word, batch_move, hash_batch
from .space import GraphSpec, batch_x_mask

HEURISTICS = ("model", "hamming", "oracle")
DEFAULT_BEAM_MEM = 2 << 30


@dataclass(frozen=True)
class BeamConfig:
    width: int = 1024
    max_steps: int = 1000
    history: int = 1
    x_trick: bool = False
    seed: int = 0
    heuristic: str = "model"
    mem_budget: int = DEFAULT_BEAM_MEM
    float32: bool = True  # model inference precision

    def __post_init__(self):
        if self.width < 1 or self.max_steps < 1:
            raise ValueError("width and max_steps must be >= 1")
        if self.history < 0:
            raise ValueError("history depth must be >= 0")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SearchResult:
    found: bool
    word: str | None
    steps: int
    stats: list = field(default_factory=list)  # per step: (beam, candidates, best score)
    peak_beam: int = 0
    peak_mem_bytes: int = 0
    seconds: float = 0.0

    @property
    def length(self) -> int | None:
        return None if self.word is None else len(self.word)

    def to_json(self, seed: int) -> dict:
        return {
            "found": self.found,
            "length": self.length,
            "word": self.word,
            "steps": self.steps,
            "peak_beam": self.peak_beam,
            "seed": seed,
        }


def make_heuristic(spec: GraphSpec, cfg: BeamConfig, estimator=None, oracle=None):
    """Vectorised ``states -> scores`` for the configured heuristic."""
    if cfg.heuristic == "hamming":
        target = np.array(spec.identity())
        return lambda s: (s != target).sum(axis=1).astype(np.float64)
    if cfg.heuristic == "oracle":
        if oracle is None:
            raise ValueError("oracle heuristic needs a distance table")
        return lambda s: oracle.distances_of(s).astype(np.float64)
    if estimator is None:
        raise ValueError("model heuristic needs an estimator")
    if estimator.n != spec.n or estimator.spec.kind != spec.kind:
        raise ValueError("estimator does not match the graph spec")
    dtype = np.float32 if cfg.float32 else np.float64
    return lambda s: estimator.predict_batch(s, dtype=dtype)


class _ParentLog:
    """Per-step ``(parent index, move)`` arrays, moved to disk past a budget."""

    def __init__(self, budget: int, spill_dir: str | None):
        self.budget = budget
        self.spill_dir = spill_dir
        self.tmp = None
        self.steps: list = []
        self.in_memory = 0

    def append(self, parent: np.ndarray, move: np.ndarray) -> None:
        rec = np.empty(parent.size, dtype=[("p", np.int32), ("m", np.uint8)])
        rec["p"] = parent
        rec["m"] = move
        if self.in_memory + rec.nbytes > self.budget:
            if self.tmp is None:
                self.tmp = tempfile.TemporaryDirectory(dir=self.spill_dir)
            path = os.path.join(self.tmp.name, f"step{len(self.steps)}.npy")
            np.save(path, rec)
            self.steps.append(path)
        else:
            self.in_memory += rec.nbytes
            self.steps.append(rec)

    def trace(self, index: int) -> str:
        moves = []
        for rec in reversed(self.steps):
            if isinstance(rec, str):
                rec = np.load(rec, mmap_mode="r")
            moves.append(MOVES[int(rec["m"][index])].value)
            index = int(rec["p"][index])
        return "".join(reversed(moves))

    def close(self) -> None:
        if self.tmp is not None:
            self.tmp.cleanup()


def beam_search(
    spec: GraphSpec,
    start,
    cfg: BeamConfig,
    estimator=None,
    oracle=None,
    spill_dir: str | None = None,
    observer=None,
) -> SearchResult:
    """Search from ``start`` toward the reference state.

    ``observer(step, beam, cand, parent)`` is called with each filtered
    candidate block before ranking (``parent`` indexes rows of ``beam``).
    """
    t0 = time.perf_counter()
    spec = GraphSpec(spec.kind, spec.n, cfg.x_trick)
    start = spec.validate(start)
    n = spec.n
    bytes_per_cand = 3 * (n + 8 + 8 + 8) + 4 * n * (2 if spec.is_coset else n)
    if 3 * cfg.width * bytes_per_cand > cfg.mem_budget:
        raise ResourceLimitError(
            f"beam width {cfg.width} needs ~{3 * cfg.width * bytes_per_cand >> 20} MiB of candidates, "
            f"budget is {cfg.mem_budget >> 20} MiB"
        )
    target = np.array(spec.identity(), dtype=np.uint8)
    target_key = hash_batch(target[None, :], cfg.seed)[0]

    beam = np.array([start], dtype=np.uint8)
    keys = hash_batch(beam, cfg.seed)
    history: list = []
    log = _ParentLog(cfg.mem_budget // 2, spill_dir)
    stats = []
    peak_beam = 1
    peak_mem = 0
    try:
        if keys[0] == target_key and (beam[0] == target).all():
            return SearchResult(True, "", 0, stats, 1, 0, time.perf_counter() - t0)
        score = make_heuristic(spec, cfg, estimator, oracle)
        for step in range(1, cfg.max_steps + 1):
            if cfg.history:
                history.append(keys)
                history = history[-cfg.history :]
            parts, parent, move = [], [], []
            xmask = batch_x_mask(beam, spec)
            for gi, g in enumerate(MOVES):
                rows = np.arange(beam.shape[0]) if gi < 2 else np.flatnonzero(xmask)
                parts.append(batch_move(beam[rows], g))
                parent.append(rows)
                move.append(np.full(rows.size, gi, dtype=np.uint8))
            cand = np.concatenate(parts)
            parent = np.concatenate(parent)
            move = np.concatenate(move)
            ckeys = hash_batch(cand, cfg.seed)
            _, first = np.unique(ckeys, return_index=True)
            keep = np.zeros(ckeys.size, dtype=bool)
            keep[first] = True
            if history:
                banned = np.unique(np.concatenate(history))
                pos = np.minimum(np.searchsorted(banned, ckeys), banned.size - 1)
                keep &= banned[pos] != ckeys
            idx = np.flatnonzero(keep)
            cand, parent, move, ckeys = cand[idx], parent[idx], move[idx], ckeys[idx]
            if cand.shape[0] == 0:
                stats.append((0, 0, float("nan")))
                break
            if observer is not None:
                observer(step, beam, cand, parent)
            hit = np.flatnonzero((ckeys == target_key) & (cand == target).all(axis=1))
            if hit.size:
                log.append(parent[hit[:1]], move[hit[:1]])
                word = log.trace(0)
                stats.append((1, int(cand.shape[0]), 0.0))
                if apply_word(start, word) != tuple(int(v) for v in target):
                    raise RuntimeError("reconstructed path does not replay to the target")
                return SearchResult(True, word, step, stats, peak_beam, peak_mem, time.perf_counter() - t0)
            vals = score(cand)
            order = np.lexsort((ckeys, vals))[: cfg.width]
            peak_mem = max(peak_mem, cand.nbytes + ckeys.nbytes + vals.nbytes + parent.nbytes + move.nbytes)
            beam, keys = cand[order], ckeys[order]
            log.append(parent[order], move[order])
            peak_beam = max(peak_beam, beam.shape[0])
            stats.append((int(beam.shape[0]), int(cand.shape[0]), float(vals[order[0]])))
        return SearchResult(False, None, len(stats), stats, peak_beam, peak_mem, time.perf_counter() - t0)
    finally:
        log.close()


# ---------------------------------------------------------------------------
# batch harness


@dataclass
class BatchReport:
    rows: list  # (run, found, length, seconds, peak_mem_bytes)

    @property
    def success_rate(self) -> float:
        return sum(r[1] for r in self.rows) / len(self.rows) if self.rows else 0.0

    def lengths(self) -> list:
        return [r[2] for r in self.rows if r[1]]

    def summary(self) -> dict:
        ls = self.lengths()
        return {
            "runs": len(self.rows),
            "success_rate": self.success_rate,
            "min_length": min(ls) if ls else None,
            "median_length": statistics.median(ls) if ls else None,
            "total_seconds": sum(r[3] for r in self.rows),
        }

    def write_csv(self, path, timings: bool = True) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["run", "found", "length", "seconds", "peak_mem_bytes"])
            for run, found, length, sec, mem in self.rows:
                w.writerow([run, int(found), "" if length is None else length, f"{sec:.6f}" if timings else "", mem])


def solve_batch(
    spec: GraphSpec,
    starts: list,
    cfg: BeamConfig,
    repeats: int = 1,
    estimator=None,
    oracle=None,
    estimators: list | None = None,
) -> tuple:
    """Run every start ``repeats`` times; repeat ``r`` uses seed ``cfg.seed + r``
    and, when ``estimators`` is given, the model ``estimators[r]``.

    Returns ``(BatchReport, results)``.
    """
    rows, results = [], []
    run = 0
    for r in range(repeats):
        rcfg = BeamConfig(**{**cfg.to_dict(), "seed": cfg.seed + r})
        est = estimators[r] if estimators is not None else estimator
        for s in starts:
            res = beam_search(spec, s, rcfg, est, oracle)
            rows.append((run, res.found, res.length, res.seconds, res.peak_mem_bytes))
            results.append(res)
            run += 1
    return BatchReport(rows), results
