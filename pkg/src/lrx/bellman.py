"""Tabular value iteration on a fully enumerated graph, plus the min-plus
(tropical) shortest-path cross-check."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedCorrelationError
from .perm import hash_batch
from .search import GraphIndex
from .space import GraphSpec

INITIALIZERS = ("zero", "hamming", "manhattan", "random_int", "random_gauss", "layer_mix", "model", "true")


@dataclass
class DpConfig:
    tolerance: float = 1e-9
    alpha: float = 1.0
    max_iter: int = 1000
    init: str = "zero"
    layer_k: int = 0  # layer_mix: layers <= k get their true distance
    sigma: float | None = None  # random_gauss; defaults to n
    seed: int = 0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.init not in INITIALIZERS:
            raise ValueError(f"unknown initializer {self.init!r}")


# ---------------------------------------------------------------------------
# correlations


def _check_pair(xs, ys) -> tuple:
    x = np.asarray(xs, dtype=np.float64).ravel()
    y = np.asarray(ys, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError("inputs differ in length")
    if x.size < 2:
        raise ValueError("need at least two points")
    return x, y


def pearson(xs, ys) -> float:
    x, y = _check_pair(xs, ys)
    x = x - x.mean()
    y = y - y.mean()
    sx = math.sqrt(float(x @ x))
    sy = math.sqrt(float(y @ y))
    if sx == 0 or sy == 0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    return float(np.clip((x @ y) / (sx * sy), -1.0, 1.0))


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their mean rank."""
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    start = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    end = np.r_[start[1:], xs.size]
    mean_rank = (start + end + 1) / 2.0
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(mean_rank, end - start)
    return ranks


def spearman(xs, ys) -> float:
    x, y = _check_pair(xs, ys)
    return pearson(average_ranks(x), average_ranks(y))


def _safe_pearson(x, y) -> float:
    try:
        return pearson(x, y)
    except UndefinedCorrelationError:
        return float("nan")


# ---------------------------------------------------------------------------
# initializers


def _uniform_from_hash(states: np.ndarray, seed: int) -> np.ndarray:
    h = hash_batch(states, seed)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def initial_values(
    tag: str,
    spec: GraphSpec,
    states: np.ndarray,
    *,
    oracle: np.ndarray | None = None,
    layer_k: int = 0,
    sigma: float | None = None,
    seed: int = 0,
    estimator=None,
    diameter: int | None = None,
) -> np.ndarray:
    """Vector of initial values for a ``(N, n)`` block of states.

    Random initializers are keyed by a seeded hash of each state, so a state
    gets the same value regardless of where it sits in the array.
    """
    states = np.atleast_2d(states)
    target = np.array(spec.identity())
    if tag == "zero":
        return np.zeros(states.shape[0])
    if tag == "hamming":
        return (states != target).sum(axis=1).astype(np.float64)
    if tag == "manhattan":
        return np.abs(states.astype(np.int64) - target).sum(axis=1).astype(np.float64)
    if tag in ("random_int", "random_gauss"):
        if tag == "random_int":
            top = diameter if diameter is not None else spec.n * (spec.n - 1) // 2
            return np.floor(_uniform_from_hash(states, seed) * (top + 1))
        sd = float(spec.n if sigma is None else sigma)
        u1 = np.maximum(_uniform_from_hash(states, seed), 2.0**-53)
        u2 = _uniform_from_hash(states, seed + 1)
        return sd * np.sqrt(-2 * np.log(u1)) * np.cos(2 * np.pi * u2)
    if tag in ("layer_mix", "true"):
        if oracle is None:
            raise ValueError(f"{tag} initializer needs oracle distances")
        oracle = np.asarray(oracle, dtype=np.float64)
        if tag == "true":
            return oracle.copy()
        top = diameter if diameter is not None else int(oracle.max())
        rnd = np.floor(_uniform_from_hash(states, seed) * (top + 1))
        return np.where(oracle <= layer_k, oracle, rnd)
    if tag == "model":
        if estimator is None:
            raise ValueError("model initializer needs an estimator")
        return np.asarray(estimator.predict_batch(states), dtype=np.float64)
    raise ValueError(f"unknown initializer {tag!r}")


def initializer(tag: str, spec: GraphSpec, **kw):
    """State -> value function for a menu tag (see ``initial_values``)."""
    if tag in ("layer_mix", "true"):
        raise ValueError(f"{tag} is defined on a whole table; use initial_values")

    def f(state) -> float:
        return float(initial_values(tag, spec, np.array([state]), **kw)[0])

    return f


# ---------------------------------------------------------------------------
# value iteration


@dataclass
class DpResult:
    index: GraphIndex
    values: np.ndarray  # aligned with index.codes
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, pearson, max_abs_err)

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "pearson", "max_abs_err"])
            for it, r, err in self.trace:
                w.writerow([it, repr(float(r)), repr(float(err))])

    def write_values_csv(self, path) -> None:
        write_state_values(path, self.index, self.values, "distance")


def lex_order(states: np.ndarray) -> np.ndarray:
    """Row order sorting states lexicographically on one-line notation."""
    return np.lexsort(states.T[::-1])


def write_state_values(path, index: GraphIndex, values: np.ndarray, column: str) -> None:
    states = index.states()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["state", column])
        for i in lex_order(states):
            v = values[i]
            w.writerow([index.spec.format(states[i]), repr(float(v)) if isinstance(v, float | np.floating) else int(v)])


def dp_solve(
    spec: GraphSpec,
    cfg: DpConfig,
    index: GraphIndex | None = None,
    *,
    oracle: bool = True,
    estimator=None,
) -> DpResult:
    """Jacobi value iteration ``d <- a(1 + min_nbr d) + (1-a) d`` with d(e) = 0.

    ``index`` must be built from the spec's reference state so its ``dist``
    column is the exact distance.  With ``oracle`` the stop rule is
    ``max|d_i - d| < tolerance`` checked after each sweep and a correlation
    trace is recorded (row 0 is the initial guess); without it the stop rule
    is the sweep-to-sweep change.  ``iterations`` counts sweeps.
    """
    index = index or GraphIndex.build(spec)
    states = index.states()
    truth = index.dist.astype(np.float64)
    d = initial_values(
        cfg.init,
        spec,
        states,
        oracle=truth,
        layer_k=cfg.layer_k,
        sigma=cfg.sigma,
        seed=cfg.seed,
        estimator=estimator,
        diameter=int(truth.max()),
    ).astype(np.float64)
    e = index.start
    d[e] = 0.0
    nbr = index.nbr
    a = cfg.alpha
    trace = []
    if oracle:
        trace.append((0, _safe_pearson(d, truth), float(np.abs(d - truth).max())))
    for it in range(1, cfg.max_iter + 1):
        new = a * (1.0 + d[nbr].min(axis=1)) + (1.0 - a) * d
        new[e] = 0.0
        if oracle:
            err = float(np.abs(new - truth).max())
            trace.append((it, _safe_pearson(new, truth), err))
            done = err < cfg.tolerance
        else:
            done = float(np.abs(new - d).max()) < cfg.tolerance
        d = new
        if done:
            return DpResult(index, d, it, True, trace)
    return DpResult(index, d, cfg.max_iter, False, trace)


# ---------------------------------------------------------------------------
# tropical


def tropical_adjacency(index: GraphIndex) -> np.ndarray:
    """0 on the diagonal, 1 on edges, +inf elsewhere."""
    N = len(index)
    A = np.full((N, N), np.inf)
    rows = np.repeat(np.arange(N), index.nbr.shape[1])
    A[rows, index.nbr.ravel()] = 1.0
    np.fill_diagonal(A, 0.0)
    return A


def tropical_matmul(A: np.ndarray, B: np.ndarray, block: int = 64) -> np.ndarray:
    """``C[i, j] = min_k A[i, k] + B[k, j]``."""
    if A.shape[1] != B.shape[0]:
        raise ValueError("inner dimensions differ")
    C = np.full((A.shape[0], B.shape[1]), np.inf)
    for k0 in range(0, A.shape[1], block):
        part = A[:, k0 : k0 + block, None] + B[None, k0 : k0 + block, :]
        np.minimum(C, part.min(axis=1), out=C)
    return C


def tropical_power(A: np.ndarray, k: int) -> np.ndarray:
    """Min-plus ``A^k`` by repeated squaring."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("tropical_power needs a square matrix")
    if k < 1:
        raise ValueError("k must be >= 1")
    result = None
    base = A
    while k:
        if k & 1:
            result = base if result is None else tropical_matmul(result, base)
        k >>= 1
        if k:
            base = tropical_matmul(base, base)
    return result
