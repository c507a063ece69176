"""Statistics on growth profiles and small graphs: moments, a left-skewed
Gumbel fit, polynomial fits, the coset God's number formula and adjacency
spectra."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ResourceLimitError
from .search import GraphIndex, LayerProfile
from .space import GraphSpec

EULER_GAMMA = 0.5772156649015329


def _weights(profile) -> np.ndarray:
    sizes = profile.layer_sizes if isinstance(profile, LayerProfile) else profile
    w = np.asarray(sizes, dtype=np.float64)
    if w.ndim != 1 or w.size == 0 or (w < 0).any() or w.sum() <= 0:
        raise ValueError("profile must be a non-empty sequence of non-negative sizes")
    return w


def growth_stats(profile) -> dict:
    """Moments of the distance distribution weighted by layer size."""
    w = _weights(profile)
    if np.count_nonzero(w) < 2:
        raise ValueError("standard deviation undefined for a single-layer profile")
    x = np.arange(w.size, dtype=np.float64)
    p = w / w.sum()
    mean = float(p @ x)
    c = x - mean
    var = float(p @ c**2)
    std = math.sqrt(var)
    return {
        "mean": mean,
        "mode": int(np.argmax(w)),
        "std": std,
        "skewness": float(p @ c**3) / std**3,
        "excess_kurtosis": float(p @ c**4) / var**2 - 3.0,
    }


# ---------------------------------------------------------------------------
# Gumbel (minimum form, heavy left tail)


@dataclass(frozen=True)
class GumbelParams:
    mu: float
    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")

    @property
    def mean(self) -> float:
        return self.mu - EULER_GAMMA * self.beta

    @property
    def var(self) -> float:
        return math.pi**2 * self.beta**2 / 6

    def pdf(self, x) -> np.ndarray:
        t = (np.asarray(x, dtype=np.float64) - self.mu) / self.beta
        return np.exp(t - np.exp(t)) / self.beta

    def cdf(self, x) -> np.ndarray:
        t = (np.asarray(x, dtype=np.float64) - self.mu) / self.beta
        return -np.expm1(-np.exp(t))

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(size)
        return self.mu + self.beta * np.log(-np.log1p(-u))

    @classmethod
    def from_moments(cls, mean: float, var: float) -> "GumbelParams":
        if not var > 0:
            raise ValueError("zero variance")
        beta = math.sqrt(6 * var) / math.pi
        return cls(mean + EULER_GAMMA * beta, beta)


@dataclass
class GumbelFit:
    params: GumbelParams
    start: GumbelParams
    objective: float
    start_objective: float
    kind: str

    def to_json(self) -> dict:
        return {
            "mu": self.params.mu,
            "beta": self.params.beta,
            "objective": self.objective,
            "objective_kind": self.kind,
            "moment_mu": self.start.mu,
            "moment_beta": self.start.beta,
            "moment_objective": self.start_objective,
        }


def _gumbel_objective(kind: str, pmf: np.ndarray, x: np.ndarray, mu, beta) -> np.ndarray:
    """Objective for broadcastable arrays of ``mu`` and ``beta``."""
    t = (x - mu[..., None]) / beta[..., None]
    if kind == "ks":
        cdf = -np.expm1(-np.exp(t))
        return np.abs(cdf - np.cumsum(pmf)).max(axis=-1)
    dens = np.exp(t - np.exp(t)) / beta[..., None]
    diff = dens - pmf
    if kind == "l2":
        return (diff**2).sum(axis=-1)
    if kind == "linf":
        return np.abs(diff).max(axis=-1)
    raise ValueError(f"unknown objective {kind!r}")


def gumbel_fit(profile, objective: str = "l2", span: float = 0.05, points: int = 41, x0: float = 0.0) -> GumbelFit:
    """Moment-matched Gumbel refined on a ``points x points`` grid of
    ``mu * (1 +- span)`` by ``beta * (1 +- span)``.

    Layer ``k`` sits at abscissa ``x0 + k``.
    """
    w = _weights(profile)
    pmf = w / w.sum()
    x = x0 + np.arange(w.size, dtype=np.float64)
    mean = float(pmf @ x)
    var = float(pmf @ (x - mean) ** 2)
    start = GumbelParams.from_moments(mean, var)
    s_obj = float(_gumbel_objective(objective, pmf, x, np.array(start.mu), np.array(start.beta)))
    mus = start.mu + abs(start.mu) * span * np.linspace(-1, 1, points)
    betas = start.beta * (1 + span * np.linspace(-1, 1, points))
    M, B = np.meshgrid(mus, betas, indexing="ij")
    obj = _gumbel_objective(objective, pmf, x, M, B)
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    best, b_obj = GumbelParams(float(M[i, j]), float(B[i, j])), float(obj[i, j])
    if b_obj > s_obj:
        best, b_obj = start, s_obj
    return GumbelFit(best, start, b_obj, s_obj, objective)


# ---------------------------------------------------------------------------
# fits and formulas


def poly_fit(xs, ys, degree: int) -> np.ndarray:
    """Least-squares coefficients, highest power first."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and equally long")
    if x.size < degree + 1:
        raise ValueError(f"need at least {degree + 1} points for degree {degree}")
    V = np.vander(x, degree + 1)
    coef, _, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    if rank < degree + 1:
        raise np.linalg.LinAlgError("rank-deficient design matrix")
    return coef


def coset_gods_number(n: int) -> int:
    """``3n^2/16 - n/4 + 2 - (n mod 4)/8`` for even n >= 6."""
    if n % 2 or n < 6:
        raise ValueError("formula holds for even n >= 6")
    num = 3 * n * n - 4 * n + 32 - 2 * (n % 4)
    assert num % 16 == 0
    return num // 16


# ---------------------------------------------------------------------------
# spectrum


def adjacency_matrix(index: GraphIndex) -> np.ndarray:
    N = len(index)
    A = np.zeros((N, N))
    for g in range(index.nbr.shape[1]):
        np.add.at(A, (np.arange(N), index.nbr[:, g]), 1.0)
    return A


def jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic Jacobi rotations on a dense symmetric matrix."""
    A = np.array(A, dtype=np.float64)
    N = A.shape[0]
    for _ in range(max_sweeps):
        off = math.sqrt(max(float((A * A).sum() - (np.diag(A) ** 2).sum()), 0.0))
        if off < tol:
            break
        for p in range(N - 1):
            for q in range(p + 1, N):
                apq = A[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rp = A[p].copy()
                rq = A[q].copy()
                A[p] = c * rp - s * rq
                A[q] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.sort(np.diag(A))


def spectrum(spec: GraphSpec, method: str = "auto", index: GraphIndex | None = None) -> np.ndarray:
    """Sorted adjacency eigenvalues.  ``auto`` uses Jacobi up to 120 states
    and LAPACK above."""
    if spec.kind == "full" and not 4 <= spec.n <= 7:
        raise ResourceLimitError("spectrum supports full graphs with 4 <= n <= 7")
    index = index or GraphIndex.build(GraphSpec(spec.kind, spec.n))
    if len(index) > 5040:
        raise ResourceLimitError("spectrum limited to 5040 states")
    A = adjacency_matrix(index)
    if method == "auto":
        method = "jacobi" if len(index) <= 120 else "lapack"
    if method == "jacobi":
        return jacobi_eigenvalues(A)
    if method == "lapack":
        return np.linalg.eigvalsh(A)
    raise ValueError(f"unknown method {method!r}")


def write_spectrum(path_values, path_hist, eig: np.ndarray, bins: int = 50) -> None:
    with open(path_values, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eigenvalue"])
        for i, v in enumerate(eig):
            w.writerow([i, f"{v:.12g}"])
    # rounding can put the extreme eigenvalues a hair outside [-3, 3]
    counts, edges = np.histogram(np.clip(eig, -3.0, 3.0), bins=bins, range=(-3.0, 3.0))
    with open(path_hist, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            w.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c)])
