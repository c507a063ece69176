"""Distance estimator: a one-hidden-layer ReLU perceptron on one-hot states,
trained first on random-walk step labels and then by clipped Bellman targets.

Everything is plain numpy.  Weights live in float64; ``predict_batch`` can
optionally run the forward pass in float32 for large beams.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .perm import MOVES, batch_move
from .space import GraphSpec
from .walks import TrainingSet, WalkConfig, generate_walks

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    hidden: int = 128
    epochs_warmup: int = 50
    epochs_dqn: int = 50
    batch_size: int = 1024
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    optimizer: str = "adam"
    seed: int = 0

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError("hidden width must be >= 1")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _symbols(spec: GraphSpec) -> int:
    return 2 if spec.is_coset else spec.n


def encode_state(p, symbols: int | None = None) -> np.ndarray:
    """One-hot vector with entry ``i * symbols + p[i]`` set."""
    return encode_batch(np.array([p]), symbols)[0]


def encode_batch(states: np.ndarray, symbols: int | None = None, dtype=np.float64) -> np.ndarray:
    states = np.atleast_2d(states)
    B, n = states.shape
    symbols = n if symbols is None else symbols
    out = np.zeros((B, n * symbols), dtype=dtype)
    cols = np.arange(n) * symbols + states.astype(np.int64)
    out[np.arange(B)[:, None], cols] = 1
    return out


PARAMS = ("W1", "b1", "W2", "b2")


@dataclass
class DistanceEstimator:
    spec: GraphSpec
    W1: np.ndarray  # (n * symbols, hidden)
    b1: np.ndarray  # (hidden,)
    W2: np.ndarray  # (hidden,)
    b2: np.ndarray  # (1,)
    activation: str = "relu"
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @classmethod
    def init(cls, spec: GraphSpec, hidden: int = 128, seed: int = 0) -> "DistanceEstimator":
        rng = np.random.default_rng([seed, 1])
        d = spec.n * _symbols(spec)
        a1 = 1 / math.sqrt(d)
        a2 = 1 / math.sqrt(hidden)
        return cls(
            spec,
            rng.uniform(-a1, a1, (d, hidden)),
            rng.uniform(-a1, a1, hidden),
            rng.uniform(-a2, a2, hidden),
            rng.uniform(-a2, a2, 1),
            seed=seed,
        )

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def hidden(self) -> int:
        return self.b1.size

    def params(self) -> dict:
        return {k: getattr(self, k) for k in PARAMS}

    def copy(self) -> "DistanceEstimator":
        return replace(self, **{k: v.copy() for k, v in self.params().items()}, meta=dict(self.meta))

    # -- inference ---------------------------------------------------------

    def _columns(self, states: np.ndarray) -> np.ndarray:
        return states.astype(np.intp) + np.arange(states.shape[1]) * _symbols(self.spec)

    @staticmethod
    def _preact(idx: np.ndarray, W1: np.ndarray, b1: np.ndarray) -> np.ndarray:
        # summing W1 rows in a fixed order keeps each state's value independent of its batch
        h = np.tile(b1, (idx.shape[0], 1))
        for i in range(idx.shape[1]):
            h += W1[idx[:, i]]
        return h

    def predict_batch(self, states: np.ndarray, dtype=np.float64, chunk: int = 8192) -> np.ndarray:
        states = np.atleast_2d(states)
        W1 = self.W1.astype(dtype)
        b1 = self.b1.astype(dtype)
        W2 = self.W2.astype(dtype)
        out = np.empty(states.shape[0], dtype=np.float64)
        for s in range(0, states.shape[0], chunk):
            h = self._preact(self._columns(states[s : s + chunk]), W1, b1)
            np.maximum(h, 0, out=h)
            h *= W2
            out[s : s + chunk] = h.sum(axis=1) + self.b2[0]
        return out

    def predict(self, state) -> float:
        return float(self.predict_batch(np.array([state]))[0])

    # -- training ----------------------------------------------------------

    def _forward(self, states: np.ndarray, y: np.ndarray) -> tuple:
        """Pre-activations, hidden activations and residuals ``f - y``."""
        z = self._preact(self._columns(states), self.W1, self.b1)
        h = np.maximum(z, 0)
        return z, h, (h * self.W2).sum(axis=1) + self.b2[0] - y

    def loss_and_grad(self, states: np.ndarray, y: np.ndarray, reduce: str = "mean") -> tuple:
        """Squared error and its gradient on a block of states.

        ``reduce="sum"`` gives ``sum (f - y)^2``; ``"mean"`` divides by the
        batch size.
        """
        states = np.atleast_2d(states)
        z, h, r = self._forward(states, y)
        scale = 1.0 if reduce == "sum" else 1.0 / max(len(y), 1)
        loss = float(r @ r) * scale
        g = 2.0 * scale * r
        gz = np.outer(g, self.W2) * (z > 0)
        X = encode_batch(states, _symbols(self.spec))
        grads = {
            "W1": X.T @ gz,
            "b1": gz.sum(axis=0),
            "W2": h.T @ g,
            "b2": np.array([g.sum()]),
        }
        return loss, grads

    def mse(self, states: np.ndarray, y: np.ndarray) -> float:
        r = self.predict_batch(states) - y
        return float(r @ r / len(r))

    # -- serialisation -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "n": self.n,
            "kind": self.spec.kind,
            "hidden_width": self.hidden,
            "activation": self.activation,
            "weights": {k: v.tolist() for k, v in self.params().items()},
            "seed": self.seed,
            "training_meta": self.meta,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)
            fh.write("\n")

    @classmethod
    def from_json(cls, d: dict, n: int | None = None) -> "DistanceEstimator":
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
        if n is not None and int(d["n"]) != n:
            raise ValueError(f"checkpoint is for n={d['n']}, expected n={n}")
        if d.get("activation", "relu") != "relu":
            raise ValueError("only relu checkpoints are supported")
        spec = GraphSpec(d.get("kind", "full"), int(d["n"]))
        w = {k: np.array(d["weights"][k], dtype=np.float64) for k in PARAMS}
        est = cls(spec, w["W1"], w["b1"], w["W2"], w["b2"].reshape(1), seed=int(d.get("seed", 0)), meta=d.get("training_meta", {}))
        if est.W1.shape != (spec.n * _symbols(spec), est.hidden) or est.W2.shape != (est.hidden,):
            raise ValueError("checkpoint weight shapes are inconsistent")
        if not all(np.isfinite(v).all() for v in w.values()):
            raise ValueError("checkpoint holds non-finite weights")
        return est

    @classmethod
    def load(cls, path, n: int | None = None) -> "DistanceEstimator":
        with open(path) as fh:
            return cls.from_json(json.load(fh), n)


class _Optimizer:
    def __init__(self, est: DistanceEstimator, cfg: ModelConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in est.params().items()}
        self.v = {k: np.zeros_like(v) for k, v in est.params().items()}

    def step(self, est: DistanceEstimator, grads: dict) -> None:
        c = self.cfg
        if c.optimizer == "sgd":
            for k, g in grads.items():
                getattr(est, k)[...] -= c.lr * g
            return
        self.t += 1
        b1t = 1 - c.beta1**self.t
        b2t = 1 - c.beta2**self.t
        for k, g in grads.items():
            self.m[k] = c.beta1 * self.m[k] + (1 - c.beta1) * g
            self.v[k] = c.beta2 * self.v[k] + (1 - c.beta2) * g * g
            getattr(est, k)[...] -= c.lr * (self.m[k] / b1t) / (np.sqrt(self.v[k] / b2t) + c.eps)


def _epoch(est, opt, states, targets, cfg: ModelConfig, rng) -> None:
    order = rng.permutation(len(targets))
    for s in range(0, len(order), cfg.batch_size):
        idx = order[s : s + cfg.batch_size]
        _, grads = est.loss_and_grad(states[idx], targets[idx])
        opt.step(est, grads)


def train_warmup(
    ts: TrainingSet,
    cfg: ModelConfig,
    est: DistanceEstimator | None = None,
    history: list | None = None,
) -> DistanceEstimator:
    """Regress walk step labels with minibatch Adam.

    ``history`` (if given) receives the full-set MSE before training and after
    each epoch.
    """
    if len(ts) == 0:
        raise ValueError("empty training set")
    est = est.copy() if est is not None else DistanceEstimator.init(ts.spec, cfg.hidden, cfg.seed)
    opt = _Optimizer(est, cfg)
    rng = np.random.default_rng([cfg.seed, 2])
    y = ts.labels.astype(np.float64)
    if history is not None:
        history.append(est.mse(ts.states, y))
    for _ in range(cfg.epochs_warmup):
        _epoch(est, opt, ts.states, y, cfg, rng)
        if history is not None:
            history.append(est.mse(ts.states, y))
    est.meta = {**est.meta, "warmup": {"model": cfg.to_dict(), "walks": ts.cfg.to_dict(), "pairs": len(ts)}}
    return est


def bellman_targets(est: DistanceEstimator, states: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """``min(k, max(0, 1 + min over all three neighbours of f))``."""
    best = None
    for g in MOVES:
        f = est.predict_batch(batch_move(states, g))
        best = f if best is None else np.minimum(best, f)
    return np.clip(1.0 + best, 0.0, labels.astype(np.float64))


def train_dqn(
    spec: GraphSpec,
    est: DistanceEstimator,
    cfg: ModelConfig,
    walk_cfg: WalkConfig,
    threads: int = 1,
    history: list | None = None,
) -> DistanceEstimator:
    """Modified DQN: each epoch draws fresh walks, freezes the current
    network to compute clipped targets, then makes one minibatch pass."""
    if est.n != spec.n or est.spec.kind != spec.kind:
        raise ValueError("estimator does not match the graph spec")
    est = est.copy()
    opt = _Optimizer(est, cfg)
    rng = np.random.default_rng([cfg.seed, 3])
    for epoch in range(cfg.epochs_dqn):
        wc = replace(walk_cfg, seed=int(np.random.SeedSequence([walk_cfg.seed, 7, epoch]).generate_state(1)[0]))
        ts = generate_walks(spec, wc, threads)
        targets = bellman_targets(est, ts.states, ts.labels)
        if history is not None:
            history.append(float(np.mean((est.predict_batch(ts.states) - targets) ** 2)))
        _epoch(est, opt, ts.states, targets, cfg, rng)
    est.meta = {**est.meta, "dqn": {"model": cfg.to_dict(), "walks": walk_cfg.to_dict()}}
    return est


def gradient_check(est: DistanceEstimator, states: np.ndarray, targets: np.ndarray, h: float = 1e-5) -> dict:
    """Max relative error between analytic and central-difference gradients,
    per parameter block, for the summed squared error.

    An entry whose +-h stencil moves some hidden pre-activation across zero
    sits on a ReLU kink, where the loss has no derivative; such entries are
    skipped and counted under ``"kinks"``.  The loss difference is taken
    sample by sample, ``sum (r+ - r-)(r+ + r-)``, which keeps roundoff at the
    scale of single residuals.
    """
    states = np.atleast_2d(states)
    y = np.asarray(targets, dtype=np.float64)
    _, grads = est.loss_and_grad(states, y, reduce="sum")
    X = encode_batch(states, _symbols(est.spec))
    near = np.abs(est._preact(est._columns(states), est.W1, est.b1)) < h
    kink = {
        "W1": (X.T @ near) > 0,
        "b1": near.any(axis=0),
        "W2": np.zeros(est.W2.shape, dtype=bool),
        "b2": np.zeros(1, dtype=bool),
    }
    out = {}
    for k in PARAMS:
        P = getattr(est, k)
        num = np.empty_like(P)
        flat = P.reshape(-1)
        nflat = num.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            rp = est._forward(states, y)[2]
            flat[i] = old - h
            rm = est._forward(states, y)[2]
            flat[i] = old
            # same central difference, summed per sample to avoid cancelling two large totals
            nflat[i] = float((rp - rm) @ (rp + rm)) / (2 * h)
        a = grads[k]
        rel = np.abs(a - num) / np.maximum(np.abs(a) + np.abs(num), 1e-8)
        rel[kink[k]] = 0.0
        out[k] = float(rel.max())
    out["max"] = max(out.values())
    out["kinks"] = int(sum(int(m.sum()) for m in kink.values()))
    return out
