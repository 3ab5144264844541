"""Full-batch training, finite-difference gradient check and prediction."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from fvkit.datagen import Dataset
from fvkit.errors import InputError, MissingEvent, NonFiniteLoss, TooFewSamples
from fvkit.neural.metrics import Metrics, evaluate
from fvkit.neural.models import AGGREGATIONS, _Net, init_model

MIN_SAMPLES = 10


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 2000
    train_fraction: float = 0.8
    seed: int = 0
    optimizer: str = "adam"  # or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int | None = None  # early stopping on held-out MSE
    self_loops: bool = True
    aggregation: str = "out"  # gcn message direction: out, in or both

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise InputError("train_fraction must lie strictly between 0 and 1")
        # zero is allowed: it leaves the initial weights untouched
        if not (self.learning_rate >= 0.0 and math.isfinite(self.learning_rate)):
            raise InputError("learning_rate must be finite and non-negative")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise InputError(f"unknown optimizer {self.optimizer!r}")
        if self.aggregation not in AGGREGATIONS:
            raise InputError(f"unknown aggregation {self.aggregation!r}")
        if self.patience is not None and self.patience < 1:
            raise InputError("patience must be >= 1")


def split_indices(n: int, cfg: TrainConfig) -> tuple[list[int], list[int]]:
    perm = np.random.default_rng([cfg.seed, 0]).permutation(n)
    n_train = min(n - 1, max(1, int(round(cfg.train_fraction * n))))
    return sorted(int(i) for i in perm[:n_train]), sorted(int(i) for i in perm[n_train:])


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= c.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + c.eps)


class _Sgd:
    def __init__(self, params, cfg):
        self.lr = cfg.learning_rate

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


def train(kind: str, data: Dataset, cfg: TrainConfig = TrainConfig(),
          edges: Sequence[tuple[str, str]] | None = None):
    """Fit a GCN or MLP to the dataset's FV labels; returns (model, loss trace).

    ``edges`` overrides the adjacency stored in the dataset. An explicitly
    passed empty list is accepted and leaves each GCN node with its self loop.
    """
    if len(data) < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples, got {len(data)}")
    if kind == "gcn" and edges is None and not data.edges:
        raise InputError("GCN training needs an adjacency (dataset edges or --edges)")
    edges = list(data.edges if edges is None else edges)
    train_idx, test_idx = split_indices(len(data), cfg)
    q_tr, y_tr = data.q_matrix(train_idx), data.fv_matrix(train_idx)
    q_te, y_te = data.q_matrix(test_idx), data.fv_matrix(test_idx)

    model = init_model(kind, data.events, edges, np.random.default_rng([cfg.seed, 1]),
                       cfg.self_loops, cfg.aggregation)
    logq = np.log10(np.clip(q_tr, 1e-12, 1.0))
    model.feat_mean = float(logq.mean())
    std = float(logq.std())
    model.feat_std = std if std > 0 else 1.0

    params = model.weights
    opt = _Adam(params, cfg) if cfg.optimizer == "adam" else _Sgd(params, cfg)
    trace: list[float] = []
    best = (math.inf, None)
    since_best = 0
    for epoch in range(cfg.epochs):
        loss, grads = model.loss_and_grads(q_tr, y_tr)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise NonFiniteLoss(epoch)
        trace.append(loss)
        opt.step(params, grads)
        if cfg.patience:
            held = float(np.mean((model.forward(q_te) - y_te) ** 2))
            if held < best[0]:
                best = (held, [p.copy() for p in params])
                since_best = 0
            else:
                since_best += 1
                if since_best >= cfg.patience:
                    break
    if cfg.patience and best[1] is not None:
        for p, saved in zip(params, best[1]):
            p[...] = saved

    metrics = evaluate(model.predict(q_te), y_te)
    model.extra = {
        "train_config": asdict(cfg),
        "split_indices": {"train": train_idx, "test": test_idx},
        "metrics": metrics.as_dict(),
    }
    return model, trace


def heldout_metrics(model: _Net, data: Dataset) -> Metrics:
    """Metrics on the model's recorded held-out split of ``data``."""
    idx = model.extra.get("split_indices", {}).get("test")
    if not idx:
        idx = list(range(len(data)))
    if max(idx) >= len(data):
        raise InputError("dataset is smaller than the model's recorded split")
    q = _align(model, data).q_matrix(idx)
    y = _align(model, data).fv_matrix(idx)
    return evaluate(model.predict(q), y)


def _align(model: _Net, data: Dataset) -> Dataset:
    missing = set(model.node_order) - set(data.events)
    if missing:
        raise MissingEvent(f"dataset lacks events {sorted(missing)}")
    return Dataset(list(model.node_order), data.samples, data.edges)


def predict(model: _Net, q: Mapping[str, float]):
    """FV estimates clamped to [0, 1] plus the event ranking.

    The ranking orders by the raw network output (descending, then name), so
    events clamped to the same bound keep the order the network assigns them.
    """
    missing = [e for e in model.node_order if e not in q]
    if missing:
        raise MissingEvent(f"no probability for {missing}")
    x = np.array([[q[e] for e in model.node_order]], dtype=np.float64)
    raw = model.forward(x)[0]
    est = np.clip(raw, 0.0, 1.0)
    fv = {e: float(v) for e, v in zip(model.node_order, est)}
    order = sorted(range(len(raw)), key=lambda i: (-raw[i], model.node_order[i]))
    return fv, [model.node_order[i] for i in order]


def gradient_check(model: _Net, q: Sequence[float], y: Sequence[float], h: float = 1e-5) -> float:
    """Max relative error between backprop gradients and central differences.

    Perturbing weight (i, j) of layer k shifts that layer's pre-activation
    column j by ±h times input column i, so each weight tensor is checked with
    one batched forward pass over all of its perturbations.
    """
    q = np.asarray(q, dtype=np.float64).reshape(1, -1)
    y = np.asarray(y, dtype=np.float64).reshape(1, -1)
    _, grads = model.loss_and_grads(q, y)
    _, trace = model.forward(q, cache=True)

    def losses(k, z_batch):
        out = model.forward_from(k, z_batch)
        d = out - y
        return np.mean((d * d).reshape(len(z_batch), -1), axis=1)

    worst = 0.0
    for k in range(model.n_layers):
        p, z = trace[k]  # p: (1, ..., di), z: (1, ..., do)
        di, do = model.weights[2 * k].shape
        # perturbation index = i * do + j, matching W.ravel()
        if p.ndim == 3:  # gcn: (nodes, di) -> shifts of shape (di*do, nodes, do)
            shift = np.einsum("ni,jk->ijnk", p[0], np.eye(do)).reshape(di * do, p.shape[1], do)
        else:  # mlp: (di,) -> (di*do, do)
            shift = np.einsum("i,jk->ijk", p[0], np.eye(do)).reshape(di * do, do)
        num_w = (losses(k, z + h * shift) - losses(k, z - h * shift)) / (2 * h)
        if p.ndim == 3:
            bshift = np.broadcast_to(np.eye(do)[:, None, :], (do, p.shape[1], do))
        else:
            bshift = np.eye(do)
        num_b = (losses(k, z + h * bshift) - losses(k, z - h * bshift)) / (2 * h)
        for ga, gn in ((grads[2 * k].ravel(), num_w), (grads[2 * k + 1].ravel(), num_b)):
            err = np.abs(ga - gn) / np.maximum(1e-8, np.abs(ga) + np.abs(gn))
            worst = max(worst, float(err.max()))
    return worst


def numeric_gradient(model: _Net, q, y, h: float = 1e-5) -> list[np.ndarray]:
    """Central differences by perturbing each weight in place (slow reference)."""
    q = np.asarray(q, dtype=np.float64).reshape(1, -1)
    y = np.asarray(y, dtype=np.float64).reshape(1, -1)
    out = []
    for w in model.weights:
        g = np.zeros_like(w)
        flat, gflat = w.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + h
            lp = float(np.mean((model.forward(q) - y) ** 2))
            flat[i] = old - h
            lm = float(np.mean((model.forward(q) - y) ** 2))
            flat[i] = old
            gflat[i] = (lp - lm) / (2 * h)
        out.append(g)
    return out
