"""GCN and MLP regressors with hand-written forward and backward passes.

Both models map per-event probabilities to per-event FV estimates. Inputs
are log10-probabilities standardised with one scalar mean/std fitted on the
training split; a single scalar keeps the GCN permutation equivariant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from fvkit.errors import DimensionMismatch, InputError, UnknownNode

LOG_FLOOR = 1e-12
GCN_HIDDEN = 32
MLP_HIDDEN = (64, 64, 64)


AGGREGATIONS = ("out", "in", "both")


def normalize_adjacency(edges: Iterable[tuple[str, str]], nodes: Sequence[str],
                        self_loops: bool = True, direction: str = "both") -> np.ndarray:
    """Row-normalised adjacency D^-1 (A [+ I]).

    ``direction`` picks whose features a node averages for an edge u -> v:
    "out" lets u read v (successors), "in" lets v read u (predecessors) and
    "both" inserts the edge symmetrically. A node left with no neighbours
    (possible only without self loops) gets an identity row.
    """
    if direction not in AGGREGATIONS:
        raise InputError(f"unknown aggregation {direction!r}; expected one of {AGGREGATIONS}")
    pos = {n: i for i, n in enumerate(nodes)}
    a = np.zeros((len(nodes), len(nodes)))
    for u, v in edges:
        if u not in pos or v not in pos:
            raise UnknownNode(f"edge ({u}, {v}) references a node outside {list(nodes)}")
        if u == v:
            continue
        if direction in ("out", "both"):
            a[pos[u], pos[v]] = 1.0
        if direction in ("in", "both"):
            a[pos[v], pos[u]] = 1.0
    if self_loops:
        a += np.eye(len(nodes))
    deg = a.sum(axis=1)
    for i in np.nonzero(deg == 0)[0]:
        a[i, i] = 1.0
        deg[i] = 1.0
    return a / deg[:, None]


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=(fan_in, fan_out))


@dataclass
class _Net:
    """Stack of affine layers, ReLU between them, identity output."""

    node_order: list[str]
    edges: list[tuple[str, str]]
    layer_dims: list[int]
    weights: list[np.ndarray]  # W1, b1, W2, b2, ...
    feat_mean: float = 0.0
    feat_std: float = 1.0
    extra: dict = field(default_factory=dict)  # train_config, split_indices, metrics

    kind = ""

    @property
    def n_layers(self) -> int:
        return len(self.weights) // 2

    def features(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        return (np.log10(np.clip(q, LOG_FLOOR, 1.0)) - self.feat_mean) / self.feat_std

    # subclass hooks
    def _input(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _mix(self, h: np.ndarray) -> np.ndarray:
        return h

    def _mix_t(self, g: np.ndarray) -> np.ndarray:
        return g

    def _output(self, z: np.ndarray) -> np.ndarray:
        return z

    def _output_t(self, g: np.ndarray, z_shape) -> np.ndarray:
        return g

    def forward(self, q: np.ndarray, cache: bool = False):
        """Raw (unclamped) output for a batch ``q`` of shape (samples, nodes)."""
        q = np.atleast_2d(np.asarray(q, dtype=np.float64))
        if q.shape[1] != len(self.node_order):
            raise DimensionMismatch(f"expected {len(self.node_order)} node values, got {q.shape[1]}")
        return self.forward_features(self.features(q), cache)

    def forward_features(self, x: np.ndarray, cache: bool = False):
        """Forward pass on already transformed node features of shape (samples, nodes)."""
        h = self._input(np.atleast_2d(x))
        trace = []
        for k in range(self.n_layers):
            h, p, z = self._layer(k, h)
            trace.append((p, z))
        out = self._output(h)
        return (out, trace) if cache else out

    def _layer(self, k: int, h: np.ndarray):
        w, b = self.weights[2 * k], self.weights[2 * k + 1]
        p = self._mix(h)
        z = p @ w + b
        h = np.maximum(z, 0.0) if k < self.n_layers - 1 else z
        return h, p, z

    def forward_from(self, k: int, z: np.ndarray) -> np.ndarray:
        """Continue a forward pass given the pre-activation of layer ``k``."""
        h = np.maximum(z, 0.0) if k < self.n_layers - 1 else z
        for j in range(k + 1, self.n_layers):
            h, _, _ = self._layer(j, h)
        return self._output(h)

    def predict(self, q: np.ndarray) -> np.ndarray:
        return np.clip(self.forward(q), 0.0, 1.0)

    def loss_and_grads(self, q: np.ndarray, y: np.ndarray):
        """Mean squared error over all samples and nodes, and its weight gradients."""
        out, trace = self.forward(q, cache=True)
        diff = out - y
        loss = float(np.mean(diff * diff))
        g = self._output_t(2.0 * diff / diff.size, trace[-1][1].shape)
        grads: list[np.ndarray] = [None] * len(self.weights)  # type: ignore[list-item]
        for k in reversed(range(self.n_layers)):
            p, z = trace[k]
            if k < self.n_layers - 1:
                g = g * (z > 0)
            di, do = p.shape[-1], g.shape[-1]
            grads[2 * k] = p.reshape(-1, di).T @ g.reshape(-1, do)
            grads[2 * k + 1] = g.reshape(-1, do).sum(axis=0)
            if k:
                g = self._mix_t(g @ self.weights[2 * k].T)
        return loss, grads

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "node_order": list(self.node_order),
            "edges": [list(e) for e in self.edges],
            "layer_dims": list(self.layer_dims),
            "weights": [{"shape": list(w.shape), "data": w.ravel().tolist()} for w in self.weights],
            "normalization": {"transform": "log10", "floor": LOG_FLOOR,
                              "mean": self.feat_mean, "std": self.feat_std},
            **self.extra,
        }


@dataclass
class GcnModel(_Net):
    """Three graph-convolution layers: H' = act(Â H W + b) with Â = D^-1 (A + I).

    By default each event aggregates over itself and its successors in the
    dependency graph; see :func:`normalize_adjacency` for the alternatives.
    """

    self_loops: bool = True
    aggregation: str = "out"
    kind = "gcn"

    def __post_init__(self):
        self.adj = normalize_adjacency(self.edges, self.node_order, self.self_loops, self.aggregation)

    def _input(self, x):
        return x[..., None]

    @staticmethod
    def _propagate(a, h):
        # (n, n) x (samples, n, d) -> (samples, n, d) as a single matrix product
        s, n, d = h.shape
        out = a @ h.transpose(1, 0, 2).reshape(n, s * d)
        return out.reshape(n, s, d).transpose(1, 0, 2)

    def _mix(self, h):
        return self._propagate(self.adj, h)

    def _mix_t(self, g):
        return self._propagate(self.adj.T, g)

    def _output(self, z):
        return z[..., 0]

    def _output_t(self, g, z_shape):
        return g[..., None]

    def to_dict(self):
        d = super().to_dict()
        d["self_loops"] = self.self_loops
        d["aggregation"] = self.aggregation
        return d


@dataclass
class MlpModel(_Net):
    """Dense network on concat(probability features, flattened symmetric adjacency)."""

    kind = "mlp"

    def __post_init__(self):
        n = len(self.node_order)
        pos = {v: i for i, v in enumerate(self.node_order)}
        a = np.zeros((n, n))
        for u, v in self.edges:
            if u not in pos or v not in pos:
                raise UnknownNode(f"edge ({u}, {v}) references an unknown node")
            if u != v:
                a[pos[u], pos[v]] = a[pos[v], pos[u]] = 1.0
        self.adj_flat = a.ravel()

    def _input(self, x):
        return np.concatenate([x, np.broadcast_to(self.adj_flat, (x.shape[0], self.adj_flat.size))], axis=1)


def init_model(kind: str, node_order: Sequence[str], edges: Iterable[tuple[str, str]],
               rng: np.random.Generator, self_loops: bool = True, aggregation: str = "out"):
    node_order = list(node_order)
    edges = [tuple(e) for e in edges]
    n = len(node_order)
    if kind == "gcn":
        dims = [1, GCN_HIDDEN, GCN_HIDDEN, 1]
    elif kind == "mlp":
        dims = [n + n * n, *MLP_HIDDEN, n]
    else:
        raise InputError(f"unknown model kind {kind!r}")
    weights = []
    for a, b in zip(dims[:-1], dims[1:]):
        weights.append(glorot(rng, a, b))
        weights.append(np.zeros(b))
    if kind == "gcn":
        return GcnModel(node_order, edges, dims, weights, self_loops=self_loops, aggregation=aggregation)
    return MlpModel(node_order, edges, dims, weights)


def model_from_dict(d: dict):
    try:
        kind = d["kind"]
        weights = [np.array(w["data"], dtype=np.float64).reshape(w["shape"]) for w in d["weights"]]
        norm = d.get("normalization", {})
        extra = {k: d[k] for k in ("train_config", "split_indices", "metrics") if k in d}
        args = (list(d["node_order"]), [tuple(e) for e in d["edges"]], list(d["layer_dims"]), weights,
                float(norm.get("mean", 0.0)), float(norm.get("std", 1.0)), extra)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model file: {exc}") from None
    if kind == "gcn":
        return GcnModel(*args, self_loops=bool(d.get("self_loops", True)),
                        aggregation=str(d.get("aggregation", "out")))
    if kind == "mlp":
        return MlpModel(*args)
    raise InputError(f"unknown model kind {kind!r}")
