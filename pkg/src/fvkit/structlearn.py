"""BDeu-scored greedy hill-climbing over binary DAGs, used as a data-driven structure baseline."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from fvkit.datagen import Dataset
from fvkit.errors import InputError, TooFewSamples, UnknownNode

DEFAULT_ESS = 1.0
DEFAULT_MAX_IN_DEGREE = 3
OPS = ("add", "delete", "reverse")  # already in tie-break order


@dataclass(frozen=True, eq=False)
class DiscreteDataset:
    names: tuple[str, ...]
    rows: np.ndarray  # (samples, variables), uint8 in {0, 1}

    def __post_init__(self):
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.names):
            raise InputError(f"rows of shape {self.rows.shape} do not match {len(self.names)} variables")
        if self.rows.size and not np.isin(self.rows, (0, 1)).all():
            raise InputError("discrete values must be 0 or 1")

    def __len__(self):
        return self.rows.shape[0]


def discretize(data: Dataset) -> DiscreteDataset:
    """Median split per event: 1 where q lies strictly above the column median."""
    if len(data) < 2:
        raise TooFewSamples(f"need at least 2 samples to discretize, got {len(data)}")
    q = data.q_matrix()
    return DiscreteDataset(tuple(data.events), (q > np.median(q, axis=0)).astype(np.uint8))


@dataclass(frozen=True)
class DagCandidate:
    nodes: tuple[str, ...]
    parents: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> DagCandidate:
        nodes = tuple(nodes)
        pa: dict[str, list[str]] = {n: [] for n in nodes}
        for u, v in edges:
            if u not in pa or v not in pa:
                raise UnknownNode(f"edge ({u}, {v}) references an unknown node")
            if u not in pa[v]:
                pa[v].append(u)
        return cls(nodes, {n: tuple(sorted(p)) for n, p in pa.items()})

    def parents_of(self, node: str) -> tuple[str, ...]:
        return self.parents.get(node, ())

    @property
    def edges(self) -> list[tuple[str, str]]:
        return sorted((p, c) for c in self.nodes for p in self.parents_of(c))

    def is_acyclic(self) -> bool:
        indeg = {n: len(self.parents_of(n)) for n in self.nodes}
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        for p, c in self.edges:
            children[p].append(c)
        ready = [n for n in self.nodes if indeg[n] == 0]
        seen = 0
        while ready:
            n = ready.pop()
            seen += 1
            for c in children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
        return seen == len(self.nodes)

    def max_in_degree(self) -> int:
        return max((len(self.parents_of(n)) for n in self.nodes), default=0)


def family_score(rows: np.ndarray, child: int, parents: Sequence[int], ess: float = DEFAULT_ESS) -> float:
    """BDeu term of one variable given its parent columns (all binary)."""
    n_cfg = 1 << len(parents)
    alpha_j = ess / n_cfg
    alpha_jk = alpha_j / 2.0
    cfg = np.zeros(rows.shape[0], dtype=np.int64)
    for k, p in enumerate(parents):
        cfg |= rows[:, p].astype(np.int64) << k
    counts = np.bincount(cfg * 2 + rows[:, child], minlength=2 * n_cfg).reshape(n_cfg, 2)
    total = 0.0
    for n0, n1 in counts:
        if n0 == 0 and n1 == 0:
            continue  # unobserved configurations contribute exactly zero
        total += math.lgamma(alpha_j) - math.lgamma(alpha_j + n0 + n1)
        total += math.lgamma(alpha_jk + n0) + math.lgamma(alpha_jk + n1) - 2.0 * math.lgamma(alpha_jk)
    return total


def bdeu_score(dag: DagCandidate, data: DiscreteDataset, ess: float = DEFAULT_ESS) -> float:
    """Sum of family scores; decomposes over variables by construction."""
    if not ess > 0:
        raise InputError("equivalent sample size must be positive")
    if set(dag.nodes) != set(data.names):
        raise InputError("DAG nodes must equal the dataset variables")
    pos = {n: i for i, n in enumerate(data.names)}
    return math.fsum(family_score(data.rows, pos[n], [pos[p] for p in dag.parents_of(n)], ess)
                     for n in data.names)


@dataclass
class HillClimbResult:
    dag: DagCandidate
    score: float
    trace: list[float]
    moves: list[tuple[str, str, str]]


class _Search:
    """Mutable parent sets plus a family-score cache for one data matrix."""

    def __init__(self, data: DiscreteDataset, ess: float, cap: int):
        self.data, self.ess, self.cap = data, ess, cap
        self.n = len(data.names)
        self.cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def family(self, child: int, parents: frozenset[int]) -> float:
        key = (child, tuple(sorted(parents)))
        if key not in self.cache:
            self.cache[key] = family_score(self.data.rows, child, key[1], self.ess)
        return self.cache[key]

    def total(self, pa: list[frozenset[int]]) -> float:
        return math.fsum(self.family(i, pa[i]) for i in range(self.n))

    @staticmethod
    def reaches(pa: list[frozenset[int]], src: int, dst: int, skip: tuple[int, int] | None = None) -> bool:
        """Directed path src -> ... -> dst, optionally ignoring one edge."""
        children: dict[int, list[int]] = {}
        for c, ps in enumerate(pa):
            for p in ps:
                if (p, c) != skip:
                    children.setdefault(p, []).append(c)
        stack, seen = [src], {src}
        while stack:
            u = stack.pop()
            if u == dst:
                return True
            for v in children.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False

    def moves(self, pa: list[frozenset[int]]):
        """Every legal single-edge operation with its score change."""
        for u in range(self.n):
            for v in range(self.n):
                if u == v:
                    continue
                if u in pa[v]:
                    yield ("delete", u, v), self.family(v, pa[v] - {u}) - self.family(v, pa[v])
                    if len(pa[u]) < self.cap and not self.reaches(pa, u, v, skip=(u, v)):
                        d = (self.family(v, pa[v] - {u}) - self.family(v, pa[v])
                             + self.family(u, pa[u] | {v}) - self.family(u, pa[u]))
                        yield ("reverse", u, v), d
                elif v not in pa[u] and len(pa[v]) < self.cap and not self.reaches(pa, v, u):
                    yield ("add", u, v), self.family(v, pa[v] | {u}) - self.family(v, pa[v])

    def climb(self, pa: list[frozenset[int]]):
        names = self.data.names
        trace = [self.total(pa)]
        applied = []
        while True:
            best = None
            for (op, u, v), delta in self.moves(pa):
                if delta <= 0:
                    continue
                key = (-delta, op, names[u], names[v])
                if best is None or key < best[0]:
                    best = (key, op, u, v)
            if best is None:
                break
            _, op, u, v = best
            nxt = list(pa)
            if op == "add":
                nxt[v] = pa[v] | {u}
            elif op == "delete":
                nxt[v] = pa[v] - {u}
            else:
                nxt[v] = pa[v] - {u}
                nxt[u] = pa[u] | {v}
            score = self.total(nxt)
            if not score > trace[-1]:  # guards against a rounding-level "improvement"
                break
            pa = nxt
            trace.append(score)
            applied.append((op, names[u], names[v]))
        return pa, trace, applied


def _random_start(n: int, cap: int, rng: np.random.Generator) -> list[frozenset[int]]:
    order = rng.permutation(n)
    pa: list[set[int]] = [set() for _ in range(n)]
    for j in range(n):
        for i in range(j):
            child, parent = int(order[j]), int(order[i])
            if len(pa[child]) < cap and rng.random() < 0.5:
                pa[child].add(parent)
    return [frozenset(p) for p in pa]


def hill_climb(data: DiscreteDataset, ess: float = DEFAULT_ESS,
               max_in_degree: int = DEFAULT_MAX_IN_DEGREE, seed: int = 0,
               restarts: int = 0) -> HillClimbResult:
    """Greedy add/delete/reverse search from the empty graph.

    Each step applies the largest strictly improving move; equal gains go to
    the lexicographically smallest (op, from, to). With ``restarts`` > 0 the
    search is repeated from seeded random DAGs and the best run is kept
    (earliest on equal scores).
    """
    if not ess > 0:
        raise InputError("equivalent sample size must be positive")
    if max_in_degree < 0:
        raise InputError("max_in_degree must be >= 0")
    if restarts < 0:
        raise InputError("restarts must be >= 0")
    search = _Search(data, ess, max_in_degree)
    n = len(data.names)
    starts = [[frozenset() for _ in range(n)]]
    rng = np.random.default_rng(seed)
    starts += [_random_start(n, max_in_degree, rng) for _ in range(restarts)]

    best = None
    for start in starts:
        pa, trace, applied = search.climb(start)
        if best is None or trace[-1] > best[1][-1]:
            best = (pa, trace, applied)
    pa, trace, applied = best
    names = data.names
    dag = DagCandidate(tuple(names), {names[i]: tuple(sorted(names[p] for p in pa[i])) for i in range(n)})
    return HillClimbResult(dag, trace[-1], trace, applied)


def edges_csv(dag: DagCandidate) -> str:
    return "from,to\n" + "".join(f"{u},{v}\n" for u, v in dag.edges)


def load_edges(text: str) -> list[tuple[str, str]]:
    """Read a ``from,to`` CSV (header optional)."""
    out = []
    for k, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not all(parts):
            raise InputError(f"edge file line {k}: expected 'from,to'")
        if k == 1 and parts == ["from", "to"]:
            continue
        out.append((parts[0], parts[1]))
    return out
