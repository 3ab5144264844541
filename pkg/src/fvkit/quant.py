"""Minimal cut sets, top-event probability and Fussell-Vesely importance."""
from __future__ import annotations

import enum
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from fvkit import _kernels
from fvkit.errors import (
    CombinatorialLimit,
    ExactTooLarge,
    InputError,
    MissingProbability,
    TooManyEvents,
)
from fvkit.ftree import FaultTree

log = logging.getLogger(__name__)

DEFAULT_CUTSET_CAP = 10**6
EXACT_MAX_CUTS = 20
BRUTE_FORCE_MAX_EVENTS = 20


class Method(str, enum.Enum):
    RARE = "rare"
    MCUB = "mcub"
    EXACT = "exact"

    @classmethod
    def coerce(cls, value) -> Method:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InputError(f"unknown method {value!r}; expected rare, mcub or exact") from None


@dataclass(frozen=True)
class CutSetList:
    """Minimal cut sets, each a sorted tuple of event names.

    Sets are ordered by size, then lexicographically.
    """

    sets: tuple[tuple[str, ...], ...]

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def probabilities(self, q: Mapping[str, float]) -> list[float]:
        _require(q, self.sets)
        return [math.prod(q[e] for e in cs) for cs in self.sets]

    def containing(self, event: str) -> CutSetList:
        return CutSetList(tuple(cs for cs in self.sets if event in cs))

    def events(self) -> set[str]:
        return {e for cs in self.sets for e in cs}


@dataclass
class FvResult:
    fv_cutset: dict[str, float]
    fv_exact: dict[str, float]
    top_probability: float
    method: Method
    probability: dict[str, float] = field(default_factory=dict)

    def ranking(self) -> list[str]:
        """Events by fv_cutset descending, name ascending on ties."""
        return sorted(self.fv_cutset, key=lambda e: (-self.fv_cutset[e], e))


def _require(q, sets):
    for cs in sets:
        for e in cs:
            if e not in q:
                raise MissingProbability(f"no probability for event {e!r}")


def cutset_cap() -> int:
    raw = os.environ.get("FVKIT_CUTSET_CAP")
    if not raw:
        return DEFAULT_CUTSET_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InputError(f"FVKIT_CUTSET_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise InputError("FVKIT_CUTSET_CAP must be >= 1")
    return cap


def minimal_cut_sets(tree: FaultTree, max_order: int | None = None,
                     cap: int | None = None) -> CutSetList:
    """Top-down substitution: an OR gate branches the row, an AND gate extends it.

    Rows are (event bitmask, pending gates). Completed rows are de-duplicated
    and absorbed. Rows exceeding ``max_order`` events are pruned early, which
    is exact for coherent trees since rows only ever gain events.
    """
    if cap is None:
        cap = cutset_cap()
    if max_order is not None and max_order < 1:
        raise InputError("max_order must be >= 1")
    names = tree.event_names
    index = tree.event_index
    gate_ids = {g.name: i for i, g in enumerate(tree.gates)}
    gates = tree.gates

    rows: list[tuple[int, frozenset[int]]] = [(0, frozenset([gate_ids[tree.top]]))]
    done: set[int] = set()
    while rows:
        if len(rows) + len(done) > cap:
            raise CombinatorialLimit(f"more than {cap} intermediate cut-set rows")
        mask, pending = rows.pop()
        if not pending:
            done.add(mask)
            continue
        g = min(pending)
        rest = pending - {g}
        gate = gates[g]
        if gate.op == "AND":
            for c in gate.children:
                if c in index:
                    mask |= 1 << index[c]
                else:
                    rest = rest | {gate_ids[c]}
            if max_order is None or mask.bit_count() <= max_order:
                rows.append((mask, rest))
        else:
            for c in gate.children:
                if c in index:
                    m = mask | 1 << index[c]
                    if max_order is None or m.bit_count() <= max_order:
                        rows.append((m, rest))
                else:
                    rows.append((mask, rest | {gate_ids[c]}))

    ordered = sorted(done, key=lambda m: (m.bit_count(), m))
    kept = _kernels.for_events(len(names)).absorb(
        np.array(ordered, dtype=np.uint64) if len(names) <= 64 else ordered)
    sets = [tuple(sorted(names[i] for i in range(len(names)) if m >> i & 1)) for m in kept]
    sets.sort(key=lambda cs: (len(cs), cs))
    return CutSetList(tuple(sets))


def _masks(sets, order):
    pos = {e: i for i, e in enumerate(order)}
    return [sum(1 << pos[e] for e in cs) for cs in sets]


def _mcub(probs: Sequence[float]) -> float:
    # 1 - prod(1 - Q_k), evaluated without cancellation for small Q_k
    acc = 0.0
    for p in probs:
        if p >= 1.0:
            return 1.0
        acc += math.log1p(-p)
    return -math.expm1(acc)


def top_probability(cuts: CutSetList, q: Mapping[str, float],
                    method: Method | str = Method.MCUB) -> float:
    method = Method.coerce(method)
    if method is Method.EXACT:
        if len(cuts) > EXACT_MAX_CUTS:
            raise ExactTooLarge(f"exact quantification limited to {EXACT_MAX_CUTS} cut sets, got {len(cuts)}")
        _require(q, cuts.sets)
        order = sorted(cuts.events())
        qv = np.array([q[e] for e in order], dtype=np.float64)
        masks = np.array(_masks(cuts.sets, order), dtype=np.uint64)
        return min(1.0, max(0.0, float(_kernels.inclusion_exclusion(qv, masks))))
    probs = cuts.probabilities(q)
    if method is Method.RARE:
        return math.fsum(probs)
    return _mcub(probs)


def fv_importance(tree: FaultTree, q: Mapping[str, float] | None = None,
                  method: Method | str = Method.MCUB,
                  cuts: CutSetList | None = None) -> FvResult:
    """Fussell-Vesely importance of every ranked event.

    ``fv_cutset`` is the share of the top probability carried by cut sets
    containing the event (same method for numerator and denominator);
    ``fv_exact`` is the relative drop of the MCUB top probability when the
    event is made perfectly reliable.
    """
    method = Method.coerce(method)
    if q is None:
        q = tree.unavailabilities()
    if cuts is None:
        cuts = minimal_cut_sets(tree)
    _require(q, cuts.sets)
    ranked = tree.ranked_events
    total = top_probability(cuts, q, method)
    total_mcub = total if method is Method.MCUB else top_probability(cuts, q, Method.MCUB)

    fv_c: dict[str, float] = {}
    fv_x: dict[str, float] = {}
    if total <= 0.0:
        log.warning("top probability is zero; all importances reported as 0")
    for e in ranked:
        sub = cuts.containing(e)
        if not sub.sets or total <= 0.0:
            fv_c[e] = 0.0
        else:
            fv_c[e] = min(1.0, max(0.0, top_probability(sub, q, method) / total))
        if not sub.sets or total_mcub <= 0.0:
            fv_x[e] = 0.0
        else:
            q0 = dict(q)
            q0[e] = 0.0
            fv_x[e] = min(1.0, max(0.0, 1.0 - top_probability(cuts, q0, Method.MCUB) / total_mcub))
    return FvResult(fv_c, fv_x, total, method, {e: float(q.get(e, 0.0)) for e in ranked})


def _gate_program(tree: FaultTree):
    n = len(tree.events)
    order = tree.topological_gates()
    pos = {g.name: i for i, g in enumerate(order)}
    ops = np.array([0 if g.op == "AND" else 1 for g in order], dtype=np.uint8)
    ptr = [0]
    kids: list[int] = []
    for g in order:
        for c in g.children:
            kids.append(tree.event_index[c] if c in tree.event_index else n + pos[c])
        ptr.append(len(kids))
    return ops, np.array(ptr, dtype=np.int64), np.array(kids, dtype=np.int64), pos[tree.top]


def failure_states(tree: FaultTree, backend=None) -> np.ndarray:
    """Top-gate value (0/1) for every one of the 2**n event states."""
    n = len(tree.events)
    if n > BRUTE_FORCE_MAX_EVENTS:
        raise TooManyEvents(f"brute-force enumeration limited to {BRUTE_FORCE_MAX_EVENTS} events, got {n}")
    k = backend or _kernels.impl
    return k.failure_table(n, *_gate_program(tree))


def brute_force_cut_sets(tree: FaultTree, backend=None) -> CutSetList:
    """Minimal cut sets found by exhaustive state enumeration."""
    k = backend or _kernels.impl
    n = len(tree.events)
    fail = failure_states(tree, k)
    names = tree.event_names
    sets = [tuple(sorted(names[i] for i in range(n) if int(s) >> i & 1))
            for s in k.minimal_states(fail, n)]
    sets.sort(key=lambda cs: (len(cs), cs))
    return CutSetList(tuple(sets))


def brute_force_fv(tree: FaultTree, q: Mapping[str, float] | None = None,
                   backend=None) -> FvResult:
    """Independent oracle by enumeration of all 2**n event states.

    The cut sets used for the numerator are the minimal failure states of
    the enumeration itself, not the output of :func:`minimal_cut_sets`.
    ``fv_exact`` is recomputed from exact top probabilities with q_i = 0.
    """
    k = backend or _kernels.impl
    if q is None:
        q = tree.unavailabilities()
    names = tree.event_names
    n = len(names)
    missing = [e for e in names if e not in q]
    if missing:
        raise MissingProbability(f"no probability for events {missing}")
    fail = failure_states(tree, k)
    masks = np.asarray(k.minimal_states(fail, n), dtype=np.uint64)
    qv = np.array([q[e] for e in names], dtype=np.float64)
    top, num = k.state_sums(qv, masks, fail, n)
    empty = np.zeros(0, dtype=np.uint64)

    fv_c, fv_x = {}, {}
    for e in tree.ranked_events:
        i = tree.event_index[e]
        if top <= 0.0:
            fv_c[e] = fv_x[e] = 0.0
            continue
        fv_c[e] = min(1.0, max(0.0, float(num[i] / top)))
        q0 = qv.copy()
        q0[i] = 0.0
        top0, _ = k.state_sums(q0, empty, fail, n)
        fv_x[e] = min(1.0, max(0.0, float(1.0 - top0 / top)))
    return FvResult(fv_c, fv_x, float(top), Method.EXACT, {e: float(q[e]) for e in tree.ranked_events})
