"""Seeded synthetic datasets: perturbed reliability parameters with FV labels."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from fvkit import quant
from fvkit.errors import FvkitError, InputError, SampleError
from fvkit.ftree import (
    FaultTree,
    Frequency,
    ReliabilityParam,
    numeric_fields,
    with_fields,
)
from fvkit.resources import read_text

Z95 = 1.6449  # standard-normal 95th percentile


@dataclass(frozen=True)
class LognormalSpec:
    """Lognormal by median and error factor (95th percentile / median)."""

    median: float
    error_factor: float

    def __post_init__(self):
        if not (self.median > 0 and math.isfinite(self.median)):
            raise InputError(f"median must be positive, got {self.median!r}")
        if not (self.error_factor >= 1 and math.isfinite(self.error_factor)):
            raise InputError(f"error factor must be >= 1, got {self.error_factor!r}")

    @property
    def sigma(self) -> float:
        return math.log(self.error_factor) / Z95


def lognormal_sample(spec: LognormalSpec, rng: np.random.Generator, size=None):
    if spec.error_factor == 1.0:
        return spec.median if size is None else np.full(size, spec.median)
    draw = rng.normal(math.log(spec.median), spec.sigma, size)
    return float(np.exp(draw)) if size is None else np.exp(draw)


@dataclass(frozen=True)
class PerturbSpec:
    base: Mapping[str, ReliabilityParam | float]
    n_samples: int = 1
    seed: int = 0
    factor_low: float = 10 ** -0.5
    factor_high: float = 10 ** 0.5
    law: str = "loguniform"  # or "lognormal": median = base value
    error_factor: float = 3.0

    def __post_init__(self):
        if not (self.factor_low > 0 and self.factor_high > 0):
            raise InputError("perturbation factors must be positive")
        if self.factor_low > self.factor_high:
            raise InputError("factor_low must not exceed factor_high")
        if int(self.n_samples) < 1:
            raise InputError("n_samples must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if self.law not in ("loguniform", "lognormal"):
            raise InputError(f"unknown perturbation law {self.law!r}")
        if self.law == "lognormal" and self.error_factor < 1:
            raise InputError("error factor must be >= 1")


def sample_rng(seed: int, sample_id: int) -> np.random.Generator:
    """Counter-based stream for one sample: Philox keyed by the seed, offset by sample id."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, 0, 0, int(sample_id)]))


def _factor(spec: PerturbSpec, rng: np.random.Generator, value: float) -> float:
    if spec.law == "lognormal":
        if value <= 0:
            return value
        return lognormal_sample(LognormalSpec(value, spec.error_factor), rng)
    if spec.factor_low == spec.factor_high:
        return value * spec.factor_low
    lo, hi = math.log(spec.factor_low), math.log(spec.factor_high)
    return value * math.exp(rng.uniform(lo, hi))


def perturb(spec: PerturbSpec, rng: np.random.Generator) -> dict[str, ReliabilityParam]:
    """Multiply every reliability field by a random factor; probabilities and betas capped at 1.

    Bare numbers in ``spec.base`` are treated as scalar parameters and
    scaled without a cap.

    Events are visited in name order and fields in declaration order, so the
    draw sequence is fixed for a given base map.
    """
    out = {}
    for name in sorted(spec.base):
        param = spec.base[name]
        if isinstance(param, (int, float)):
            out[name] = _factor(spec, rng, float(param))
            continue
        values = {}
        for key, value in numeric_fields(param).items():
            v = _factor(spec, rng, value)
            if key in ("p", "beta"):
                v = min(v, 1.0)
            values[key] = v
        out[name] = with_fields(param, values)
    return out


@dataclass
class Dataset:
    events: list[str]
    samples: list[dict]  # {"sample_id", "q", "fv"}
    edges: list[tuple[str, str]] = field(default_factory=list)
    seed: int = 0
    tree_hash: str = ""
    method: str = "mcub"

    def __len__(self):
        return len(self.samples)

    def q_matrix(self, idx: Sequence[int] | None = None) -> np.ndarray:
        rows = self.samples if idx is None else [self.samples[i] for i in idx]
        return np.array([[s["q"][e] for e in self.events] for s in rows], dtype=np.float64)

    def fv_matrix(self, idx: Sequence[int] | None = None) -> np.ndarray:
        rows = self.samples if idx is None else [self.samples[i] for i in idx]
        return np.array([[s["fv"][e] for e in self.events] for s in rows], dtype=np.float64)

    def to_jsonl(self) -> str:
        meta = {"meta": {"seed": self.seed, "tree_hash": self.tree_hash, "method": self.method,
                         "events": list(self.events), "edges": [list(e) for e in self.edges]}}
        lines = [json.dumps(meta)]
        for s in self.samples:
            lines.append(json.dumps({
                "sample_id": s["sample_id"],
                "q": {e: _sig9(s["q"][e]) for e in self.events},
                "fv": {e: _sig9(s["fv"][e]) for e in self.events},
            }))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> Dataset:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise InputError("empty dataset")
        try:
            meta = json.loads(lines[0])["meta"]
            samples = [json.loads(ln) for ln in lines[1:]]
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"malformed dataset: {exc}") from None
        events = list(meta["events"])
        for s in samples:
            if set(s.get("q", {})) != set(events) or set(s.get("fv", {})) != set(events):
                raise InputError(f"sample {s.get('sample_id')} does not cover the event set")
        return cls(events, samples, [tuple(e) for e in meta.get("edges", [])],
                   meta.get("seed", 0), meta.get("tree_hash", ""), meta.get("method", "mcub"))

    def with_edges(self, edges: Iterable[tuple[str, str]]) -> Dataset:
        return Dataset(self.events, self.samples, list(edges), self.seed, self.tree_hash, self.method)


def _sig9(x: float) -> float:
    return float(f"{float(x):.9g}")


def generate(tree: FaultTree, spec: PerturbSpec, method: quant.Method | str = quant.Method.MCUB,
             edges: Iterable[tuple[str, str]] = ()) -> Dataset:
    """Perturb, quantify and label ``spec.n_samples`` samples.

    Each sample draws from its own counter-based stream, so any subset of
    samples can be regenerated independently of the others.
    """
    method = quant.Method.coerce(method)
    cuts = quant.minimal_cut_sets(tree)
    events = list(tree.ranked_events)
    samples = []
    for sid in range(int(spec.n_samples)):
        try:
            params = perturb(spec, sample_rng(spec.seed, sid))
            q = tree.with_params(params).unavailabilities()
            res = quant.fv_importance(tree, q, method, cuts=cuts)
        except FvkitError as exc:
            raise SampleError(sid, exc) from exc
        samples.append({"sample_id": sid,
                        "q": {e: _sig9(q[e]) for e in events},
                        "fv": {e: _sig9(res.fv_cutset[e]) for e in events}})
    return Dataset(events, samples, [tuple(e) for e in edges], int(spec.seed), tree.digest(), method.value)


def spec_for_tree(tree: FaultTree, n_samples: int, seed: int, **kw) -> PerturbSpec:
    base = {e.name: e.param for e in tree.events if not isinstance(e.param, Frequency)}
    return PerturbSpec(base=base, n_samples=n_samples, seed=seed, **kw)


def table_parameters() -> dict[str, float]:
    """The ten initial parameters of the case-study plant, by parameter name."""
    return {row["name"]: float(row["value"])
            for row in csv.DictReader(io.StringIO(read_text("table_parameters.csv")))}
