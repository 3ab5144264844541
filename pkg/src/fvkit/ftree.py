"""Fault-tree data model, text-format parser and unavailability models.

The text format is line oriented::

    # comment
    event SI-P2-DF prob=9.9e-01
    event SI-P1-RF rate=1.0e-6 mission=24
    event CCF beta=0.05 of=SI-P1-RF
    gate TOP OR G1 CCF
    top TOP
"""
from __future__ import annotations

import hashlib
import logging
import math
import re
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Iterable, Mapping, Union

from fvkit.errors import (
    CycleDetected,
    DuplicateName,
    FaultTreeSyntaxError,
    InputError,
    MissingTop,
    UnresolvedReference,
)

log = logging.getLogger(__name__)

NAME_RE = re.compile(r"[A-Za-z0-9_-]+\Z")
DEFAULT_MISSION = 24.0


def _check_nonneg(**values):
    for key, value in values.items():
        if not math.isfinite(value) or value < 0:
            raise InputError(f"{key} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class Probability:
    p: float

    def __post_init__(self):
        _check_nonneg(p=self.p)
        if self.p > 1:
            raise InputError(f"probability must be <= 1, got {self.p!r}")


@dataclass(frozen=True)
class FailureRate:
    rate: float
    mission: float = DEFAULT_MISSION

    def __post_init__(self):
        _check_nonneg(rate=self.rate, mission=self.mission)


@dataclass(frozen=True)
class Tested:
    """Periodically tested standby component, mean unavailability rate*tau/2."""

    rate: float
    tau: float

    def __post_init__(self):
        _check_nonneg(rate=self.rate, tau=self.tau)


@dataclass(frozen=True)
class Repairable:
    rate: float
    mttr: float

    def __post_init__(self):
        _check_nonneg(rate=self.rate, mttr=self.mttr)


@dataclass(frozen=True)
class Frequency:
    """Initiating-event frequency (1/year); quantified as a certain demand."""

    f: float

    def __post_init__(self):
        _check_nonneg(f=self.f)


@dataclass(frozen=True)
class CcfBeta:
    beta: float
    of: str

    def __post_init__(self):
        _check_nonneg(beta=self.beta)
        if self.beta > 1:
            raise InputError(f"beta must be <= 1, got {self.beta!r}")


ReliabilityParam = Union[Probability, FailureRate, Tested, Repairable, Frequency, CcfBeta]


def unavailability(param: ReliabilityParam,
                   resolve: Callable[[str], ReliabilityParam] | None = None) -> float:
    """Point unavailability of a basic event.

    ``resolve`` maps an event name to its parameter and is only needed for
    beta-factor events, whose value is ``beta`` times the unavailability of
    the referenced single component.
    """
    if isinstance(param, Probability):
        return param.p
    if isinstance(param, FailureRate):
        return -math.expm1(-param.rate * param.mission)
    if isinstance(param, Tested):
        return min(1.0, param.rate * param.tau / 2.0)
    if isinstance(param, Repairable):
        x = param.rate * param.mttr
        return x / (1.0 + x)
    if isinstance(param, Frequency):
        return 1.0
    if isinstance(param, CcfBeta):
        if resolve is None:
            raise InputError(f"beta-factor event needs the parameter of {param.of!r}")
        return param.beta * unavailability(resolve(param.of), resolve)
    raise TypeError(f"not a reliability parameter: {param!r}")


@dataclass(frozen=True)
class BasicEvent:
    name: str
    param: ReliabilityParam


@dataclass(frozen=True)
class Gate:
    name: str
    op: str  # "AND" | "OR"
    children: tuple[str, ...]


@dataclass(frozen=True)
class FaultTree:
    events: tuple[BasicEvent, ...]
    gates: tuple[Gate, ...]
    top: str

    def __post_init__(self):
        validate(self)

    @cached_property
    def event_index(self) -> dict[str, int]:
        return {e.name: i for i, e in enumerate(self.events)}

    @cached_property
    def gate_map(self) -> dict[str, Gate]:
        return {g.name: g for g in self.gates}

    @cached_property
    def event_names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events)

    @cached_property
    def ranked_events(self) -> tuple[str, ...]:
        """Events that take part in importance ranking (frequencies excluded)."""
        return tuple(e.name for e in self.events if not isinstance(e.param, Frequency))

    def param(self, name: str) -> ReliabilityParam:
        return self.events[self.event_index[name]].param

    def unavailabilities(self) -> dict[str, float]:
        return {e.name: unavailability(e.param, self.param) for e in self.events}

    def sequence_frequency(self) -> float:
        """Product of the frequencies of initiating events in the tree (1/year)."""
        out = 1.0
        for e in self.events:
            if isinstance(e.param, Frequency):
                out *= e.param.f
        return out

    def with_params(self, params: Mapping[str, ReliabilityParam]) -> FaultTree:
        events = tuple(BasicEvent(e.name, params.get(e.name, e.param)) for e in self.events)
        return FaultTree(events, self.gates, self.top)

    def with_probabilities(self, q: Mapping[str, float]) -> FaultTree:
        return self.with_params({k: Probability(float(v)) for k, v in q.items()})

    def topological_gates(self) -> list[Gate]:
        """Gates ordered so every gate follows all of its gate children."""
        order: list[Gate] = []
        seen: set[str] = set()

        def visit(name):
            if name in seen:
                return
            seen.add(name)
            gate = self.gate_map[name]
            for child in gate.children:
                if child in self.gate_map:
                    visit(child)
            order.append(gate)

        for g in self.gates:
            visit(g.name)
        return order

    def evaluate(self, failed: Iterable[str]) -> bool:
        """Boolean value of the top gate when exactly ``failed`` events occur."""
        failed = set(failed)
        value: dict[str, bool] = {}
        for gate in self.topological_gates():
            vals = [value[c] if c in value else c in failed for c in gate.children]
            value[gate.name] = all(vals) if gate.op == "AND" else any(vals)
        return value[self.top]

    def render(self) -> str:
        return render(self)

    def digest(self) -> str:
        return hashlib.sha256(render(self).encode()).hexdigest()


def validate(tree: FaultTree) -> None:
    names: set[str] = set()
    for item in (*tree.events, *tree.gates):
        if not NAME_RE.match(item.name):
            raise InputError(f"invalid name {item.name!r}")
        if item.name in names:
            raise DuplicateName(f"duplicate name {item.name!r}")
        names.add(item.name)
    events = {e.name: e for e in tree.events}
    gates = {g.name: g for g in tree.gates}
    for e in tree.events:
        if isinstance(e.param, CcfBeta):
            ref = events.get(e.param.of)
            if ref is None:
                raise UnresolvedReference(e.param.of)
            if isinstance(ref.param, CcfBeta):
                raise InputError(f"{e.name}: beta-factor reference {e.param.of!r} is itself a CCF event")
    for g in tree.gates:
        if g.op not in ("AND", "OR"):
            raise InputError(f"gate {g.name}: unknown operator {g.op!r}")
        if not g.children:
            raise InputError(f"gate {g.name} has no children")
        for c in g.children:
            if c not in names:
                raise UnresolvedReference(c)
    if tree.top not in gates:
        if tree.top in events:
            raise InputError(f"top {tree.top!r} must be a gate")
        raise MissingTop(f"top gate {tree.top!r} is not defined")

    cycle = _find_cycle(gates)
    if cycle:
        raise CycleDetected(cycle)

    reached: set[str] = set()
    stack = [tree.top]
    while stack:
        n = stack.pop()
        if n in reached:
            continue
        reached.add(n)
        if n in gates:
            stack.extend(gates[n].children)
    dangling = [e.name for e in tree.events if e.name not in reached]
    if dangling:
        log.warning("events not reachable from top %s: %s", tree.top, ", ".join(dangling))


def _find_cycle(gates: Mapping[str, Gate]) -> list[str] | None:
    state: dict[str, int] = {}  # 1 on stack, 2 done
    for root in sorted(gates):
        if root in state:
            continue
        path = [root]
        iters = [iter(gates[root].children)]
        state[root] = 1
        while iters:
            child = next(iters[-1], None)
            if child is None:
                state[path.pop()] = 2
                iters.pop()
                continue
            if child not in gates:
                continue
            s = state.get(child)
            if s == 1:
                return path[path.index(child):] + [child]
            if s is None:
                state[child] = 1
                path.append(child)
                iters.append(iter(gates[child].children))
    return None


_EVENT_FORMS: dict[frozenset, Callable[[dict], ReliabilityParam]] = {
    frozenset({"prob"}): lambda kv: Probability(float(kv["prob"])),
    frozenset({"rate"}): lambda kv: FailureRate(float(kv["rate"])),
    frozenset({"rate", "mission"}): lambda kv: FailureRate(float(kv["rate"]), float(kv["mission"])),
    frozenset({"rate", "tau"}): lambda kv: Tested(float(kv["rate"]), float(kv["tau"])),
    frozenset({"rate", "mttr"}): lambda kv: Repairable(float(kv["rate"]), float(kv["mttr"])),
    frozenset({"freq"}): lambda kv: Frequency(float(kv["freq"])),
    frozenset({"beta", "of"}): lambda kv: CcfBeta(float(kv["beta"]), kv["of"]),
}


def parse_fault_tree(text: str) -> FaultTree:
    events: list[BasicEvent] = []
    gates: list[Gate] = []
    tops: list[tuple[int, str]] = []
    seen: dict[str, int] = {}
    refs: list[tuple[str, int]] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        kind, args = tokens[0], tokens[1:]
        if kind in ("event", "gate"):
            if not args:
                raise FaultTreeSyntaxError(lineno, f"{kind} needs a name")
            name = args[0]
            if not NAME_RE.match(name):
                raise FaultTreeSyntaxError(lineno, f"invalid name {name!r}")
            if name in seen:
                raise DuplicateName(f"line {lineno}: {name!r} already defined on line {seen[name]}")
            seen[name] = lineno

        if kind == "event":
            kv = {}
            for tok in args[1:]:
                key, sep, value = tok.partition("=")
                if not sep or not value:
                    raise FaultTreeSyntaxError(lineno, f"expected key=value, got {tok!r}")
                if key in kv:
                    raise FaultTreeSyntaxError(lineno, f"repeated key {key!r}")
                kv[key] = value
            build = _EVENT_FORMS.get(frozenset(kv))
            if build is None:
                raise FaultTreeSyntaxError(lineno, f"unsupported parameter set {sorted(kv)}")
            try:
                param = build(kv)
            except ValueError as exc:
                raise FaultTreeSyntaxError(lineno, str(exc)) from None
            if isinstance(param, CcfBeta):
                refs.append((param.of, lineno))
            events.append(BasicEvent(args[0], param))
        elif kind == "gate":
            if len(args) < 3:
                raise FaultTreeSyntaxError(lineno, "gate needs a name, an operator and at least one child")
            if args[1] not in ("AND", "OR"):
                raise FaultTreeSyntaxError(lineno, f"operator must be AND or OR, got {args[1]!r}")
            gates.append(Gate(args[0], args[1], tuple(args[2:])))
            refs.extend((c, lineno) for c in args[2:])
        elif kind == "top":
            if len(args) != 1:
                raise FaultTreeSyntaxError(lineno, "top takes exactly one gate name")
            tops.append((lineno, args[0]))
        else:
            raise FaultTreeSyntaxError(lineno, f"unknown keyword {kind!r}")

    if not tops:
        raise MissingTop("no top line")
    if len(tops) > 1:
        raise FaultTreeSyntaxError(tops[1][0], "more than one top line")
    for name, lineno in refs:
        if name not in seen:
            raise UnresolvedReference(name, lineno)
    return FaultTree(tuple(events), tuple(gates), tops[0][1])


def _fmt(x: float) -> str:
    return repr(float(x))


def render(tree: FaultTree) -> str:
    """Canonical text form; ``parse_fault_tree(render(t)) == t``."""
    lines = []
    for e in tree.events:
        p = e.param
        if isinstance(p, Probability):
            spec = f"prob={_fmt(p.p)}"
        elif isinstance(p, FailureRate):
            spec = f"rate={_fmt(p.rate)} mission={_fmt(p.mission)}"
        elif isinstance(p, Tested):
            spec = f"rate={_fmt(p.rate)} tau={_fmt(p.tau)}"
        elif isinstance(p, Repairable):
            spec = f"rate={_fmt(p.rate)} mttr={_fmt(p.mttr)}"
        elif isinstance(p, Frequency):
            spec = f"freq={_fmt(p.f)}"
        else:
            spec = f"beta={_fmt(p.beta)} of={p.of}"
        lines.append(f"event {e.name} {spec}")
    for g in tree.gates:
        lines.append(f"gate {g.name} {g.op} {' '.join(g.children)}")
    lines.append(f"top {tree.top}")
    return "\n".join(lines) + "\n"


def load_fault_tree(path) -> FaultTree:
    with open(path, encoding="utf-8") as fh:
        return parse_fault_tree(fh.read())


def numeric_fields(param: ReliabilityParam) -> dict[str, float]:
    """Reliability-parameter fields subject to perturbation (mission time is fixed)."""
    if isinstance(param, Probability):
        return {"p": param.p}
    if isinstance(param, FailureRate):
        return {"rate": param.rate}
    if isinstance(param, Tested):
        return {"rate": param.rate, "tau": param.tau}
    if isinstance(param, Repairable):
        return {"rate": param.rate, "mttr": param.mttr}
    if isinstance(param, Frequency):
        return {"f": param.f}
    return {"beta": param.beta}


def with_fields(param: ReliabilityParam, values: Mapping[str, float]) -> ReliabilityParam:
    return replace(param, **values)
