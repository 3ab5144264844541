"""Interpretive Structural Modeling: expert matrix -> reachability -> levels -> DAG."""
from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass

import numpy as np

from fvkit.errors import BadCell, DuplicateName, InputError, NonSquare, NoProgress


class Orientation(str, enum.Enum):
    TOP_LEVEL_FIRST = "top"
    DRIVER_FIRST = "driver"

    @classmethod
    def coerce(cls, value) -> Orientation:
        if isinstance(value, cls):
            return value
        aliases = {"top": cls.TOP_LEVEL_FIRST, "toplevelfirst": cls.TOP_LEVEL_FIRST,
                   "driver": cls.DRIVER_FIRST, "driverfirst": cls.DRIVER_FIRST}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise InputError(f"unknown orientation {value!r}; expected top or driver") from None


@dataclass(frozen=True, eq=False)
class BoolMatrix:
    names: tuple[str, ...]
    cells: np.ndarray  # (n, n) bool

    def __post_init__(self):
        n = len(self.names)
        if self.cells.shape != (n, n):
            raise NonSquare(f"matrix shape {self.cells.shape} does not match {n} names")
        if len(set(self.names)) != n:
            raise DuplicateName("duplicate names in matrix header")

    def __eq__(self, other):
        return (type(self) is type(other) and self.names == other.names
                and np.array_equal(self.cells, other.cells))

    def __hash__(self):
        return hash((self.names, self.cells.tobytes()))

    @property
    def n(self) -> int:
        return len(self.names)

    def edges(self) -> list[tuple[str, str]]:
        return [(self.names[i], self.names[j]) for i, j in zip(*np.nonzero(self.cells)) if i != j]


class SsimMatrix(BoolMatrix):
    """Direct expert relations; cell (i, j) set when element i influences j."""


class ReachabilityMatrix(BoolMatrix):
    def reachability_set(self, name: str) -> frozenset[str]:
        i = self.names.index(name)
        return frozenset(self.names[j] for j in np.nonzero(self.cells[i])[0])

    def antecedent_set(self, name: str) -> frozenset[str]:
        j = self.names.index(name)
        return frozenset(self.names[i] for i in np.nonzero(self.cells[:, j])[0])


def load_ssim(text: str) -> SsimMatrix:
    """Parse ``,n1,n2,...`` header plus one ``name,cell,...`` row per element."""
    rows = [r for r in csv.reader(io.StringIO(text)) if any(c.strip() for c in r)]
    if not rows:
        raise NonSquare("empty SSIM")
    header = [c.strip() for c in rows[0]]
    if header[0] != "":
        raise InputError("SSIM header must start with an empty cell")
    names = header[1:]
    if len(set(names)) != len(names):
        raise DuplicateName("duplicate names in SSIM header")
    body = rows[1:]
    if len(body) != len(names):
        raise NonSquare(f"{len(names)} columns but {len(body)} rows")
    cells = np.zeros((len(names), len(names)), dtype=bool)
    for i, row in enumerate(body):
        row = [c.strip() for c in row]
        if len(row) != len(names) + 1:
            raise NonSquare(f"row {i + 1} has {len(row) - 1} cells, expected {len(names)}")
        if row[0] != names[i]:
            raise InputError(f"row {i + 1} is labelled {row[0]!r}, expected {names[i]!r}")
        for j, c in enumerate(row[1:]):
            if c not in ("0", "1"):
                raise BadCell(f"cell ({row[0]}, {names[j]}) = {c!r}; expected 0 or 1")
            cells[i, j] = c == "1"
    np.fill_diagonal(cells, True)
    return SsimMatrix(tuple(names), cells)


def dump_ssim(m: BoolMatrix) -> str:
    lines = ["," + ",".join(m.names)]
    for name, row in zip(m.names, m.cells):
        lines.append(name + "," + ",".join("1" if v else "0" for v in row))
    return "\n".join(lines) + "\n"


def _bool_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a.astype(np.int64) @ b.astype(np.int64)) > 0


def reachability(ssim: BoolMatrix) -> ReachabilityMatrix:
    """Reflexive-transitive closure by repeated Boolean squaring."""
    m = ssim.cells.copy()
    np.fill_diagonal(m, True)
    while True:
        sq = _bool_matmul(m, m)
        if np.array_equal(sq, m):
            break
        m = sq
    return ReachabilityMatrix(ssim.names, m)


@dataclass(frozen=True)
class LevelPartition:
    levels: tuple[tuple[str, ...], ...]
    reach: dict[str, frozenset[str]]
    antecedent: dict[str, frozenset[str]]
    intersection: dict[str, frozenset[str]]
    orientation: Orientation

    def level_of(self, name: str) -> int:
        for k, level in enumerate(self.levels, 1):
            if name in level:
                return k
        raise KeyError(name)


def level_partition(m: ReachabilityMatrix,
                    orientation: Orientation | str = Orientation.DRIVER_FIRST) -> LevelPartition:
    """Iterative level extraction on the shrinking reachability submatrix.

    TOP_LEVEL_FIRST takes elements whose reachability set lies inside their
    antecedent set (R = R & A); DRIVER_FIRST takes elements with A = R & A.
    The R/A/C sets reported are those of the full matrix.
    """
    orientation = Orientation.coerce(orientation)
    names = m.names
    cells = m.cells
    reach = {n: m.reachability_set(n) for n in names}
    ante = {n: m.antecedent_set(n) for n in names}
    inter = {n: reach[n] & ante[n] for n in names}

    remaining = list(range(m.n))
    levels = []
    while remaining:
        idx = np.array(remaining)
        sub = cells[np.ix_(idx, idx)]
        picked = []
        for k, i in enumerate(remaining):
            r = sub[k]
            a = sub[:, k]
            both = r & a
            if orientation is Orientation.TOP_LEVEL_FIRST:
                ok = np.array_equal(both, r)
            else:
                ok = np.array_equal(both, a)
            if ok:
                picked.append(i)
        if not picked:
            raise NoProgress("level extraction stalled; input is not a reachability matrix")
        levels.append(tuple(sorted(names[i] for i in picked)))
        remaining = [i for i in remaining if i not in picked]
    return LevelPartition(tuple(levels), reach, ante, inter, orientation)


@dataclass(frozen=True)
class IsmDag:
    names: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    levels: dict[str, int]
    components: tuple[tuple[str, ...], ...]  # strongly connected groups, size >= 1

    def closure(self) -> ReachabilityMatrix:
        """Reachability of the skeleton with each component re-expanded."""
        pos = {n: i for i, n in enumerate(self.names)}
        cells = np.zeros((len(self.names),) * 2, dtype=bool)
        for a, b in self.edges:
            cells[pos[a], pos[b]] = True
        for comp in self.components:
            ids = [pos[c] for c in comp]
            cells[np.ix_(ids, ids)] = True
        return reachability(BoolMatrix(self.names, cells))


def skeleton(m: ReachabilityMatrix) -> IsmDag:
    """Condense strongly connected components, then transitively reduce.

    Every condensed edge is expanded to all member pairs of the two
    components; edges inside a component are not emitted.
    """
    names = m.names
    cells = m.cells
    mutual = cells & cells.T
    comp_of = [-1] * m.n
    comps: list[list[int]] = []
    for i in range(m.n):
        if comp_of[i] < 0:
            members = [j for j in range(m.n) if mutual[i, j]]
            for j in members:
                comp_of[j] = len(comps)
            comps.append(members)
    k = len(comps)
    creach = np.zeros((k, k), dtype=bool)
    for a in range(k):
        for b in range(k):
            creach[a, b] = a != b and cells[comps[a][0], comps[b][0]]
    edges = []
    for a in range(k):
        for b in range(k):
            if not creach[a, b]:
                continue
            if any(creach[a, c] and creach[c, b] for c in range(k)):
                continue
            edges.extend((names[i], names[j]) for i in comps[a] for j in comps[b])
    edges.sort()
    lp = level_partition(m, Orientation.DRIVER_FIRST)
    levels = {n: lp.level_of(n) for n in names}
    components = tuple(sorted(tuple(sorted(names[i] for i in c)) for c in comps))
    return IsmDag(names, tuple(edges), levels, components)


_DOT_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def _dot_id(name: str) -> str:
    return name if _DOT_ID.match(name) else '"' + name.replace('"', '\\"') + '"'


def export_dot(dag: IsmDag) -> str:
    if not dag.names:
        return "digraph ism { }\n"
    lines = ["digraph ism {"]
    by_level: dict[int, list[str]] = {}
    for n in dag.names:
        by_level.setdefault(dag.levels.get(n, 1), []).append(n)
    for level in sorted(by_level):
        members = " ".join(_dot_id(n) + ";" for n in sorted(by_level[level]))
        lines.append(f"  subgraph level_{level} {{ rank=same; {members} }}")
    for a, b in sorted(dag.edges):
        lines.append(f"  {_dot_id(a)} -> {_dot_id(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_table(lp: LevelPartition, names) -> str:
    """Reachability / antecedent / intersection table followed by the levels."""
    def fmt(s):
        return " ".join(n for n in names if n in s)

    out = ["item,reachability,antecedent,intersection"]
    for n in names:
        out.append(f"{n},{fmt(lp.reach[n])},{fmt(lp.antecedent[n])},{fmt(lp.intersection[n])}")
    out.append("")
    for k, level in enumerate(lp.levels, 1):
        out.append(f"Level {k}: {' '.join(level)}")
    return "\n".join(out) + "\n"
