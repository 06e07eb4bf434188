"""Core UCCA data structures: categories, terminals, graphs, passages, validation.

A graph couples a primary tree (one parent per node) with optional remote
edges that add reentrancies, so the full edge set is a DAG.  Terminal nodes
use the reserved id form ``t<position>``; internal nodes may use any other
id.  All types here are immutable after construction and all operations are
pure functions, so they are safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional

from .errors import GraphError

_TERMINAL_ID_RE = re.compile(r"^t([1-9][0-9]*)$")


class Category(str, Enum):
    """Closed inventory of edge categories.

    ``U`` (punctuation) appears in real corpora and is accepted on input;
    whether it participates in the predicted label inventory is a training
    configuration choice.
    """

    PROCESS = "P"
    STATE = "S"
    PARTICIPANT = "A"
    ADVERBIAL = "D"
    CENTER = "C"
    ELABORATOR = "E"
    CONNECTOR = "N"
    RELATOR = "R"
    FUNCTION = "F"
    LINKER = "L"
    PARALLEL_SCENE = "H"
    GROUND = "G"
    PUNCTUATION = "U"

    @classmethod
    def parse(cls, code: str) -> "Category":
        try:
            return cls(code)
        except ValueError:
            raise GraphError(f"unknown category code {code!r}") from None

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


#: Category codes in a fixed, sorted order (used for stable label ids).
CATEGORY_CODES: tuple[str, ...] = tuple(sorted(c.value for c in Category))

IOB_CODES = ("B", "I", "O")


@dataclass(frozen=True)
class Terminal:
    """One token with its surface form and companion features."""

    position: int
    surface: str
    pos_tag: str = ""
    dep_label: str = ""
    entity_type: str = ""
    entity_iob: str = "O"

    def __post_init__(self) -> None:
        if self.position < 1:
            raise GraphError(f"terminal position must be >= 1, got {self.position}")
        if self.entity_iob not in IOB_CODES:
            raise GraphError(f"entity_iob must be one of {IOB_CODES}, got {self.entity_iob!r}")


@dataclass(frozen=True)
class Edge:
    """A labeled parent->child edge; ``remote`` marks reentrancy edges."""

    parent: str
    child: str
    category: Category
    remote: bool = False


def terminal_id(position: int) -> str:
    return f"t{position}"


def terminal_position(node_id: str) -> Optional[int]:
    """Position encoded in a terminal id, or None for internal ids."""
    m = _TERMINAL_ID_RE.match(node_id)
    return int(m.group(1)) if m else None


@dataclass(frozen=True)
class UccaGraph:
    """Nodes plus labeled edges; primary edges form a tree rooted at ``root``."""

    nodes: frozenset[str]
    edges: tuple[Edge, ...]
    root: str

    @cached_property
    def primary_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if not e.remote)

    @cached_property
    def remote_edges(self) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.remote)

    @cached_property
    def primary_children(self) -> dict[str, tuple[str, ...]]:
        children: dict[str, list[str]] = {n: [] for n in self.nodes}
        for e in self.primary_edges:
            if e.parent in children:
                children[e.parent].append(e.child)
        return {n: tuple(c) for n, c in children.items()}

    @cached_property
    def primary_parent(self) -> dict[str, str]:
        return {e.child: e.parent for e in self.primary_edges}

    @cached_property
    def terminal_positions(self) -> dict[str, int]:
        out = {}
        for n in self.nodes:
            pos = terminal_position(n)
            if pos is not None:
                out[n] = pos
        return out

    def category_of(self, child: str) -> Optional[Category]:
        """Category of the primary edge above ``child`` (None for the root)."""
        for e in self.primary_edges:
            if e.child == child:
                return e.category
        return None


def terminal_yield(g: UccaGraph, node: str) -> frozenset[int]:
    """Token positions reachable from ``node`` through primary edges only.

    Remote edges never contribute.  Raises GraphError for an unknown node.
    Cycle-safe so it may be used while diagnosing broken graphs.
    """
    if node not in g.nodes:
        raise GraphError(f"unknown node id {node!r}")
    out: set[int] = set()
    seen: set[str] = set()
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur in seen:
            continue
        seen.add(cur)
        pos = terminal_position(cur)
        if pos is not None:
            out.add(pos)
        stack.extend(g.primary_children.get(cur, ()))
    return frozenset(out)


def all_yields(g: UccaGraph) -> dict[str, frozenset[int]]:
    """Primary-edge terminal yield for every node, computed in one pass."""
    return {n: terminal_yield(g, n) for n in g.nodes}


def is_contiguous(positions: Iterable[int]) -> bool:
    ps = sorted(positions)
    return not ps or ps[-1] - ps[0] + 1 == len(ps)


def discontinuous_nodes(g: UccaGraph) -> list[str]:
    """Nodes whose primary yield is non-contiguous in token order."""
    return [n for n, y in all_yields(g).items() if y and not is_contiguous(y)]


@dataclass(frozen=True)
class ValidationReport:
    """Every invariant violation found in a graph; empty means valid."""

    violations: tuple[str, ...] = ()

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.is_valid:
            return "valid"
        return "; ".join(self.violations)


def validate_graph(g: UccaGraph, n_tokens: int) -> ValidationReport:
    """Check every structural invariant and report all violations.

    Never raises: malformed graphs produce a report, not an exception.
    Checks the primary-tree property, DAG-ness of the full edge set, the
    terminal/token anchoring bijection, leaf-ness of terminals and the
    remote edge constraints.
    """
    v: list[str] = []

    if g.root not in g.nodes:
        v.append(f"root {g.root!r} is not a graph node")

    for e in g.edges:
        if e.parent not in g.nodes:
            v.append(f"edge references unknown parent {e.parent!r}")
        if e.child not in g.nodes:
            v.append(f"edge references unknown child {e.child!r}")
        if e.parent == e.child:
            v.append(f"self-loop on {e.parent!r}")

    # Anchoring: terminal ids must be exactly t1..t<n_tokens>.
    expected = {terminal_id(i) for i in range(1, n_tokens + 1)}
    actual = {n for n in g.nodes if terminal_position(n) is not None}
    for n in sorted(expected - actual):
        v.append(f"missing terminal node {n}")
    for n in sorted(actual - expected):
        v.append(f"terminal node {n} does not match any token position (1..{n_tokens})")

    # Terminals are leaves.
    for e in g.edges:
        if e.parent in actual:
            v.append(f"terminal {e.parent} has an outgoing edge")

    # Primary in-degree: exactly one parent edge per non-root node, none for root.
    primary_in: dict[str, list[str]] = {n: [] for n in g.nodes}
    for e in g.primary_edges:
        if e.child in primary_in:
            primary_in[e.child].append(e.parent)
    for n in sorted(g.nodes):
        parents = primary_in.get(n, [])
        if n == g.root:
            if parents:
                v.append(f"root {n} has a primary parent")
        elif len(parents) == 0:
            v.append(f"node {n} has no primary parent")
        elif len(parents) > 1:
            v.append(f"node {n} has {len(parents)} primary parents")

    # Every node reachable from the root through primary edges.
    if g.root in g.nodes:
        reachable: set[str] = set()
        stack = [g.root]
        while stack:
            cur = stack.pop()
            if cur in reachable:
                continue
            reachable.add(cur)
            stack.extend(g.primary_children.get(cur, ()))
        for n in sorted(g.nodes - reachable):
            v.append(f"node {n} is not reachable from the root via primary edges")

    # Full edge set (primary + remote) must be acyclic.
    if _has_cycle(g):
        v.append("directed cycle in the full edge set")

    # Remote edge constraints.
    primary_pairs = {(e.parent, e.child) for e in g.primary_edges}
    for e in g.remote_edges:
        if e.child == g.root:
            v.append("remote edge targets the root")
        if (e.parent, e.child) in primary_pairs:
            v.append(f"remote edge duplicates primary pair ({e.parent}, {e.child})")

    return ValidationReport(tuple(v))


def _has_cycle(g: UccaGraph) -> bool:
    succ: dict[str, list[str]] = {n: [] for n in g.nodes}
    for e in g.edges:
        if e.parent in succ and e.child in succ:
            succ[e.parent].append(e.child)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in succ}
    for start in succ:
        if color[start] != WHITE:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        color[start] = GRAY
        while stack:
            node, idx = stack[-1]
            if idx < len(succ[node]):
                stack[-1] = (node, idx + 1)
                nxt = succ[node][idx]
                if color[nxt] == GRAY:
                    return True
                if color[nxt] == WHITE:
                    color[nxt] = GRAY
                    stack.append((nxt, 0))
            else:
                color[node] = BLACK
                stack.pop()
    return False


def graph_signature(g: UccaGraph):
    """Canonical, node-id-free description of a graph.

    Two graphs are considered structurally equal when they have the same
    multiset of node yields and the same multisets of primary and remote
    edges keyed by (parent yield, child yield, category).  This is the
    identity used by roundtrip tests: node ids are serialization details.
    """
    ys = all_yields(g)

    def key(y: frozenset[int]) -> tuple[int, ...]:
        return tuple(sorted(y))

    node_sig = tuple(sorted(key(y) for y in ys.values()))
    primary = tuple(sorted(
        (key(ys[e.parent]), key(ys[e.child]), e.category.value) for e in g.primary_edges))
    remote = tuple(sorted(
        (key(ys[e.parent]), key(ys[e.child]), e.category.value) for e in g.remote_edges))
    return (node_sig, primary, remote)


@dataclass(frozen=True)
class Passage:
    """An input unit: ordered tokens plus an optional gold graph.

    One passage is one parse unit; multi-sentence segmentation is out of
    scope and must happen upstream.
    """

    id: str
    language: str
    terminals: tuple[Terminal, ...]
    graph: Optional[UccaGraph] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise GraphError("passage id cannot be empty")
        if not self.language:
            raise GraphError("passage language cannot be empty")
        positions = [t.position for t in self.terminals]
        if positions != list(range(1, len(positions) + 1)):
            raise GraphError(
                f"passage {self.id}: terminal positions must be contiguous 1..n, got {positions}")
        if self.graph is not None:
            anchored = {n for n in self.graph.nodes if terminal_position(n) is not None}
            expected = {terminal_id(i) for i in range(1, len(self.terminals) + 1)}
            if anchored != expected:
                raise GraphError(
                    f"passage {self.id}: graph anchors {len(anchored)} terminals, "
                    f"passage has {len(self.terminals)} tokens")

    @property
    def n_tokens(self) -> int:
        return len(self.terminals)

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.terminals)


def make_graph(edges: Iterable[tuple[str, str, str] | tuple[str, str, str, bool]],
               root: str) -> UccaGraph:
    """Convenience constructor from (parent, child, category[, remote]) tuples."""
    built = []
    nodes = {root}
    for spec in edges:
        if len(spec) == 3:
            parent, child, cat = spec  # type: ignore[misc]
            remote = False
        else:
            parent, child, cat, remote = spec  # type: ignore[misc]
        built.append(Edge(parent, child, Category.parse(cat), bool(remote)))
        nodes.add(parent)
        nodes.add(child)
    return UccaGraph(nodes=frozenset(nodes), edges=tuple(built), root=root)
