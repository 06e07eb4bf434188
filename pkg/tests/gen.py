"""Random generators shared by the test suite.

Graphs come out valid by construction: a primary tree over the terminals
(with optional discontinuity, produced by interleaved partitioning, and
optional unary chains) plus 0..k remote edges that respect the remote
constraints.
"""

from __future__ import annotations

import numpy as np

from uccaparser.graph import (
    Category,
    Edge,
    Passage,
    Terminal,
    UccaGraph,
    terminal_id,
)

NON_PUNCT = [c for c in Category if c != Category.PUNCTUATION]

WORDS = ["the", "a", "dog", "cat", "sheet", "beam", "he", "she", "saw", "tied",
         "ran", "slept", "red", "old", "quickly", "around", "and", "of", "in",
         "box", "lamp", "night", "opened", "closed", "gave", "took"]
POS_TAGS = ["NOUN", "VERB", "DET", "ADJ", "ADV", "ADP", "PRON", "CCONJ", "PUNCT"]
DEP_LABELS = ["nsubj", "obj", "det", "amod", "advmod", "case", "cc", "conj", "root"]
ENTITY_TYPES = ["", "PER", "LOC", "ORG"]


class GraphBuilder:
    def __init__(self, rng: np.random.Generator, scramble: float, unary: float):
        self.rng = rng
        self.scramble = scramble
        self.unary = unary
        self.edges: list[Edge] = []
        self.counter = 0

    def fresh_id(self) -> str:
        self.counter += 1
        return f"n{self.counter}"

    def category(self) -> Category:
        return NON_PUNCT[int(self.rng.integers(len(NON_PUNCT)))]

    def partition(self, positions: list[int]) -> list[list[int]]:
        k = int(self.rng.integers(2, min(4, len(positions)) + 1))
        if self.rng.random() < self.scramble and len(positions) >= 3:
            shuffled = list(self.rng.permutation(positions))
            cuts = sorted(self.rng.choice(range(1, len(positions)), size=k - 1,
                                          replace=False))
            parts = []
            prev = 0
            for cut in list(cuts) + [len(positions)]:
                parts.append(sorted(int(x) for x in shuffled[prev:cut]))
                prev = cut
            return parts
        ordered = sorted(positions)
        cuts = sorted(self.rng.choice(range(1, len(positions)), size=k - 1,
                                      replace=False))
        parts = []
        prev = 0
        for cut in list(cuts) + [len(positions)]:
            parts.append(ordered[prev:cut])
            prev = cut
        return parts

    def build_unit(self, positions: list[int], parent: str) -> None:
        category = self.category()
        if len(positions) == 1 and self.rng.random() < 0.6:
            self.edges.append(Edge(parent, terminal_id(positions[0]), category, False))
            return
        node = self.fresh_id()
        self.edges.append(Edge(parent, node, category, False))
        while self.rng.random() < self.unary:
            inner = self.fresh_id()
            self.edges.append(Edge(node, inner, self.category(), False))
            node = inner
        if len(positions) == 1:
            self.edges.append(Edge(node, terminal_id(positions[0]), self.category(), False))
            return
        for part in self.partition(positions):
            self.build_unit(part, node)


def random_graph(rng: np.random.Generator, n_tokens: int,
                 scramble: float = 0.35, unary: float = 0.15,
                 max_remotes: int = 2) -> UccaGraph:
    builder = GraphBuilder(rng, scramble, unary)
    positions = list(range(1, n_tokens + 1))
    if n_tokens == 1:
        builder.build_unit(positions, "root")
    else:
        for part in builder.partition(positions):
            builder.build_unit(part, "root")
    edges = builder.edges
    nodes = {"root"}
    for e in edges:
        nodes.add(e.parent)
        nodes.add(e.child)

    children: dict[str, list[str]] = {}
    for e in edges:
        children.setdefault(e.parent, []).append(e.child)

    def subtree(node: str) -> set[str]:
        out, stack = set(), [node]
        while stack:
            cur = stack.pop()
            if cur in out:
                continue
            out.add(cur)
            stack.extend(children.get(cur, ()))
        return out

    base = UccaGraph(nodes=frozenset(nodes), edges=tuple(edges), root="root")
    from uccaparser.graph import all_yields

    yields = all_yields(base)
    pairs = {(e.parent, e.child) for e in edges}
    internal = sorted(n for n in nodes if n in children and n != "root")
    non_root = sorted(n for n in nodes if n != "root")
    n_remotes = int(rng.integers(0, max_remotes + 1))
    remote_edges: list[Edge] = []
    for _ in range(n_remotes * 4):
        if len(remote_edges) >= n_remotes or not internal:
            break
        parent = internal[int(rng.integers(len(internal)))]
        child = non_root[int(rng.integers(len(non_root)))]
        if parent == child or (parent, child) in pairs:
            continue
        if yields[parent] == yields[child]:  # no yield-keyed representation
            continue
        if parent in subtree(child):  # reachability includes prior remotes
            continue
        remote_edges.append(Edge(parent, child, builder.category(), True))
        pairs.add((parent, child))
        children.setdefault(parent, []).append(child)
    return UccaGraph(nodes=frozenset(nodes), edges=tuple(edges) + tuple(remote_edges),
                     root="root")


def random_terminals(rng: np.random.Generator, n_tokens: int,
                     words: list[str] = WORDS) -> tuple[Terminal, ...]:
    terminals = []
    for position in range(1, n_tokens + 1):
        entity = ENTITY_TYPES[int(rng.integers(len(ENTITY_TYPES)))]
        iob = "O" if entity == "" else ("B" if rng.random() < 0.7 else "I")
        terminals.append(Terminal(
            position=position,
            surface=words[int(rng.integers(len(words)))],
            pos_tag=POS_TAGS[int(rng.integers(len(POS_TAGS)))],
            dep_label=DEP_LABELS[int(rng.integers(len(DEP_LABELS)))],
            entity_type=entity,
            entity_iob=iob,
        ))
    return tuple(terminals)


def random_passage(rng: np.random.Generator, n_tokens: int, pid: str = "p0",
                   language: str = "en", **graph_kwargs) -> Passage:
    return Passage(id=pid, language=language,
                   terminals=random_terminals(rng, n_tokens),
                   graph=random_graph(rng, n_tokens, **graph_kwargs))


def random_chart(rng: np.random.Generator, n: int, labels: tuple[str, ...],
                 scale: float = 5.0):
    from uccaparser.encoder import SpanChart

    scores = np.zeros((n + 1, n + 1, len(labels) + 1))
    for i in range(n):
        for j in range(i + 1, n + 1):
            scores[i, j] = rng.normal(0.0, scale, size=len(labels) + 1)
    return SpanChart(n=n, labels=labels, scores=scores)
