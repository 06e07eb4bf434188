"""Remote edge recovery on top of a decoded tree.

Two small MLP heads read the same encoder outputs as the span scorer:

* the gate head scores every candidate tree node as "gains a remote
  parent" (the remote child side of the new edge);
* the attach head jointly scores (candidate parent, category) pairs for
  each gated node.

Candidates that would duplicate a primary edge or close a cycle are
excluded before the argmax, and the resulting edges are emitted as
``RemoteRecord`` values keyed by terminal yields, the same currency the
graph/tree conversion uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .conversion import ConstituencyTree, RemoteRecord, tree_to_graph_with_spans
from .encoder import EncoderConfig, Mlp, fencepost_vectors, _linear
from .errors import GraphError
from .graph import CATEGORY_CODES, Category, UccaGraph, all_yields

#: Categories the attach head can assign, in stable id order.
REMOTE_CATEGORIES: tuple[str, ...] = CATEGORY_CODES


@dataclass
class RemoteHeads:
    """Gate and attach MLPs over shared encoder node representations."""

    gate: Mlp     # (2 d_model) -> 1 logit
    attach: Mlp   # (4 d_model) -> |categories| logits
    categories: tuple[str, ...] = REMOTE_CATEGORIES

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [
            ("remote.gate.l1.w", self.gate.l1.w), ("remote.gate.l1.b", self.gate.l1.b),
            ("remote.gate.l2.w", self.gate.l2.w), ("remote.gate.l2.b", self.gate.l2.b),
            ("remote.attach.l1.w", self.attach.l1.w), ("remote.attach.l1.b", self.attach.l1.b),
            ("remote.attach.l2.w", self.attach.l2.w), ("remote.attach.l2.b", self.attach.l2.b),
        ]


def init_remote_heads(rng: np.random.Generator, config: EncoderConfig) -> RemoteHeads:
    dtype = config.np_dtype
    d = config.d_model
    h = config.remote_hidden
    return RemoteHeads(
        gate=Mlp(_linear(rng, 2 * d, h, dtype), _linear(rng, h, 1, dtype)),
        attach=Mlp(_linear(rng, 4 * d, h, dtype), _linear(rng, h, len(REMOTE_CATEGORIES), dtype)),
    )


def node_representation(tree: ConstituencyTree, ys: Tensor, node: tuple[int, int]) -> np.ndarray:
    """Boundary-fencepost vector for one tree span (inference view)."""
    if tree.label_of(*node) is None:
        raise GraphError(f"span {node} is not part of the tree")
    f = fencepost_vectors(ys).detach()
    return np.concatenate([f[node[0]], f[node[1]]])


def tree_node_spans(tree: ConstituencyTree) -> list[tuple[int, int]]:
    """All labeled spans in a fixed order."""
    return [(i, j) for i, j, _ in tree.sorted_spans()]


@dataclass
class RemoteCandidates:
    """Source spans, and per-source admissible (parent span, category) pairs.

    Yields are taken from the reconstructed graph, so they stay aligned with
    what evaluation and re-attachment will see after lift restoration.
    """

    spans: list[tuple[int, int]]                       # gate candidates
    parents: dict[tuple[int, int], list[tuple[int, int]]]
    child_yields: dict[tuple[int, int], frozenset[int]]   # span top node
    parent_yields: dict[tuple[int, int], frozenset[int]]  # span bottom node


def build_candidates(tree: ConstituencyTree,
                     disc: Sequence = ()) -> RemoteCandidates:
    """Admissible remote attachments for every node of a tree.

    A node may gain a remote parent unless it is the whole-sentence span.
    Admissible parents are all other nodes that do not already dominate the
    source through a direct primary edge and would not close a cycle; the
    checks run on the graph reading of the tree (with discontinuity records
    applied when given) so unary chains and lifts are handled exactly.
    """
    graph, span_nodes = tree_to_graph_with_spans(tree, disc=disc)
    ys = all_yields(graph)
    spans = [s for s in tree_node_spans(tree) if s in span_nodes]
    child_yields = {s: ys[span_nodes[s][0]] for s in spans}
    parent_yields = {s: ys[span_nodes[s][1]] for s in spans}

    primary_pairs = {(e.parent, e.child) for e in graph.primary_edges}
    whole = (0, tree.n)
    sources = [s for s in spans if s != whole]
    parents: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for src in sources:
        child = span_nodes[src][0]
        options = []
        for cand in spans:
            if cand == src:
                continue
            parent = span_nodes[cand][1]
            if parent == child or (parent, child) in primary_pairs:
                continue
            if parent.startswith("t"):
                continue  # terminals never gain children
            if _reaches(graph, child, parent):  # parent below src: cycle
                continue
            options.append(cand)
        parents[src] = options
    return RemoteCandidates(spans=sources, parents=parents,
                            child_yields=child_yields, parent_yields=parent_yields)


def _reaches(graph: UccaGraph, src: str, dst: str) -> bool:
    stack, seen = [src], set()
    while stack:
        cur = stack.pop()
        if cur == dst:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        stack.extend(graph.primary_children.get(cur, ()))
    return False


@dataclass
class RemoteScores:
    """Differentiable head outputs for one tree."""

    candidates: RemoteCandidates
    gate_logits: Tensor                                  # (num sources,)
    attach_logits: dict[tuple[int, int], Tensor]         # source -> (P * C,)


def score_remotes(tree: ConstituencyTree, ys: Tensor, heads: RemoteHeads,
                  candidates: Optional[RemoteCandidates] = None) -> RemoteScores:
    """Run both heads over a tree; shared fencepost features with the spans."""
    if candidates is None:
        candidates = build_candidates(tree)
    f = fencepost_vectors(ys)
    span_list = candidates.spans
    reps: dict[tuple[int, int], Tensor] = {}

    def rep(span: tuple[int, int]) -> Tensor:
        if span not in reps:
            ii = np.asarray([span[0]])
            jj = np.asarray([span[1]])
            reps[span] = ad.concat([ad.take_rows(f, ii), ad.take_rows(f, jj)], axis=1)
        return reps[span]

    if span_list:
        gate_in = ad.concat([rep(s) for s in span_list], axis=0)
        gate_logits = ad.reshape(heads.gate(gate_in), (len(span_list),))
    else:
        gate_logits = ad.as_tensor(np.zeros(0))
    attach_logits: dict[tuple[int, int], Tensor] = {}
    for src in span_list:
        options = candidates.parents[src]
        if not options:
            continue
        pair_rows = ad.concat(
            [ad.concat([rep(src), rep(p)], axis=1) for p in options], axis=0)
        logits = heads.attach(pair_rows)                  # (P, C)
        attach_logits[src] = ad.reshape(logits, (len(options) * len(heads.categories),))
    return RemoteScores(candidates=candidates, gate_logits=gate_logits,
                        attach_logits=attach_logits)


def recover_remotes(tree: ConstituencyTree, ys: Tensor, heads: RemoteHeads,
                    threshold: float = 0.5) -> list[RemoteRecord]:
    """Predict remote edges for a decoded tree.

    Every node whose gate probability reaches the threshold gets exactly one
    remote parent: the argmax (parent, category) pair among admissible
    candidates.  Returns records keyed by yields; may be empty.
    """
    scores = score_remotes(tree, ys, heads)
    cands = scores.candidates
    gate_prob = 1.0 / (1.0 + np.exp(-scores.gate_logits.detach()))
    out: list[RemoteRecord] = []
    num_cats = len(heads.categories)
    for idx, src in enumerate(cands.spans):
        if gate_prob[idx] < threshold:
            continue
        options = cands.parents[src]
        if not options or src not in scores.attach_logits:
            continue
        flat = scores.attach_logits[src].detach()
        best = int(np.argmax(flat))
        parent_span = options[best // num_cats]
        category = Category(heads.categories[best % num_cats])
        if cands.parent_yields[parent_span] == cands.child_yields[src]:
            continue  # no yield-keyed representation for equal endpoints
        out.append(RemoteRecord(
            parent_yield=cands.parent_yields[parent_span],
            child_yield=cands.child_yields[src],
            category=category,
        ))
    out.sort(key=lambda r: (sorted(r.child_yield), sorted(r.parent_yield), r.category.value))
    return out
