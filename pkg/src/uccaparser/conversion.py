"""Reversible conversion between UCCA graphs and labeled constituency trees.

The tree side is what the learned model predicts and the chart decoder
produces: a set of labeled fencepost spans over the tokens.  Converting a
graph involves three steps:

1. Remote edges are stripped and emitted as ``RemoteRecord`` values keyed by
   terminal yields, so they can be re-attached independently of node ids.
2. Discontinuities are repaired by repeatedly lifting an offending child of
   the lowest discontinuous node to that node's parent.  The lifted child's
   label gains a tag naming the category of the parent it was lifted out of
   (``A\u2191P``: a participant lifted from a process unit), and a
   ``DiscontinuityRecord`` is emitted per lift.
3. Nodes that share a span (unary chains) collapse into a single span whose
   label joins the member categories top-to-bottom.

``tree_to_graph`` inverts all three steps exactly when given the records.
Given no records (the parser-output path) it restores lifted children
heuristically: each tagged node is pushed back under the nearest node whose
category matches the tag's parent hint, searching the landing subtree
breadth-first.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import ConversionError
from .graph import (
    Category,
    Edge,
    UccaGraph,
    all_yields,
    is_contiguous,
    terminal_id,
    terminal_position,
    validate_graph,
)

logger = logging.getLogger(__name__)

EMPTY_LABEL = ""
CHAIN_JOINER = "+"
LIFT_MARKER = "↑"  # arrow suffix on the category of a lifted node
ROOT_ATOM = "ROOT"
#: Category assigned to tokens a predicted tree left without a labeled span.
FALLBACK_CATEGORY = Category.CENTER


def make_atom(category: Category, parent_hint: Optional[Category] = None) -> str:
    if parent_hint is None:
        return category.value
    return category.value + LIFT_MARKER + parent_hint.value


def parse_atom(atom: str) -> tuple[Optional[Category], Optional[Category]]:
    """Split an atom into (category, lift parent hint).

    ``"A"`` parses to (A, None); ``"A\u2191P"`` to (A, P); ``"ROOT"`` to
    (None, None).
    """
    if atom == ROOT_ATOM:
        return None, None
    base, marker, hint = atom.partition(LIFT_MARKER)
    try:
        category = Category(base)
        parent_hint = Category(hint) if marker else None
    except ValueError:
        raise ConversionError(f"unknown label atom {atom!r}") from None
    return category, parent_hint


def join_label(atoms: Iterable[str]) -> str:
    return CHAIN_JOINER.join(atoms)


def split_label(label: str) -> tuple[str, ...]:
    if label == EMPTY_LABEL:
        return ()
    return tuple(label.split(CHAIN_JOINER))


@dataclass(frozen=True)
class ConstituencyTree:
    """Properly nested labeled spans over fenceposts 0..n.

    Labels are strings: a single atom like ``"A"``, a unary chain like
    ``"H+P"``, or the empty string for binarization-only spans.  At most one
    span per (i, j) pair.
    """

    n: int
    spans: frozenset[tuple[int, int, str]]

    def __post_init__(self) -> None:
        seen: dict[tuple[int, int], str] = {}
        for i, j, label in self.spans:
            if not (0 <= i < j <= self.n):
                raise ConversionError(f"span ({i}, {j}) out of range for n={self.n}")
            if (i, j) in seen:
                raise ConversionError(f"duplicate span ({i}, {j})")
            seen[(i, j)] = label
        if (0, self.n) not in seen:
            raise ConversionError(f"root span (0, {self.n}) is missing")
        # Proper nesting: sweep spans sorted by (start, -width) with a stack.
        stack: list[tuple[int, int]] = []
        for i, j in sorted(seen, key=lambda s: (s[0], -s[1])):
            while stack and stack[-1][1] <= i:
                stack.pop()
            if stack and j > stack[-1][1]:
                raise ConversionError(
                    f"spans ({stack[-1][0]}, {stack[-1][1]}) and ({i}, {j}) cross")
            stack.append((i, j))

    @classmethod
    def trusted(cls, n: int, spans: frozenset[tuple[int, int, str]]) -> "ConstituencyTree":
        """Construct without validation; for spans correct by construction."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "spans", spans)
        return obj

    def label_of(self, i: int, j: int) -> Optional[str]:
        for si, sj, label in self.spans:
            if (si, sj) == (i, j):
                return label
        return None

    def sorted_spans(self) -> list[tuple[int, int, str]]:
        return sorted(self.spans, key=lambda s: (s[0], -(s[1] - s[0])))


@dataclass(frozen=True)
class RemoteRecord:
    """A stripped remote edge, keyed by primary-tree terminal yields."""

    parent_yield: frozenset[int]
    child_yield: frozenset[int]
    category: Category

    def __post_init__(self) -> None:
        if not self.parent_yield or not self.child_yield:
            raise ConversionError("remote record yields must be nonempty")
        if self.parent_yield == self.child_yield:
            raise ConversionError("remote record parent and child yields must differ")


@dataclass(frozen=True)
class DiscontinuityRecord:
    """One lift step: which child moved, from which parent, with which tag."""

    moved_child_yield: frozenset[int]
    original_parent_yield: frozenset[int]
    augmentation_tag: str

    def __post_init__(self) -> None:
        if not self.moved_child_yield:
            raise ConversionError("moved child yield must be nonempty")
        if not self.moved_child_yield < self.original_parent_yield:
            raise ConversionError("moved child yield must be a proper subset of the parent yield")


class _Node:
    """Mutable tree node used during conversion."""

    __slots__ = ("category", "parent_hint", "children", "parent", "pos")

    def __init__(self, category: Optional[Category], pos: Optional[int] = None):
        self.category = category            # None only for the root
        self.parent_hint: Optional[Category] = None  # set while lifted
        self.children: list[_Node] = []
        self.parent: Optional[_Node] = None
        self.pos = pos                      # token position for terminals

    def attach(self, child: "_Node") -> None:
        child.parent = self
        self.children.append(child)

    def detach(self, child: "_Node") -> None:
        self.children.remove(child)
        child.parent = None

    def walk(self) -> Iterable["_Node"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.children)


def _yields(root: _Node) -> dict[int, frozenset[int]]:
    """Yield per node keyed by id(node), computed bottom-up in one pass."""
    out: dict[int, frozenset[int]] = {}
    order = list(root.walk())
    for node in reversed(order):
        acc: set[int] = set()
        if node.pos is not None:
            acc.add(node.pos)
        for c in node.children:
            acc |= out[id(c)]
        out[id(node)] = frozenset(acc)
    return out


def _depths(root: _Node) -> dict[int, int]:
    out = {id(root): 0}
    stack = [root]
    while stack:
        node = stack.pop()
        for c in node.children:
            out[id(c)] = out[id(node)] + 1
            stack.append(c)
    return out


# ---------------------------------------------------------------------------
# graph -> tree


def _pick_offending_child(x: _Node, ys: dict[int, frozenset[int]]) -> _Node:
    """Child of a lowest discontinuous node to lift away.

    Children of a lowest discontinuous node all have contiguous, disjoint
    yields.  Keep the run of adjacent blocks with the largest token mass
    (leftmost on ties) and lift the leftmost child outside it.
    """
    blocks = sorted(x.children, key=lambda c: min(ys[id(c)]))
    runs: list[list[_Node]] = [[blocks[0]]]
    for child in blocks[1:]:
        prev = runs[-1][-1]
        if min(ys[id(child)]) == max(ys[id(prev)]) + 1:
            runs[-1].append(child)
        else:
            runs.append([child])
    keep = max(runs, key=lambda r: sum(len(ys[id(c)]) for c in r))
    kept = {id(c) for c in keep}
    for child in blocks:
        if id(child) not in kept:
            return child
    raise AssertionError("no offending child on a discontinuous node")


def _repair_discontinuities(root: _Node) -> list[DiscontinuityRecord]:
    records: list[DiscontinuityRecord] = []
    while True:
        ys = _yields(root)
        depths = _depths(root)
        disc = [n for n in root.walk() if ys[id(n)] and not is_contiguous(ys[id(n)])]
        if not disc:
            return records
        # Lowest first (leftmost on ties); such a node has >= 2 contiguous
        # children, so lifting one away never empties it.
        x = max(disc, key=lambda n: (depths[id(n)], -min(ys[id(n)])))
        child = _pick_offending_child(x, ys)
        if x.parent is None or child.category is None or x.category is None:
            raise AssertionError("the root is never discontinuous or lifted")
        if child.parent_hint is None:
            child.parent_hint = x.category
        records.append(DiscontinuityRecord(
            moved_child_yield=ys[id(child)],
            original_parent_yield=ys[id(x)],
            augmentation_tag=make_atom(child.category, child.parent_hint),
        ))
        landing = x.parent
        x.detach(child)
        landing.attach(child)


def _extract_remotes(g: UccaGraph) -> list[RemoteRecord]:
    ys = all_yields(g)
    for e in g.remote_edges:
        if ys[e.parent] == ys[e.child]:
            raise ConversionError(
                f"remote edge {e.parent}->{e.child} connects nodes with identical "
                f"yields; such an edge has no yield-keyed representation")
    records = [RemoteRecord(ys[e.parent], ys[e.child], e.category)
               for e in g.remote_edges]
    records.sort(key=lambda r: (sorted(r.child_yield), sorted(r.parent_yield),
                                r.category.value))
    return records


def _spans_from_nodes(root: _Node) -> frozenset[tuple[int, int, str]]:
    """Collapse the (now fully contiguous) node tree into labeled spans."""
    ys = _yields(root)
    depths = _depths(root)
    by_span: dict[tuple[int, int], list[_Node]] = {}
    for node in root.walk():
        y = ys[id(node)]
        span = (min(y) - 1, max(y))
        by_span.setdefault(span, []).append(node)
    spans = set()
    for (i, j), members in by_span.items():
        members.sort(key=lambda m: depths[id(m)])
        atoms = [ROOT_ATOM if m.category is None else make_atom(m.category, m.parent_hint)
                 for m in members]
        spans.add((i, j, join_label(atoms)))
    return frozenset(spans)


def graph_to_tree(g: UccaGraph) -> tuple[ConstituencyTree, list[RemoteRecord], list[DiscontinuityRecord]]:
    """Convert a valid graph to (tree, remote records, discontinuity records).

    Raises ConversionError when the input graph is invalid.
    """
    n = len(g.terminal_positions)
    report = validate_graph(g, n)
    if not report.is_valid:
        raise ConversionError(f"cannot convert invalid graph: {report}")
    remotes = _extract_remotes(g)
    root = _build_mutable_tree(g)
    disc = _repair_discontinuities(root)
    tree = ConstituencyTree(n=n, spans=_spans_from_nodes(root))
    return tree, remotes, disc


def _build_mutable_tree(g: UccaGraph) -> _Node:
    nodes: dict[str, _Node] = {}
    for nid in g.nodes:
        nodes[nid] = _Node(g.category_of(nid), terminal_position(nid))
    for e in g.primary_edges:
        nodes[e.parent].attach(nodes[e.child])
    return nodes[g.root]


# ---------------------------------------------------------------------------
# tree -> graph


def _chain_from_atoms(atoms: tuple[str, ...], span: tuple[int, int]) -> list[_Node]:
    """Nodes for a span's label chain, top to bottom.

    For width-1 spans the bottom of the chain is the terminal itself.
    """
    width1 = span[1] - span[0] == 1
    nodes: list[_Node] = []
    for k, atom in enumerate(atoms):
        category, parent_hint = parse_atom(atom)
        if category is None:
            raise ConversionError(f"ROOT atom inside the chain of span {span}")
        is_bottom = k == len(atoms) - 1
        node = _Node(category, span[1] if (width1 and is_bottom) else None)
        node.parent_hint = parent_hint
        nodes.append(node)
    for upper, lower in zip(nodes, nodes[1:]):
        upper.attach(lower)
    return nodes


def _build_node_forest(t: ConstituencyTree, strict: bool):
    """Parse tree spans into a node tree, synthesizing a root when needed.

    Returns (root, span_top, span_bottom) where the two maps give each
    span's chain endpoints as node objects.
    """
    root_node: Optional[_Node] = None
    stack: list[tuple[int, _Node]] = []  # (span end, bottom node of span chain)
    covered = [False] * (t.n + 1)
    span_top: dict[tuple[int, int], _Node] = {}
    span_bottom: dict[tuple[int, int], _Node] = {}
    for i, j, label in t.sorted_spans():
        atoms = split_label(label)
        if (i, j) == (0, t.n):
            if not atoms:
                raise ConversionError("the top span cannot be unlabeled")
            rest = atoms[1:] if atoms[0] == ROOT_ATOM else atoms
            root_node = _Node(None)
            top = root_node
            if rest:
                chain = _chain_from_atoms(rest, (i, j))
                root_node.attach(chain[0])
                bottom = chain[-1]
            else:
                bottom = root_node
        else:
            if not atoms:
                raise ConversionError(f"inner span ({i}, {j}) is unlabeled")
            if ROOT_ATOM in atoms:
                msg = f"ROOT atom on inner span ({i}, {j})"
                if strict:
                    raise ConversionError(msg)
                logger.warning("%s; stripping it", msg)
                atoms = tuple(a for a in atoms if a != ROOT_ATOM) or (FALLBACK_CATEGORY.value,)
            while stack and stack[-1][0] <= i:
                stack.pop()
            if not stack:
                raise AssertionError("nesting validation guarantees an enclosing span")
            chain = _chain_from_atoms(atoms, (i, j))
            stack[-1][1].attach(chain[0])
            top = chain[0]
            bottom = chain[-1]
        if j - i == 1 and bottom.pos is not None:
            covered[j] = True
        span_top[(i, j)] = top
        span_bottom[(i, j)] = bottom
        stack.append((j, bottom))
    if root_node is None:
        raise AssertionError("tree invariant guarantees a (0, n) span")
    # Tokens without a labeled width-1 span attach to the innermost span
    # around them with a fallback category; gold-converted trees never hit
    # this path, parser output may.
    for pos in range(1, t.n + 1):
        if covered[pos]:
            continue
        candidates = [s for s in span_bottom if s[0] < pos <= s[1]]
        host_span = min(candidates, key=lambda s: s[1] - s[0])
        msg = f"token {pos} has no labeled span"
        if strict:
            raise ConversionError(msg)
        logger.warning("%s; attaching with category %s", msg, FALLBACK_CATEGORY.value)
        span_bottom[host_span].attach(_Node(FALLBACK_CATEGORY, pos))
    return root_node, span_top, span_bottom


def _find_chain_top(root: _Node, target_yield: frozenset[int],
                    ys: dict[int, frozenset[int]]) -> Optional[_Node]:
    """The unique node with this yield whose parent has a different yield.

    Nodes sharing a yield always form a unary chain, and a lifted child's
    landing parent strictly contains it, so the chain top identifies both
    lift parents and moved children unambiguously.
    """
    for node in root.walk():
        if ys[id(node)] != target_yield:
            continue
        if node.parent is None or ys[id(node.parent)] != target_yield:
            return node
    return None


def _undo_lifts(root: _Node, disc: list[DiscontinuityRecord], strict: bool) -> None:
    for record in reversed(disc):
        ys = _yields(root)
        moved = _find_chain_top(root, record.moved_child_yield, ys)
        target_yield = record.original_parent_yield - record.moved_child_yield
        target = _find_chain_top(root, target_yield, ys)
        ok = moved is not None and target is not None and moved.parent is not None
        if ok:
            expected_cat, expected_hint = parse_atom(record.augmentation_tag)
            if moved.category != expected_cat or moved.parent_hint != expected_hint:
                ok = False
        if not ok:
            msg = (f"discontinuity record (child {sorted(record.moved_child_yield)}, "
                   f"parent {sorted(record.original_parent_yield)}, "
                   f"tag {record.augmentation_tag!r}) matches no node")
            if strict:
                raise ConversionError(msg)
            logger.warning("%s; skipping", msg)
            continue
        moved.parent.detach(moved)
        target.attach(moved)
    for node in root.walk():
        node.parent_hint = None


def _heuristic_unlift(root: _Node) -> None:
    """Best-effort restoration of lifted children on predicted trees.

    Each tagged node is pushed under the nearest node (breadth-first from
    its current parent, own subtree excluded) whose category matches the
    tag's parent hint.  Nodes with no match keep their position; all tags
    are consumed either way.
    """
    ys = _yields(root)
    depths = _depths(root)
    tagged = [n for n in root.walk() if n.parent_hint is not None]
    tagged.sort(key=lambda n: (-depths[id(n)], min(ys[id(n)]) if ys[id(n)] else 0))
    for node in tagged:
        hint = node.parent_hint
        node.parent_hint = None
        if node.parent is None:
            continue
        banned = set(id(m) for m in node.walk())
        queue = [c for c in node.parent.children if id(c) not in banned]
        target = None
        while queue and target is None:
            next_queue: list[_Node] = []
            level = [c for c in queue
                     if c.pos is None and c.category == hint]
            if level:
                level_ys = _yields(root)
                target = min(level, key=lambda m: (min(level_ys[id(m)])
                                                   if level_ys[id(m)] else 0))
                break
            for c in queue:
                next_queue.extend(c.children)
            queue = next_queue
        if target is not None:
            node.parent.detach(node)
            target.attach(node)


def _chain_depth(node: _Node, ys: dict[int, frozenset[int]]) -> int:
    """Steps up to the top of the node's equal-yield chain (0 at the top)."""
    depth = 0
    cur = node
    while cur.parent is not None and ys[id(cur.parent)] == ys[id(cur)]:
        depth += 1
        cur = cur.parent
    return depth


def _attach_remotes(root: _Node, ids: dict[int, str], ys: dict[int, frozenset[int]],
                    primary: list[Edge], remotes: list[RemoteRecord],
                    strict: bool) -> list[Edge]:
    primary_pairs = {(e.parent, e.child) for e in primary}
    succ: dict[str, set[str]] = {}
    for e in primary:
        succ.setdefault(e.parent, set()).add(e.child)

    def reaches(src: str, dst: str) -> bool:
        stack, seen = [src], set()
        while stack:
            cur = stack.pop()
            if cur == dst:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(succ.get(cur, ()))
        return False

    by_yield: dict[frozenset[int], list[_Node]] = {}
    for node in root.walk():
        by_yield.setdefault(ys[id(node)], []).append(node)
    for members in by_yield.values():
        members.sort(key=lambda m: -_chain_depth(m, ys))  # innermost first

    root_id = ids[id(root)]

    def options_for(record: RemoteRecord) -> list[tuple[str, str]]:
        pairs = []
        # Terminals may gain a remote parent but can never be one.
        for p in by_yield.get(record.parent_yield, []):
            if p.pos is not None:
                continue
            for c in by_yield.get(record.child_yield, []):
                pid, cid = ids[id(p)], ids[id(c)]
                if pid == cid or cid == root_id or (pid, cid) in primary_pairs:
                    continue
                pairs.append((pid, cid))
        return pairs

    # Assign records to node pairs with backtracking: a greedy choice for an
    # earlier record may block a later one even though a joint assignment
    # exists (chains offer several equal-yield homes).  Search space is tiny:
    # a handful of remotes with a handful of candidate pairs each.
    placed: list[tuple[RemoteRecord, tuple[str, str]] | tuple[RemoteRecord, None]] = []

    def assign(index: int) -> bool:
        if index == len(remotes):
            return True
        record = remotes[index]
        for pid, cid in options_for(record):
            if reaches(cid, pid):  # pid -> cid would close a cycle
                continue
            succ.setdefault(pid, set()).add(cid)
            placed.append((record, (pid, cid)))
            if assign(index + 1):
                return True
            placed.pop()
            succ[pid].discard(cid)
        return False

    out: list[Edge] = []
    if assign(0):
        for record, pair in placed:
            out.append(Edge(pair[0], pair[1], record.category, True))
    else:
        # No joint assignment: place records one by one, dropping losers.
        placed.clear()
        for record in remotes:
            chosen = None
            for pid, cid in options_for(record):
                if not reaches(cid, pid):
                    chosen = (pid, cid)
                    break
            if chosen is None:
                msg = (f"remote record (parent {sorted(record.parent_yield)}, "
                       f"child {sorted(record.child_yield)}, {record.category.value}) "
                       f"matches no valid node pair")
                if strict:
                    raise ConversionError(msg)
                logger.warning("%s; dropping", msg)
                continue
            succ.setdefault(chosen[0], set()).add(chosen[1])
            out.append(Edge(chosen[0], chosen[1], record.category, True))
    out.sort(key=lambda e: (e.parent, e.child, e.category.value))
    return out


def _emit_graph(root: _Node, remotes: list[RemoteRecord], strict: bool) -> UccaGraph:
    ys = _yields(root)
    order = sorted(root.walk(),
                   key=lambda n: (min(ys[id(n)]), -len(ys[id(n)]), _chain_depth(n, ys)))
    ids: dict[int, str] = {}
    counter = 0
    for node in order:
        if node.pos is not None:
            ids[id(node)] = terminal_id(node.pos)
        elif node.parent is None:
            ids[id(node)] = "root"
        else:
            counter += 1
            ids[id(node)] = f"n{counter}"
    edges: list[Edge] = []
    for node in root.walk():
        for child in node.children:
            if child.category is None:
                raise ConversionError("internal node without a category")
            edges.append(Edge(ids[id(node)], ids[id(child)], child.category, False))
    edges.sort(key=lambda e: (e.parent, e.child, e.category.value))
    remote_edges = _attach_remotes(root, ids, ys, edges, remotes, strict)
    graph = UccaGraph(nodes=frozenset(ids.values()),
                      edges=tuple(edges) + tuple(remote_edges),
                      root=ids[id(root)])
    return graph, ids


def tree_to_graph(t: ConstituencyTree,
                  remotes: Iterable[RemoteRecord] = (),
                  disc: Iterable[DiscontinuityRecord] = (),
                  *, strict: bool = False) -> UccaGraph:
    """Rebuild a graph from a tree plus optional conversion records.

    Exact inverse of graph_to_tree on its own outputs.  With an empty
    discontinuity list (the parser output path) lifted children are
    restored heuristically from their label tags.  In lenient mode
    (default) unmatchable records and uncovered tokens degrade to
    warnings; strict mode raises.
    """
    graph, _ = tree_to_graph_with_spans(t, remotes, disc, strict=strict)
    return graph


def tree_to_graph_with_spans(t: ConstituencyTree,
                             remotes: Iterable[RemoteRecord] = (),
                             disc: Iterable[DiscontinuityRecord] = (),
                             *, strict: bool = False):
    """tree_to_graph plus a map from tree span to (top, bottom) node ids.

    The mapping survives lift restoration, so callers can relate spans of a
    predicted tree to nodes of the reconstructed graph even when yields
    moved.
    """
    disc = list(disc)
    root, span_top, span_bottom = _build_node_forest(t, strict)
    if disc:
        _undo_lifts(root, disc, strict)
    else:
        _heuristic_unlift(root)
    graph, ids = _emit_graph(root, list(remotes), strict)
    span_nodes = {span: (ids[id(span_top[span])], ids[id(span_bottom[span])])
                  for span in span_top}
    return graph, span_nodes


# ---------------------------------------------------------------------------
# binarization


def binarize(t: ConstituencyTree) -> ConstituencyTree:
    """Insert empty-labeled spans so every span has at most two children.

    Children are grouped right-branching; only empty labels are added.
    """
    children: dict[tuple[int, int], list[tuple[int, int]]] = {}
    stack: list[tuple[int, int]] = []
    for i, j, _ in t.sorted_spans():
        while stack and stack[-1][1] <= i:
            stack.pop()
        if stack:
            children.setdefault(stack[-1], []).append((i, j))
        stack.append((i, j))
    new_spans = set(t.spans)
    for kids in children.values():
        kids = sorted(kids)
        for idx in range(1, len(kids) - 1):
            new_spans.add((kids[idx][0], kids[-1][1], EMPTY_LABEL))
    return ConstituencyTree(n=t.n, spans=frozenset(new_spans))


def debinarize(t: ConstituencyTree) -> ConstituencyTree:
    """Drop empty-labeled spans; exact inverse of binarize."""
    return ConstituencyTree(
        n=t.n,
        spans=frozenset(s for s in t.spans if s[2] != EMPTY_LABEL),
    )


def derive_label_inventory(trees: Iterable[ConstituencyTree],
                           include_punctuation: bool = False) -> tuple[str, ...]:
    """Sorted labels observed in converted trees.

    Labels containing the punctuation category are excluded unless enabled;
    the empty label is never part of the inventory (it has a reserved slot).
    """
    labels: set[str] = set()
    for t in trees:
        for _, _, label in t.spans:
            if label == EMPTY_LABEL:
                continue
            if not include_punctuation:
                parts = [parse_atom(a) for a in split_label(label)]
                if any(Category.PUNCTUATION in pair for pair in parts):
                    continue
            labels.add(label)
    return tuple(sorted(labels))
