"""Tree decoding over a span chart.

``cyk_decode`` finds the globally optimal labeled binary bracketing by
bottom-up dynamic programming; ``brute_force_decode`` enumerates every
bracketing explicitly and exists purely as a testing oracle.  Both share
the same tie-breaking rule: prefer the lower split point, then the smaller
label id, so their outputs are identical trees (not merely equal scores).

Every span of a bracketing carries exactly one label.  The empty label
(slot 0) is allowed anywhere except the whole-sentence span and its score
participates in the tree total; empty-labeled spans are dropped from the
returned tree.
"""

from __future__ import annotations

from dataclasses import dataclass

from .conversion import EMPTY_LABEL, ConstituencyTree
from .encoder import SpanChart
from .errors import GraphError

#: Guard for the exhaustive oracle: Catalan growth beyond this is pointless.
BRUTE_FORCE_MAX_N = 10


@dataclass(frozen=True)
class DecodedTree:
    """Full decoding result, including pre-debinarization bookkeeping."""

    tree: ConstituencyTree
    score: float
    binary_spans: tuple[tuple[int, int, str], ...]  # includes empty labels


def _best_labels(chart: SpanChart):
    """Per-span argmax label ids (nested lists) and scores (numpy matrix).

    numpy argmax keeps the first maximum, which realizes the smallest-id
    tie-break; the whole-sentence span re-runs its argmax without slot 0.
    """
    n = chart.n
    best_id = chart.scores.argmax(axis=2).tolist()
    scored = chart.scores.max(axis=2)
    root_cell = chart.scores[0, n]
    rid = 1 + int(root_cell[1:].argmax())
    best_id[0][n] = rid
    scored[0, n] = root_cell[rid]
    return best_id, scored


def _label_string(chart: SpanChart, label_id: int) -> str:
    return EMPTY_LABEL if label_id == 0 else chart.labels[label_id - 1]


def _check_chart(chart: SpanChart) -> None:
    if chart.n < 1:
        raise GraphError("cannot decode an empty chart")
    if not chart.labels:
        raise GraphError("chart has no labels to assign")


NEG_INF = float("-inf")


def decode_with_details(chart: SpanChart) -> DecodedTree:
    """CYK decoding with the optimal score and the binary span list.

    Chart cells live in span-keyed dictionaries; the split-point scan below
    is the cubic core of the decoder.
    """
    _check_chart(chart)
    n = chart.n
    best_id, best_matrix = _best_labels(chart)
    best_score = best_matrix.tolist()
    total: dict[tuple[int, int], float] = {}
    split: dict[tuple[int, int], int] = {}
    for i in range(n):
        total[i, i + 1] = best_score[i][i + 1]
    for width in range(2, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            best = NEG_INF
            best_k = i + 1
            for k in range(i + 1, j):
                cand = total[i, k] + total[k, j]
                if cand > best:
                    best, best_k = cand, k
            total[i, j] = best + best_score[i][j]
            split[i, j] = best_k
    spans: list[tuple[int, int, str]] = []
    stack = [(0, n)]
    while stack:
        i, j = stack.pop()
        spans.append((i, j, _label_string(chart, best_id[i][j])))
        if j - i > 1:
            k = split[i, j]
            stack.append((i, k))
            stack.append((k, j))
    spans.sort(key=lambda s: (s[0], -(s[1] - s[0])))
    tree = ConstituencyTree.trusted(
        n, frozenset(s for s in spans if s[2] != EMPTY_LABEL))
    # Report the canonical span-order sum so both decoders agree bitwise;
    # the DP accumulator only steers the argmax.  Chosen labels are per-span
    # argmaxes, so the canonical sum reads straight off best_score.
    score = 0.0
    for i, j, _ in spans:
        score += best_score[i][j]
    return DecodedTree(tree=tree, score=score, binary_spans=tuple(spans))


def cyk_decode(chart: SpanChart) -> ConstituencyTree:
    """Globally optimal labeled tree for a complete chart."""
    return decode_with_details(chart).tree


def _enumerate_shapes(i: int, j: int):
    """All full binary bracketings over (i, j) as nested tuples.

    A leaf is (i, j); an internal node is (i, j, k, left, right).
    """
    if j - i == 1:
        yield (i, j)
        return
    for k in range(i + 1, j):
        for left in _enumerate_shapes(i, k):
            for right in _enumerate_shapes(k, j):
                yield (i, j, k, left, right)


def _shape_score(shape, best_score) -> float:
    total = best_score[shape[0]][shape[1]]
    if len(shape) == 5:
        total += _shape_score(shape[3], best_score)
        total += _shape_score(shape[4], best_score)
    return total


def _shape_order(a, b) -> int:
    """-1 if a precedes b under the tie-breaking order, else 1 (0 if equal).

    Lower split point first, recursing into the left then right subtrees.
    """
    if len(a) == 2 and len(b) == 2:
        return 0
    if a[2] != b[2]:
        return -1 if a[2] < b[2] else 1
    left = _shape_order(a[3], b[3])
    if left != 0:
        return left
    return _shape_order(a[4], b[4])


def _collect_spans(shape, out: list) -> None:
    out.append((shape[0], shape[1]))
    if len(shape) == 5:
        _collect_spans(shape[3], out)
        _collect_spans(shape[4], out)


def brute_force_decode_with_details(chart: SpanChart) -> DecodedTree:
    """Exhaustive oracle: enumerate every bracketing and pick the best."""
    _check_chart(chart)
    n = chart.n
    if n > BRUTE_FORCE_MAX_N:
        raise GraphError(f"brute force decoding is limited to n <= {BRUTE_FORCE_MAX_N}")
    best_id, best_matrix = _best_labels(chart)
    best_score = best_matrix.tolist()
    best_shape = None
    best_total = float("-inf")
    for shape in _enumerate_shapes(0, n):
        total = _shape_score(shape, best_score)
        if total > best_total or (
                total == best_total and best_shape is not None
                and _shape_order(shape, best_shape) < 0):
            best_total, best_shape = total, shape
    assert best_shape is not None
    span_list: list[tuple[int, int]] = []
    _collect_spans(best_shape, span_list)
    spans = [(i, j, _label_string(chart, best_id[i][j])) for i, j in span_list]
    spans.sort(key=lambda s: (s[0], -(s[1] - s[0])))
    tree = ConstituencyTree.trusted(
        n, frozenset(s for s in spans if s[2] != EMPTY_LABEL))
    score = 0.0
    for i, j, _ in spans:
        score += best_score[i][j]
    return DecodedTree(tree=tree, score=score, binary_spans=tuple(spans))


def brute_force_decode(chart: SpanChart) -> ConstituencyTree:
    """Maximum-score tree by explicit enumeration; testing oracle only."""
    return brute_force_decode_with_details(chart).tree


def tree_score(chart: SpanChart, binary_spans) -> float:
    """Score of a decoded tree from its binary span list.

    Sums in canonical span order so the result is bit-stable regardless of
    which decoder produced the list.
    """
    label_ids = {EMPTY_LABEL: 0}
    for idx, label in enumerate(chart.labels, start=1):
        label_ids[label] = idx
    ordered = sorted(binary_spans, key=lambda s: (s[0], -(s[1] - s[0])))
    total = 0.0
    for i, j, label in ordered:
        total += float(chart.scores[i, j, label_ids[label]])
    return total
