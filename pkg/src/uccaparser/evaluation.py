"""Mutual-edge scoring: labeled/unlabeled precision, recall and F1.

Edges are matched between predicted and gold graphs by terminal-yield
signatures, never by node ids: an edge matches when both endpoint yields
agree (and the category too, in labeled mode).  Primary and remote edges
are always scored as separate populations; the "all" population pools
their counts.  Corpus scores are micro-averages: counts are summed over
passages before any division.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import GraphError
from .graph import Edge, UccaGraph, all_yields

POPULATIONS = ("primary", "remote", "all")
MODES = ("labeled", "unlabeled")
#: Cumulative sentence-length buckets for the breakdown report.
LENGTH_BUCKETS = (10, 20, 30, 40, 50)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class Counts:
    """Matched/predicted/gold edge counts for one population and mode."""

    matched: int = 0
    predicted: int = 0
    gold: int = 0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(self.matched + other.matched,
                      self.predicted + other.predicted,
                      self.gold + other.gold)

    @property
    def precision(self) -> float:
        if self.predicted == 0:
            return 1.0 if self.gold == 0 else 0.0
        return self.matched / self.predicted

    @property
    def recall(self) -> float:
        if self.gold == 0:
            return 1.0 if self.predicted == 0 else 0.0
        return self.matched / self.gold

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)


def edge_signature(g: UccaGraph, edge: Edge, labeled: bool = True,
                   yields: Optional[dict[str, frozenset[int]]] = None):
    """Yield-based identity of an edge: (parent, child[, category], remote)."""
    ys = yields if yields is not None else all_yields(g)
    parent = tuple(sorted(ys[edge.parent]))
    child = tuple(sorted(ys[edge.child]))
    if labeled:
        return (parent, child, edge.category.value, edge.remote)
    return (parent, child, edge.remote)


def _signature_multiset(g: UccaGraph, labeled: bool, remote: bool) -> Counter:
    ys = all_yields(g)
    return Counter(edge_signature(g, e, labeled, ys)
                   for e in g.edges if e.remote == remote)


@dataclass(frozen=True)
class PairCounts:
    """Per-population, per-mode counts for one predicted/gold pair."""

    cells: dict[tuple[str, str], Counts]
    gold_categories: Counter          # labeled primary matches per category
    pred_primary_categories: Counter  # predicted primary edges per category
    gold_primary_categories: Counter  # gold primary edges per category
    n_tokens: int

    def __add__(self, other: "PairCounts") -> "PairCounts":
        cells = {key: self.cells[key] + other.cells[key] for key in self.cells}
        return PairCounts(
            cells=cells,
            gold_categories=self.gold_categories + other.gold_categories,
            pred_primary_categories=self.pred_primary_categories + other.pred_primary_categories,
            gold_primary_categories=self.gold_primary_categories + other.gold_primary_categories,
            n_tokens=max(self.n_tokens, other.n_tokens),
        )


def score_pair(pred: UccaGraph, gold: UccaGraph) -> PairCounts:
    """Count mutual edges between one predicted and one gold graph."""
    n_pred = len(pred.terminal_positions)
    n_gold = len(gold.terminal_positions)
    if n_pred != n_gold:
        raise GraphError(f"token count mismatch: predicted {n_pred}, gold {n_gold}")
    cells: dict[tuple[str, str], Counts] = {}
    for mode in MODES:
        labeled = mode == "labeled"
        pooled = Counts()
        for population in ("primary", "remote"):
            remote = population == "remote"
            p = _signature_multiset(pred, labeled, remote)
            g = _signature_multiset(gold, labeled, remote)
            matched = sum((p & g).values())
            counts = Counts(matched=matched, predicted=sum(p.values()), gold=sum(g.values()))
            cells[(population, mode)] = counts
            pooled = pooled + counts
        cells[("all", mode)] = pooled

    # Per-category bookkeeping over labeled primary edges.
    p = _signature_multiset(pred, True, False)
    g = _signature_multiset(gold, True, False)
    matched_sigs = p & g
    gold_cat = Counter()
    for sig, count in matched_sigs.items():
        gold_cat[sig[2]] += count
    pred_cats = Counter()
    for sig, count in p.items():
        pred_cats[sig[2]] += count
    gold_cats = Counter()
    for sig, count in g.items():
        gold_cats[sig[2]] += count
    return PairCounts(cells=cells, gold_categories=gold_cat,
                      pred_primary_categories=pred_cats,
                      gold_primary_categories=gold_cats,
                      n_tokens=n_gold)


@dataclass(frozen=True)
class Score:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    gold: int

    @classmethod
    def from_counts(cls, c: Counts) -> "Score":
        return cls(precision=c.precision, recall=c.recall, f1=c.f1,
                   matched=c.matched, predicted=c.predicted, gold=c.gold)

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "matched": self.matched, "predicted": self.predicted, "gold": self.gold}


@dataclass(frozen=True)
class EvalReport:
    """Corpus-level scores with optional length and category breakdowns."""

    scores: dict[tuple[str, str], Score]
    category_f1: dict[str, float] = field(default_factory=dict)
    length_buckets: dict[int, dict[str, float]] = field(default_factory=dict)
    n_pairs: int = 0

    def get(self, population: str, mode: str) -> Score:
        return self.scores[(population, mode)]

    def to_dict(self) -> dict:
        return {
            "pairs": self.n_pairs,
            "scores": {f"{pop}/{mode}": self.scores[(pop, mode)].to_dict()
                       for pop in POPULATIONS for mode in MODES},
            "category_f1": dict(sorted(self.category_f1.items())),
            "length_buckets": {f">={k}": dict(sorted(v.items()))
                               for k, v in sorted(self.length_buckets.items())},
        }

    def to_text(self) -> str:
        lines = [f"pairs: {self.n_pairs}",
                 f"{'population':<10} {'mode':<10} {'P':>7} {'R':>7} {'F1':>7} "
                 f"{'matched':>8} {'pred':>6} {'gold':>6}"]
        for pop in POPULATIONS:
            for mode in MODES:
                s = self.scores[(pop, mode)]
                lines.append(f"{pop:<10} {mode:<10} {s.precision:>7.4f} {s.recall:>7.4f} "
                             f"{s.f1:>7.4f} {s.matched:>8} {s.predicted:>6} {s.gold:>6}")
        if self.category_f1:
            lines.append("category F1 (labeled primary):")
            for cat, value in sorted(self.category_f1.items()):
                lines.append(f"  {cat}: {value:.4f}")
        if self.length_buckets:
            lines.append("length buckets (labeled):")
            for bucket, cells in sorted(self.length_buckets.items()):
                parts = ", ".join(f"{k}={v:.4f}" for k, v in sorted(cells.items()))
                lines.append(f"  >={bucket}: {parts}")
        return "\n".join(lines)


def aggregate(pair_counts: Iterable[PairCounts],
              breakdown_lengths: bool = False,
              breakdown_categories: bool = False) -> EvalReport:
    """Micro-averaged corpus report from per-pair counts.

    Counts are summed before division, so concatenating two corpora and
    scoring them equals summing their per-corpus counts.
    """
    items = list(pair_counts)
    if not items:
        raise GraphError("cannot aggregate an empty collection of pairs")
    total = items[0]
    for pc in items[1:]:
        total = total + pc
    scores = {key: Score.from_counts(counts) for key, counts in total.cells.items()}

    category_f1: dict[str, float] = {}
    if breakdown_categories:
        for cat in sorted(set(total.gold_primary_categories) | set(total.pred_primary_categories)):
            c = Counts(matched=total.gold_categories.get(cat, 0),
                       predicted=total.pred_primary_categories.get(cat, 0),
                       gold=total.gold_primary_categories.get(cat, 0))
            category_f1[cat] = c.f1

    length_buckets: dict[int, dict[str, float]] = {}
    if breakdown_lengths:
        for bucket in LENGTH_BUCKETS:
            selected = [pc for pc in items if pc.n_tokens >= bucket]
            if not selected:
                continue
            pooled = selected[0]
            for pc in selected[1:]:
                pooled = pooled + pc
            length_buckets[bucket] = {
                pop: Score.from_counts(pooled.cells[(pop, "labeled")]).f1
                for pop in POPULATIONS
            }
    return EvalReport(scores=scores, category_f1=category_f1,
                      length_buckets=length_buckets, n_pairs=len(items))


def evaluate_pairs(pairs: Iterable[tuple[UccaGraph, UccaGraph]],
                   breakdown_lengths: bool = False,
                   breakdown_categories: bool = False) -> EvalReport:
    """Score aligned (predicted, gold) graph pairs and aggregate."""
    counts = [score_pair(pred, gold) for pred, gold in pairs]
    return aggregate(counts, breakdown_lengths=breakdown_lengths,
                     breakdown_categories=breakdown_categories)
