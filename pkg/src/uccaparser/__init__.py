"""UCCA parsing toolkit.

Converts UCCA graphs to constituency trees and back, trains a
self-attentive span-scoring model, decodes globally optimal trees with
CYK, recovers remote edges, and scores predictions with labeled and
unlabeled mutual-edge F1.
"""

from .conversion import (
    ConstituencyTree,
    DiscontinuityRecord,
    RemoteRecord,
    binarize,
    debinarize,
    derive_label_inventory,
    graph_to_tree,
    tree_to_graph,
)
from .decoder import brute_force_decode, cyk_decode
from .encoder import EncoderConfig, SpanChart, embed_tokens, encode, span_scores
from .errors import UccaParserError
from .evaluation import EvalReport, aggregate, edge_signature, evaluate_pairs, score_pair
from .graph import (
    Category,
    Edge,
    Passage,
    Terminal,
    UccaGraph,
    ValidationReport,
    terminal_yield,
    validate_graph,
)
from .pipeline import ParserModel
from .remote import RemoteHeads, node_representation, recover_remotes
from .training import TrainConfig, train

__version__ = "0.1.0"

__all__ = [
    "Category", "Terminal", "Edge", "UccaGraph", "Passage", "ValidationReport",
    "validate_graph", "terminal_yield",
    "ConstituencyTree", "RemoteRecord", "DiscontinuityRecord",
    "graph_to_tree", "tree_to_graph", "binarize", "debinarize",
    "derive_label_inventory",
    "EncoderConfig", "SpanChart", "embed_tokens", "encode", "span_scores",
    "cyk_decode", "brute_force_decode",
    "RemoteHeads", "node_representation", "recover_remotes",
    "TrainConfig", "train",
    "EvalReport", "edge_signature", "score_pair", "aggregate", "evaluate_pairs",
    "ParserModel", "UccaParserError",
    "__version__",
]
