"""End-to-end parsing: from a passage to a predicted graph.

A ``ParserModel`` bundles the embedding tables, encoder weights, remote
heads and label inventory, and knows how to serialize itself into the
deterministic checkpoint container.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import io as uio
from .conversion import tree_to_graph
from .decoder import cyk_decode
from .encoder import (
    EmbeddingTables,
    EncoderConfig,
    EncoderParams,
    Vocab,
    embed_tokens,
    encode,
    init_embedding_tables,
    init_encoder_params,
    span_scores,
)
from .errors import CheckpointError, ConfigError
from .graph import Passage, UccaGraph
from .remote import RemoteHeads, init_remote_heads, recover_remotes

CHECKPOINT_KIND = "uccaparser-model"


@dataclass
class ParserModel:
    """Everything needed to parse: weights, vocabularies, label inventory."""

    config: EncoderConfig
    tables: EmbeddingTables
    encoder: EncoderParams
    heads: RemoteHeads
    remote_threshold: float = 0.5
    config_hash: str = ""

    @property
    def labels(self) -> tuple[str, ...]:
        return self.encoder.labels

    def named_parameters(self):
        return (self.tables.named_parameters()
                + self.encoder.named_parameters()
                + self.heads.named_parameters())

    def parameter_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.named_parameters()}

    def parse_passage(self, passage: Passage,
                      external: Optional[np.ndarray] = None,
                      with_remotes: bool = True,
                      threshold: Optional[float] = None) -> UccaGraph:
        """Parse one passage into a graph (deterministic, inference mode)."""
        if self.encoder.external_dim:
            if external is None:
                raise ConfigError(
                    f"model expects {self.encoder.external_dim}-dim external vectors")
            if external.shape[1] != self.encoder.external_dim:
                raise ConfigError(
                    f"external vectors have dim {external.shape[1]}, "
                    f"model expects {self.encoder.external_dim}")
        elif external is not None:
            raise ConfigError("model was trained without external vectors")
        xs = embed_tokens(passage, self.tables, external)
        ys = encode(xs, self.encoder)
        chart = span_scores(ys, self.encoder)
        tree = cyk_decode(chart)
        remotes = []
        if with_remotes:
            remotes = recover_remotes(
                tree, ys, self.heads,
                self.remote_threshold if threshold is None else threshold)
        return tree_to_graph(tree, remotes, [])

    # -- serialization ----------------------------------------------------

    def save(self, path) -> None:
        manifest = {
            "kind": CHECKPOINT_KIND,
            "encoder_config": self.config.to_dict(),
            "labels": list(self.labels),
            "remote_categories": list(self.heads.categories),
            "remote_threshold": self.remote_threshold,
            "external_dim": self.encoder.external_dim,
            "config_hash": self.config_hash,
            "vocabs": {
                name: {"symbols": list(vocab.symbols), "counts": vocab.counts}
                for name, vocab in self._vocabs().items()
            },
        }
        uio.save_checkpoint(path, manifest, self.parameter_arrays())

    def _vocabs(self) -> dict[str, Vocab]:
        return {
            "word": self.tables.word_vocab, "pos": self.tables.pos_vocab,
            "dep": self.tables.dep_vocab, "entity": self.tables.entity_vocab,
            "iob": self.tables.iob_vocab,
        }

    @classmethod
    def load(cls, path) -> "ParserModel":
        manifest, arrays = uio.load_checkpoint(path)
        if manifest.get("kind") != CHECKPOINT_KIND:
            raise CheckpointError(f"{path}: not a parser checkpoint")
        try:
            config = EncoderConfig.from_dict(manifest["encoder_config"])
            labels = tuple(manifest["labels"])
            vocabs = {
                name: Vocab(symbols=tuple(v["symbols"]),
                            counts={k: int(c) for k, c in v["counts"].items()})
                for name, v in manifest["vocabs"].items()
            }
            model = build_model(
                seed=0, config=config, labels=labels,
                word_vocab=vocabs["word"], pos_vocab=vocabs["pos"],
                dep_vocab=vocabs["dep"], entity_vocab=vocabs["entity"],
                iob_vocab=vocabs["iob"],
                external_dim=int(manifest.get("external_dim", 0)),
            )
            model.remote_threshold = float(manifest.get("remote_threshold", 0.5))
            model.config_hash = manifest.get("config_hash", "")
            expected = {name for name, _ in model.named_parameters()}
            if set(arrays) != expected:
                missing = expected - set(arrays)
                extra = set(arrays) - expected
                raise CheckpointError(
                    f"{path}: parameter set mismatch (missing {sorted(missing)[:3]}, "
                    f"extra {sorted(extra)[:3]})")
            for name, p in model.named_parameters():
                if arrays[name].shape != p.data.shape:
                    raise CheckpointError(
                        f"{path}: array {name!r} has shape {arrays[name].shape}, "
                        f"expected {p.data.shape}; the label inventory or "
                        f"architecture does not match")
                p.data = arrays[name].astype(p.data.dtype, copy=True)
        except (KeyError, TypeError, ConfigError) as exc:
            raise CheckpointError(f"{path}: inconsistent checkpoint: {exc}") from exc
        return model


def build_model(seed: int, config: EncoderConfig, labels: tuple[str, ...],
                word_vocab: Vocab, pos_vocab: Vocab, dep_vocab: Vocab,
                entity_vocab: Vocab, iob_vocab: Vocab,
                external_dim: int = 0) -> ParserModel:
    """Freshly initialized model with the given inventories."""
    if not labels:
        raise ConfigError("label inventory is empty; nothing to predict")
    rng = np.random.default_rng(seed)
    dtype = config.np_dtype
    tables = init_embedding_tables(rng, word_vocab, pos_vocab, dep_vocab,
                                   entity_vocab, iob_vocab, dtype)
    encoder = init_encoder_params(rng, config, labels, external_dim)
    heads = init_remote_heads(rng, config)
    return ParserModel(config=config, tables=tables, encoder=encoder, heads=heads)
