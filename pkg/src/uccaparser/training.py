"""Training: loss assembly, optimization, corpus regimes, early stopping.

Regimes control which training passages the model sees:

* ``single``: one language's corpora;
* ``cross``: all training corpora merged, shared vocabulary;
* ``zero_shot``: merged corpora minus every passage of the target language;
* ``few_shot``: merged corpora including the target language's passages.

Model selection runs after every epoch on the pooled validation corpora
using labeled pooled F1 (primary and remote counted together); training
stops once that metric fails to improve for ``patience`` epochs and the
best parameters are restored.  Given a fixed seed the whole procedure is
deterministic, including checkpoint bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .conversion import (
    ConstituencyTree,
    EMPTY_LABEL,
    RemoteRecord,
    derive_label_inventory,
    graph_to_tree,
)
from .encoder import (
    EncoderConfig,
    TrainContext,
    Vocab,
    embed_tokens,
    encode,
    span_logits,
)
from .errors import ConfigError
from .evaluation import evaluate_pairs
from .graph import Passage
from .pipeline import ParserModel, build_model
from .remote import REMOTE_CATEGORIES, RemoteCandidates, RemoteScores, build_candidates, score_remotes

logger = logging.getLogger(__name__)

REGIMES = ("single", "cross", "zero_shot", "few_shot")
ROLES = ("train", "validation")


@dataclass(frozen=True)
class CorpusSpec:
    language: str
    path: str
    role: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ConfigError(f"corpus role must be one of {ROLES}, got {self.role!r}")
        if not self.language:
            raise ConfigError("corpus language cannot be empty")


@dataclass(frozen=True)
class TrainConfig:
    corpora: tuple[CorpusSpec, ...]
    regime: str = "single"
    target_language: Optional[str] = None
    learning_rate: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.98)
    adam_eps: float = 1e-8
    grad_clip_norm: float = 5.0
    patience: int = 10
    seed: int = 0
    batch_size: int = 16
    max_epochs: int = 100
    include_punctuation: bool = False
    remote_threshold: float = 0.5
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    external_vectors: Optional[str] = None

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.regime in ("zero_shot", "few_shot") and not self.target_language:
            raise ConfigError(f"regime {self.regime!r} requires a target language")
        if not any(c.role == "validation" for c in self.corpora):
            raise ConfigError("at least one validation corpus is required")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 0:
            raise ConfigError("batch_size, max_epochs must be >= 1 and patience >= 0")

    def to_dict(self) -> dict:
        return {
            "corpora": [{"language": c.language, "path": c.path, "role": c.role}
                        for c in self.corpora],
            "regime": self.regime,
            "target_language": self.target_language,
            "learning_rate": self.learning_rate,
            "betas": list(self.betas),
            "adam_eps": self.adam_eps,
            "grad_clip_norm": self.grad_clip_norm,
            "patience": self.patience,
            "seed": self.seed,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "include_punctuation": self.include_punctuation,
            "remote_threshold": self.remote_threshold,
            "encoder": self.encoder.to_dict(),
            "external_vectors": self.external_vectors,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        corpora = tuple(CorpusSpec(**c) for c in d.pop("corpora"))
        encoder = EncoderConfig.from_dict(d.pop("encoder", {}))
        betas = tuple(d.pop("betas", (0.9, 0.98)))
        return cls(corpora=corpora, encoder=encoder, betas=betas, **d)

    def hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf8")).hexdigest()[:16]


@dataclass
class LossBreakdown:
    """Total loss tensor and its two detached components."""

    total: Tensor
    non_terminal: float
    remote: float


@dataclass
class GoldAnnotation:
    """Pre-converted training targets for one passage."""

    passage: Passage
    tree: ConstituencyTree
    remotes: list[RemoteRecord]
    candidates: RemoteCandidates

    @classmethod
    def from_passage(cls, passage: Passage) -> "GoldAnnotation":
        tree, remotes, disc = graph_to_tree(passage.graph)
        return cls(passage=passage, tree=tree, remotes=remotes,
                   candidates=build_candidates(tree, disc))


def compute_loss(gold_tree: ConstituencyTree,
                 gold_remotes: Sequence[RemoteRecord],
                 chart: tuple[Tensor, list[tuple[int, int]]],
                 remote_outputs: Optional[RemoteScores],
                 label_ids: dict[str, int]) -> LossBreakdown:
    """Summed cross-entropy losses for spans and remote heads.

    The span term sums label cross-entropy over every chart span, with the
    empty label as the target for non-constituent spans.  The remote term is
    the gate's binary cross-entropy over candidate nodes plus the attach
    head's categorical cross-entropy over gold remote sources.  The total is
    their unweighted sum.
    """
    logits, spans = chart
    n = gold_tree.n
    if len(spans) != n * (n + 1) // 2:
        raise ConfigError(
            f"chart has {len(spans)} spans for a {n}-token gold tree")
    gold_by_span = {(i, j): label for i, j, label in gold_tree.spans}
    targets = np.zeros(len(spans), dtype=np.int64)
    for row, span in enumerate(spans):
        label = gold_by_span.get(span, EMPTY_LABEL)
        if label != EMPTY_LABEL and label not in label_ids:
            label = EMPTY_LABEL  # out-of-inventory gold label (e.g. punctuation)
        targets[row] = 0 if label == EMPTY_LABEL else label_ids[label]
    log_probs = ad.log_softmax(logits, axis=-1)
    picked = log_probs[(np.arange(len(spans)), targets)]
    non_terminal = ad.mul(ad.tsum(picked), -1.0)

    remote_terms: list[Tensor] = []
    if remote_outputs is not None:
        cands = remote_outputs.candidates
        gold_children = {frozenset(r.child_yield) for r in gold_remotes}
        if cands.spans:
            gate_targets = np.array(
                [1.0 if cands.child_yields[s] in gold_children else 0.0 for s in cands.spans])
            z = remote_outputs.gate_logits
            # BCE with logits: sum(softplus(z) - y * z)
            remote_terms.append(
                ad.tsum(ad.sub(ad.softplus(z), ad.mul(z, gate_targets))))
        num_cats = len(REMOTE_CATEGORIES)
        for record in gold_remotes:
            src = _span_of_child_yield(cands, record.child_yield)
            if src is None or src not in remote_outputs.attach_logits:
                continue
            options = cands.parents[src]
            parent_span = _span_of_parent_yield(cands, record.parent_yield, options)
            if parent_span is None:
                continue
            target = options.index(parent_span) * num_cats \
                + REMOTE_CATEGORIES.index(record.category.value)
            lp = ad.log_softmax(remote_outputs.attach_logits[src], axis=-1)
            remote_terms.append(ad.mul(ad.tsum(lp[(np.asarray([target]),)]), -1.0))
    if remote_terms:
        remote_total = remote_terms[0]
        for t in remote_terms[1:]:
            remote_total = ad.add(remote_total, t)
    else:
        remote_total = ad.as_tensor(np.zeros(()))
    total = ad.add(non_terminal, remote_total)
    return LossBreakdown(total=total,
                         non_terminal=float(non_terminal.detach()),
                         remote=float(remote_total.detach()))


def _span_of_child_yield(cands, target_yield: frozenset) -> Optional[tuple[int, int]]:
    for span in cands.spans:
        if cands.child_yields[span] == target_yield:
            return span
    return None


def _span_of_parent_yield(cands, target_yield: frozenset,
                          within: list) -> Optional[tuple[int, int]]:
    for span in within:
        if cands.parent_yields[span] == target_yield:
            return span
    return None


class Adam:
    """Adam with bias correction over named parameter tensors."""

    def __init__(self, params: list[tuple[str, Tensor]], lr: float,
                 betas: tuple[float, float], eps: float):
        self.params = params
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(p.data) for name, p in params}
        self.v = {name: np.zeros_like(p.data) for name, p in params}

    def step(self) -> None:
        self.t += 1
        correct1 = 1.0 - self.b1 ** self.t
        correct2 = 1.0 - self.b2 ** self.t
        for name, p in self.params:
            g = p.grad
            if g is None:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            gsq = g * g
            gsq *= (1.0 - self.b2)
            v += gsq
            denom = v / correct2
            np.sqrt(denom, out=denom)
            denom += self.eps
            np.divide(m, denom, out=denom)
            denom *= self.lr / correct1
            p.data -= denom

    def zero_grad(self) -> None:
        for _, p in self.params:
            p.zero_grad()


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    mean_non_terminal: float
    mean_remote: float
    val_f1_all: float
    val_f1_primary: float
    val_f1_remote: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


@dataclass
class TrainLog:
    regime: str
    target_language: Optional[str]
    train_passage_ids: tuple[str, ...]
    train_languages: dict[str, int]
    epochs: list[EpochLog] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = float("-inf")
    stopped_early: bool = False
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "target_language": self.target_language,
            "train_passage_ids": list(self.train_passage_ids),
            "train_languages": dict(sorted(self.train_languages.items())),
            "epochs": [e.to_dict() for e in self.epochs],
            "best_epoch": self.best_epoch,
            "best_val_f1": self.best_val_f1,
            "stopped_early": self.stopped_early,
            "wall_time_s": self.wall_time_s,
        }


@dataclass
class TrainResult:
    model: ParserModel
    log: TrainLog


def select_training_passages(config: TrainConfig,
                             loaded: dict[str, list[Passage]]) -> list[Passage]:
    """Apply the regime filter to the loaded training corpora."""
    out: list[Passage] = []
    languages = set()
    for spec in config.corpora:
        if spec.role != "train":
            continue
        languages.add(spec.language)
        if config.regime == "zero_shot" and spec.language == config.target_language:
            continue
        out.extend(loaded[spec.path])
    if config.regime == "single" and len(languages) > 1:
        raise ConfigError(
            f"single regime expects one training language, got {sorted(languages)}")
    return out


def build_vocabularies(passages: list[Passage]) -> dict[str, Vocab]:
    """Shared (merged) vocabularies over the selected training passages."""
    words, pos, dep, entity, iob = [], [], [], [], []
    for p in passages:
        for t in p.terminals:
            words.append(t.surface)
            pos.append(t.pos_tag)
            dep.append(t.dep_label)
            entity.append(t.entity_type)
            iob.append(t.entity_iob)
    return {
        "word": Vocab.build(words), "pos": Vocab.build(pos), "dep": Vocab.build(dep),
        "entity": Vocab.build(entity), "iob": Vocab.build(iob),
    }


def _load_corpora(config: TrainConfig) -> dict[str, list[Passage]]:
    from . import io as uio

    loaded: dict[str, list[Passage]] = {}
    for spec in config.corpora:
        if spec.path not in loaded:
            passages = uio.load_corpus(spec.path, strict=True)
            for p in passages:
                if p.graph is None:
                    raise ConfigError(
                        f"passage {p.id!r} in {spec.path} has no gold graph")
                if p.language != spec.language:
                    logger.warning("passage %s declares language %s, corpus entry says %s",
                                   p.id, p.language, spec.language)
            loaded[spec.path] = passages
    return loaded


def _forward_loss(model: ParserModel, gold: GoldAnnotation, label_ids: dict[str, int],
                  ctx: Optional[TrainContext],
                  external: Optional[np.ndarray]) -> LossBreakdown:
    xs = embed_tokens(gold.passage, model.tables, external, train_ctx=ctx)
    ys = encode(xs, model.encoder, train_ctx=ctx)
    chart = span_logits(ys, model.encoder)
    remote_outputs = score_remotes(gold.tree, ys, model.heads, gold.candidates)
    return compute_loss(gold.tree, gold.remotes, chart, remote_outputs, label_ids)


def _external_for(passage: Passage, dim: int,
                  table: Optional[dict]) -> Optional[np.ndarray]:
    from . import io as uio

    if dim == 0:
        return None
    return uio.passage_vectors(passage.id, passage.n_tokens, dim, table or {})


def _validation_f1(model: ParserModel, validation: list[Passage],
                   dim: int, vectors: Optional[dict]) -> tuple[float, float, float]:
    pairs = []
    for p in validation:
        pred = model.parse_passage(p, external=_external_for(p, dim, vectors))
        pairs.append((pred, p.graph))
    report = evaluate_pairs(pairs)
    return (report.get("all", "labeled").f1,
            report.get("primary", "labeled").f1,
            report.get("remote", "labeled").f1)


def train(config: TrainConfig) -> TrainResult:
    """Run the full training procedure and return the best model."""
    start = time.perf_counter()
    loaded = _load_corpora(config)
    train_passages = select_training_passages(config, loaded)
    if not train_passages:
        raise ConfigError(
            "the training set is empty after applying the regime filter; "
            "check the corpora list and target language")
    validation: list[Passage] = []
    for spec in config.corpora:
        if spec.role == "validation":
            validation.extend(loaded[spec.path])
    if not validation:
        raise ConfigError("the validation set is empty")

    vectors_table = None
    external_dim = 0
    if config.external_vectors:
        from . import io as uio

        external_dim, vectors_table = uio.load_external_vectors(config.external_vectors)

    vocabs = build_vocabularies(train_passages)
    golds = [GoldAnnotation.from_passage(p) for p in train_passages]
    labels = derive_label_inventory((g.tree for g in golds),
                                    include_punctuation=config.include_punctuation)
    if not labels:
        raise ConfigError("derived label inventory is empty")
    label_ids = {label: i for i, label in enumerate(labels, start=1)}

    model = build_model(seed=config.seed, config=config.encoder, labels=labels,
                        word_vocab=vocabs["word"], pos_vocab=vocabs["pos"],
                        dep_vocab=vocabs["dep"], entity_vocab=vocabs["entity"],
                        iob_vocab=vocabs["iob"], external_dim=external_dim)
    model.remote_threshold = config.remote_threshold
    model.config_hash = config.hash()

    log = TrainLog(
        regime=config.regime, target_language=config.target_language,
        train_passage_ids=tuple(p.id for p in train_passages),
        train_languages={},
    )
    for p in train_passages:
        log.train_languages[p.language] = log.train_languages.get(p.language, 0) + 1

    params = model.named_parameters()
    optimizer = Adam(params, lr=config.learning_rate, betas=config.betas,
                     eps=config.adam_eps)
    rng = np.random.default_rng(config.seed + 1)
    best_arrays: Optional[dict[str, np.ndarray]] = None
    epochs_since_best = 0

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(golds))
        losses, nts, rms = [], [], []
        for batch_start in range(0, len(order), config.batch_size):
            batch = order[batch_start: batch_start + config.batch_size]
            optimizer.zero_grad()
            batch_scale = 1.0 / len(batch)
            for idx in batch:
                gold = golds[int(idx)]
                ctx = TrainContext(rng=rng, dropout=config.encoder.dropout,
                                   word_dropout=config.encoder.word_dropout)
                loss = _forward_loss(model, gold, label_ids, ctx,
                                     _external_for(gold.passage, external_dim, vectors_table))
                scaled = ad.mul(loss.total, batch_scale)
                scaled.backward()
                losses.append(float(loss.total.detach()))
                nts.append(loss.non_terminal)
                rms.append(loss.remote)
            _clip_gradients(params, config.grad_clip_norm)
            optimizer.step()
        f1_all, f1_primary, f1_remote = _validation_f1(
            model, validation, external_dim, vectors_table)
        log.epochs.append(EpochLog(
            epoch=epoch, mean_loss=float(np.mean(losses)),
            mean_non_terminal=float(np.mean(nts)), mean_remote=float(np.mean(rms)),
            val_f1_all=f1_all, val_f1_primary=f1_primary, val_f1_remote=f1_remote))
        if f1_all > log.best_val_f1:
            log.best_val_f1 = f1_all
            log.best_epoch = epoch
            best_arrays = {name: p.data.copy() for name, p in params}
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best > config.patience:
                log.stopped_early = True
                break

    if best_arrays is not None:
        for name, p in params:
            p.data = best_arrays[name]
    log.wall_time_s = time.perf_counter() - start
    return TrainResult(model=model, log=log)


def _clip_gradients(params: list[tuple[str, Tensor]], max_norm: float) -> None:
    if max_norm <= 0:
        return
    norm = ad.global_grad_norm(p for _, p in params)
    if norm > max_norm:
        scale = max_norm / norm
        for _, p in params:
            if p.grad is not None:
                p.grad *= scale
