"""Self-attentive encoder and span scorer.

Token features are embedded, concatenated and projected into the model
dimension; eight identical self-attention layers produce context vectors;
a two-layer MLP scores every fencepost span against the label inventory
plus the reserved empty label.

A span is represented by the concatenation of its two boundary fencepost
vectors, where fencepost ``k`` combines the forward half of the context
vector at token ``k`` with the backward half at token ``k + 1`` (zero
vectors past the sequence edges).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError, GraphError
from .graph import Passage

#: Number of self-attention layers; fixed by construction.
NUM_LAYERS = 8

#: Embedding widths for the five token feature channels.
WORD_DIM = 100
POS_DIM = 50
DEP_DIM = 50
ENTITY_DIM = 25
IOB_DIM = 25
TOKEN_DIM = WORD_DIM + POS_DIM + DEP_DIM + ENTITY_DIM + IOB_DIM  # 250

UNK = "<unk>"


@dataclass(frozen=True)
class EncoderConfig:
    """Architecture knobs; the defaults are the reference configuration."""

    d_model: int = 256
    n_heads: int = 8
    d_ff: int = 1024
    span_hidden: int = 256
    remote_hidden: int = 128
    dropout: float = 0.1
    word_dropout: float = 1.0   # scale on 1/(1+freq); 0 disables
    use_positional: bool = True
    max_len: int = 512
    dtype: str = "float64"      # "float32" permitted at runtime

    def __post_init__(self) -> None:
        if self.d_model % self.n_heads != 0:
            raise ConfigError("d_model must be divisible by n_heads")
        if self.d_model % 2 != 0:
            raise ConfigError("d_model must be even for fencepost halves")
        if self.dtype not in ("float64", "float32"):
            raise ConfigError(f"unsupported dtype {self.dtype!r}")

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    def to_dict(self) -> dict:
        return {
            "d_model": self.d_model, "n_heads": self.n_heads, "d_ff": self.d_ff,
            "span_hidden": self.span_hidden, "remote_hidden": self.remote_hidden,
            "dropout": self.dropout, "word_dropout": self.word_dropout,
            "use_positional": self.use_positional, "max_len": self.max_len,
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        return cls(**d)


@dataclass
class Vocab:
    """Symbol table with an unknown entry at index 0 and training counts."""

    symbols: tuple[str, ...]
    counts: dict[str, int]
    index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        if not self.symbols or self.symbols[0] != UNK:
            raise ConfigError("vocab must start with the unknown symbol")
        self.index = {s: i for i, s in enumerate(self.symbols)}

    def __len__(self) -> int:
        return len(self.symbols)

    def lookup(self, symbol: str) -> int:
        return self.index.get(symbol, 0)

    @classmethod
    def build(cls, values: Sequence[str]) -> "Vocab":
        counts: dict[str, int] = {}
        for v in values:
            counts[v] = counts.get(v, 0) + 1
        return cls(symbols=(UNK,) + tuple(sorted(counts)), counts=counts)


@dataclass
class Linear:
    w: Tensor
    b: Tensor

    def __call__(self, x: Tensor) -> Tensor:
        return ad.add(ad.matmul(x, self.w), self.b)


@dataclass
class Mlp:
    """Two dense layers with a ReLU between them."""

    l1: Linear
    l2: Linear

    def __call__(self, x: Tensor) -> Tensor:
        return self.l2(ad.relu(self.l1(x)))


@dataclass
class LayerNormParams:
    gain: Tensor
    bias: Tensor

    def __call__(self, x: Tensor) -> Tensor:
        return ad.layer_norm(x, self.gain, self.bias)


@dataclass
class AttentionLayer:
    wq: Linear
    wk: Linear
    wv: Linear
    wo: Linear
    ln_attn: LayerNormParams
    ff: Mlp
    ln_ff: LayerNormParams


@dataclass
class EmbeddingTables:
    """Per-feature embedding tables with their vocabularies."""

    word: Tensor
    pos: Tensor
    dep: Tensor
    entity: Tensor
    iob: Tensor
    word_vocab: Vocab
    pos_vocab: Vocab
    dep_vocab: Vocab
    entity_vocab: Vocab
    iob_vocab: Vocab

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [
            ("tables.word", self.word), ("tables.pos", self.pos),
            ("tables.dep", self.dep), ("tables.entity", self.entity),
            ("tables.iob", self.iob),
        ]


@dataclass
class EncoderParams:
    """All weights of the encoder stack and the span scorer."""

    config: EncoderConfig
    labels: tuple[str, ...]           # inventory; the empty label has slot 0
    in_proj: Linear
    layers: list[AttentionLayer]
    final_ln: LayerNormParams
    span_mlp: Mlp
    positional: np.ndarray            # (max_len, d_model), constant
    external_dim: int = 0

    def __post_init__(self) -> None:
        if len(self.layers) != NUM_LAYERS:
            raise ConfigError(f"encoder must have exactly {NUM_LAYERS} layers")
        out_dim = self.span_mlp.l2.b.shape[0]
        if out_dim != len(self.labels) + 1:
            raise ConfigError(
                f"span scorer emits {out_dim} scores for {len(self.labels)} labels + 1")

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out: list[tuple[str, Tensor]] = [
            ("in_proj.w", self.in_proj.w), ("in_proj.b", self.in_proj.b)]
        for i, layer in enumerate(self.layers):
            p = f"layer{i}"
            out += [
                (f"{p}.wq.w", layer.wq.w), (f"{p}.wq.b", layer.wq.b),
                (f"{p}.wk.w", layer.wk.w), (f"{p}.wk.b", layer.wk.b),
                (f"{p}.wv.w", layer.wv.w), (f"{p}.wv.b", layer.wv.b),
                (f"{p}.wo.w", layer.wo.w), (f"{p}.wo.b", layer.wo.b),
                (f"{p}.ln_attn.gain", layer.ln_attn.gain),
                (f"{p}.ln_attn.bias", layer.ln_attn.bias),
                (f"{p}.ff1.w", layer.ff.l1.w), (f"{p}.ff1.b", layer.ff.l1.b),
                (f"{p}.ff2.w", layer.ff.l2.w), (f"{p}.ff2.b", layer.ff.l2.b),
                (f"{p}.ln_ff.gain", layer.ln_ff.gain),
                (f"{p}.ln_ff.bias", layer.ln_ff.bias),
            ]
        out += [
            ("final_ln.gain", self.final_ln.gain), ("final_ln.bias", self.final_ln.bias),
            ("span_mlp.l1.w", self.span_mlp.l1.w), ("span_mlp.l1.b", self.span_mlp.l1.b),
            ("span_mlp.l2.w", self.span_mlp.l2.w), ("span_mlp.l2.b", self.span_mlp.l2.b),
        ]
        return out


@dataclass(frozen=True)
class SpanChart:
    """Scores for every span and label; slot 0 is the empty label."""

    n: int
    labels: tuple[str, ...]
    scores: np.ndarray  # (n + 1, n + 1, len(labels) + 1)

    def __post_init__(self) -> None:
        expected = (self.n + 1, self.n + 1, len(self.labels) + 1)
        if self.scores.shape != expected:
            raise ConfigError(f"chart shape {self.scores.shape}, expected {expected}")
        for i in range(self.n):
            for j in range(i + 1, self.n + 1):
                if not np.isfinite(self.scores[i, j]).all():
                    raise ConfigError(f"non-finite chart scores at span ({i}, {j})")

    def score(self, i: int, j: int, label_id: int) -> float:
        return float(self.scores[i, j, label_id])

    @property
    def num_spans(self) -> int:
        return self.n * (self.n + 1) // 2


@dataclass
class TrainContext:
    """Carries the RNG and dropout switches along a training forward pass."""

    rng: np.random.Generator
    dropout: float
    word_dropout: float = 0.0


def sinusoidal_encoding(max_len: int, d_model: int, dtype=np.float64) -> np.ndarray:
    pos = np.arange(max_len, dtype=dtype)[:, None]
    dim = np.arange(0, d_model, 2, dtype=dtype)[None, :]
    angle = pos / np.power(10000.0, dim / d_model)
    out = np.zeros((max_len, d_model), dtype=dtype)
    out[:, 0::2] = np.sin(angle)
    out[:, 1::2] = np.cos(angle)
    return out


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype)


def _linear(rng: np.random.Generator, fan_in: int, fan_out: int, dtype) -> Linear:
    return Linear(w=ad.parameter(_glorot(rng, fan_in, fan_out, dtype)),
                  b=ad.parameter(np.zeros(fan_out, dtype=dtype)))


def _layer_norm_params(dim: int, dtype) -> LayerNormParams:
    return LayerNormParams(gain=ad.parameter(np.ones(dim, dtype=dtype)),
                           bias=ad.parameter(np.zeros(dim, dtype=dtype)))


def init_embedding_tables(rng: np.random.Generator,
                          word_vocab: Vocab, pos_vocab: Vocab, dep_vocab: Vocab,
                          entity_vocab: Vocab, iob_vocab: Vocab,
                          dtype=np.float64) -> EmbeddingTables:
    def table(vocab: Vocab, dim: int) -> Tensor:
        return ad.parameter(rng.normal(0.0, 0.1, size=(len(vocab), dim)).astype(dtype))

    return EmbeddingTables(
        word=table(word_vocab, WORD_DIM), pos=table(pos_vocab, POS_DIM),
        dep=table(dep_vocab, DEP_DIM), entity=table(entity_vocab, ENTITY_DIM),
        iob=table(iob_vocab, IOB_DIM),
        word_vocab=word_vocab, pos_vocab=pos_vocab, dep_vocab=dep_vocab,
        entity_vocab=entity_vocab, iob_vocab=iob_vocab,
    )


def init_encoder_params(rng: np.random.Generator, config: EncoderConfig,
                        labels: tuple[str, ...], external_dim: int = 0) -> EncoderParams:
    dtype = config.np_dtype
    d = config.d_model
    layers = []
    for _ in range(NUM_LAYERS):
        layers.append(AttentionLayer(
            wq=_linear(rng, d, d, dtype), wk=_linear(rng, d, d, dtype),
            wv=_linear(rng, d, d, dtype), wo=_linear(rng, d, d, dtype),
            ln_attn=_layer_norm_params(d, dtype),
            ff=Mlp(_linear(rng, d, config.d_ff, dtype), _linear(rng, config.d_ff, d, dtype)),
            ln_ff=_layer_norm_params(d, dtype),
        ))
    span_mlp = Mlp(_linear(rng, 2 * d, config.span_hidden, dtype),
                   _linear(rng, config.span_hidden, len(labels) + 1, dtype))
    return EncoderParams(
        config=config, labels=labels,
        in_proj=_linear(rng, TOKEN_DIM + external_dim, d, dtype),
        layers=layers, final_ln=_layer_norm_params(d, dtype), span_mlp=span_mlp,
        positional=sinusoidal_encoding(config.max_len, d, dtype),
        external_dim=external_dim,
    )


def embed_tokens(passage: Passage, tables: EmbeddingTables,
                 external_vectors: Optional[np.ndarray] = None,
                 train_ctx: Optional[TrainContext] = None) -> Tensor:
    """Concatenated feature embeddings per token, (n, 250 [+ k]).

    Unknown feature values fall back to each table's unknown row.  During
    training, words are replaced by the unknown row with probability
    scale / (scale + count) to give that row gradient signal.
    """
    n = passage.n_tokens
    if n == 0:
        raise GraphError("cannot embed an empty passage")
    if external_vectors is not None and external_vectors.shape[0] != n:
        raise GraphError(
            f"external vectors have {external_vectors.shape[0]} rows for {n} tokens")
    word_ids = []
    for t in passage.terminals:
        idx = tables.word_vocab.lookup(t.surface)
        if train_ctx is not None and train_ctx.word_dropout > 0 and idx != 0:
            count = tables.word_vocab.counts.get(t.surface, 0)
            p = train_ctx.word_dropout / (train_ctx.word_dropout + count)
            if train_ctx.rng.random() < p:
                idx = 0
        word_ids.append(idx)
    pos_ids = [tables.pos_vocab.lookup(t.pos_tag) for t in passage.terminals]
    dep_ids = [tables.dep_vocab.lookup(t.dep_label) for t in passage.terminals]
    ent_ids = [tables.entity_vocab.lookup(t.entity_type) for t in passage.terminals]
    iob_ids = [tables.iob_vocab.lookup(t.entity_iob) for t in passage.terminals]
    parts = [
        ad.take_rows(tables.word, np.asarray(word_ids)),
        ad.take_rows(tables.pos, np.asarray(pos_ids)),
        ad.take_rows(tables.dep, np.asarray(dep_ids)),
        ad.take_rows(tables.entity, np.asarray(ent_ids)),
        ad.take_rows(tables.iob, np.asarray(iob_ids)),
    ]
    if external_vectors is not None:
        parts.append(ad.as_tensor(external_vectors.astype(tables.word.data.dtype)))
    return ad.concat(parts, axis=1)


def _attention_block(x: Tensor, layer: AttentionLayer, config: EncoderConfig,
                     train_ctx: Optional[TrainContext],
                     attn_sink: Optional[list] = None) -> Tensor:
    """One pre-norm layer: x + Attn(LN(x)), then x + FF(LN(x)).

    The pre-norm arrangement keeps an identity path through all layers, so
    token and position signal survives to the span scorer even at depth 8.
    """
    n, d = x.shape
    h, dh = config.n_heads, config.d_model // config.n_heads

    def heads(t: Tensor) -> Tensor:
        return ad.transpose(ad.reshape(t, (n, h, dh)), (1, 0, 2))

    normed = layer.ln_attn(x)
    q, k, v = heads(layer.wq(normed)), heads(layer.wk(normed)), heads(layer.wv(normed))
    scores = ad.mul(ad.matmul(q, ad.transpose(k, (0, 2, 1))), 1.0 / np.sqrt(dh))
    attn = ad.softmax(scores, axis=-1)
    if attn_sink is not None:
        attn_sink.append(attn.detach())
    if train_ctx is not None:
        attn = ad.dropout(attn, train_ctx.dropout, train_ctx.rng)
    ctx = ad.reshape(ad.transpose(ad.matmul(attn, v), (1, 0, 2)), (n, d))
    ctx = layer.wo(ctx)
    if train_ctx is not None:
        ctx = ad.dropout(ctx, train_ctx.dropout, train_ctx.rng)
    x = ad.add(x, ctx)
    ff = layer.ff(layer.ln_ff(x))
    if train_ctx is not None:
        ff = ad.dropout(ff, train_ctx.dropout, train_ctx.rng)
    return ad.add(x, ff)


def encode(xs: Tensor, params: EncoderParams,
           train_ctx: Optional[TrainContext] = None,
           attn_sink: Optional[list] = None) -> Tensor:
    """Context vectors (n, d_model) for a token feature matrix.

    Deterministic in inference mode; ``attn_sink`` collects per-layer
    attention probability tensors of shape (heads, n, n) when provided.
    """
    n = xs.shape[0]
    if n == 0:
        raise GraphError("cannot encode an empty sequence")
    if n > params.config.max_len:
        raise GraphError(f"sequence length {n} exceeds max_len {params.config.max_len}")
    x = params.in_proj(xs)
    if params.config.use_positional:
        x = ad.add(x, params.positional[:n])
    if train_ctx is not None:
        x = ad.dropout(x, train_ctx.dropout, train_ctx.rng)
    for layer in params.layers:
        x = _attention_block(x, layer, params.config, train_ctx, attn_sink)
    return params.final_ln(x)


def fencepost_vectors(ys: Tensor) -> Tensor:
    """(n + 1, d) fencepost matrix from token context vectors.

    Fencepost k concatenates the forward half of token k with the backward
    half of token k + 1, with zero padding past both edges.
    """
    n, d = ys.shape
    zeros = ad.as_tensor(np.zeros((1, d), dtype=ys.data.dtype))
    padded = ad.concat([zeros, ys, zeros], axis=0)          # rows 0..n+1
    fwd = padded[:, : d // 2]
    bwd = padded[:, d // 2:]
    return ad.concat([fwd[0: n + 1], bwd[1: n + 2]], axis=1)


def span_index(n: int) -> list[tuple[int, int]]:
    """All (i, j) spans with 0 <= i < j <= n in a fixed order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n + 1)]


def span_representations(ys: Tensor, spans: Sequence[tuple[int, int]]) -> Tensor:
    """Concatenated boundary fencepost vectors, one row per span."""
    f = fencepost_vectors(ys)
    ii = np.asarray([i for i, _ in spans])
    jj = np.asarray([j for _, j in spans])
    return ad.concat([ad.take_rows(f, ii), ad.take_rows(f, jj)], axis=1)


def span_logits(ys: Tensor, params: EncoderParams) -> tuple[Tensor, list[tuple[int, int]]]:
    """Differentiable label scores for every span: (m, |labels| + 1)."""
    n = ys.shape[0]
    spans = span_index(n)
    return params.span_mlp(span_representations(ys, spans)), spans


def span_scores(ys: Tensor, params: EncoderParams) -> SpanChart:
    """Detached chart of label scores for every span.

    Scores are normalized per span relative to the empty-label logit, so
    slot 0 is exactly zero everywhere.  Cross-entropy training calibrates
    labels within a span, not raw logits across spans; decoding on the
    margins over the empty label makes the summed tree objective meaningful.
    """
    logits, spans = span_logits(ys, params)
    n = ys.shape[0]
    scores = np.zeros((n + 1, n + 1, len(params.labels) + 1), dtype=np.float64)
    data = logits.detach().astype(np.float64)
    data = data - data[:, :1]
    for row, (i, j) in enumerate(spans):
        scores[i, j] = data[row]
    return SpanChart(n=n, labels=params.labels, scores=scores)
