"""Start/end span pattern: two per-token softmax classifiers and a greedy matcher."""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus_io import MUTATION_TYPES, MutationType, Span, TokenizedSentence
from .encoding import EncoderConfig, compact, make_encoder
from .optim import Adam, TrainConfig, apply_dropout, minibatches
from .tagging import TagScheme, TagSequence, encode_spans

logger = logging.getLogger(__name__)

NONE = "none"
SPAN_LABELS: tuple[str, ...] = (NONE,) + tuple(t.code for t in MUTATION_TYPES)
_LABEL_INDEX = {lab: i for i, lab in enumerate(SPAN_LABELS)}
FORMAT_VERSION = 1
DEFAULT_MAX_SPAN_LENGTH = 20


@dataclass(frozen=True)
class SpanDecodeConfig:
    max_span_length: int = DEFAULT_MAX_SPAN_LENGTH

    def __post_init__(self):
        if self.max_span_length < 1:
            raise ValueError("max_span_length must be at least 1")


class SpanModel:
    """Start-layer weights ``Ws`` and end-layer weights ``We``, each d x 8."""

    def __init__(self, Ws: np.ndarray, We: np.ndarray, encoder: EncoderConfig | None = None,
                 decode: SpanDecodeConfig = SpanDecodeConfig()):
        self.Ws = np.asarray(Ws, dtype=float)
        self.We = np.asarray(We, dtype=float)
        k = len(SPAN_LABELS)
        if self.Ws.ndim != 2 or self.Ws.shape[1] != k or self.We.shape != self.Ws.shape:
            raise ValueError(f"start and end weights must both have shape (d, {k})")
        self.encoder = encoder
        self.decode = decode

    @classmethod
    def zeros(cls, dim: int, encoder: EncoderConfig | None = None,
              decode: SpanDecodeConfig = SpanDecodeConfig()) -> "SpanModel":
        k = len(SPAN_LABELS)
        return cls(np.zeros((dim, k)), np.zeros((dim, k)), encoder, decode)

    @property
    def dim(self) -> int:
        return self.Ws.shape[0]

    def to_dict(self) -> dict:
        rows = np.flatnonzero(np.any(self.Ws != 0.0, axis=1) | np.any(self.We != 0.0, axis=1))
        return {
            "format_version": FORMAT_VERSION,
            "kind": "span",
            "labels": list(SPAN_LABELS),
            "d": self.dim,
            "W_rows": rows.tolist(),
            "W_start": self.Ws[rows].ravel().tolist(),
            "W_end": self.We[rows].ravel().tolist(),
            "max_span_length": self.decode.max_span_length,
            "encoder": self.encoder.to_dict() if self.encoder else None,
            "encoder_digest": self.encoder.digest() if self.encoder else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpanModel":
        if data.get("kind") != "span" or data.get("format_version") != FORMAT_VERSION:
            raise ValueError("not a span model file of a supported version")
        if tuple(data["labels"]) != SPAN_LABELS:
            raise ValueError("span model label order does not match this version")
        k = len(SPAN_LABELS)
        rows = np.asarray(data["W_rows"], dtype=np.int64)
        Ws = np.zeros((data["d"], k))
        We = np.zeros((data["d"], k))
        Ws[rows] = np.asarray(data["W_start"], dtype=float).reshape(len(rows), k)
        We[rows] = np.asarray(data["W_end"], dtype=float).reshape(len(rows), k)
        encoder = EncoderConfig.from_dict(data["encoder"]) if data["encoder"] else None
        return cls(Ws, We, encoder, SpanDecodeConfig(data["max_span_length"]))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SpanModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def token_label_probs(model: SpanModel, H) -> tuple[np.ndarray, np.ndarray]:
    if H.shape[1] != model.dim:
        raise ValueError(f"representation has dimension {H.shape[1]}, model expects {model.dim}")
    return softmax(np.asarray(H @ model.Ws)), softmax(np.asarray(H @ model.We))


def predict_token_labels(model: SpanModel, H) -> tuple[list[str], list[str]]:
    """Per-token argmax labels of the start and end layers (``none`` wins ties)."""
    ps, pe = token_label_probs(model, H)
    return [SPAN_LABELS[i] for i in ps.argmax(axis=1)], [SPAN_LABELS[i] for i in pe.argmax(axis=1)]


def decode_spans(start_labels: Sequence[str], end_labels: Sequence[str],
                 config: SpanDecodeConfig = SpanDecodeConfig()) -> list[Span]:
    """Greedy left-to-right matching of start labels to the nearest same-type end."""
    if len(start_labels) != len(end_labels):
        raise ValueError("start and end label lists differ in length")
    n = len(start_labels)
    spans = []
    t = 0
    while t < n:
        label = start_labels[t]
        if label == NONE:
            t += 1
            continue
        stop = min(n, t + config.max_span_length)
        match = next((u for u in range(t, stop) if end_labels[u] == label), None)
        if match is None:
            t += 1
            continue
        spans.append(Span(t, match, MutationType.from_code(label)))
        t = match + 1
    return spans


def spans_to_bio(spans: Sequence[Span], n: int) -> TagSequence:
    return encode_spans(spans, n, TagScheme.BIO)


def gold_boundary_labels(sentence: TokenizedSentence) -> tuple[list[str], list[str]]:
    n = len(sentence.tokens)
    starts, ends = [NONE] * n, [NONE] * n
    for s in sentence.gold_spans:
        starts[s.start] = s.mtype.code
        ends[s.end] = s.mtype.code
    return starts, ends


def predict_spans(model: SpanModel, H) -> list[Span]:
    return decode_spans(*predict_token_labels(model, H), model.decode)


# ---------------------------------------------------------------------------
# training


def _label_ids(labels: Sequence[str]) -> np.ndarray:
    return np.array([_LABEL_INDEX[lab] for lab in labels], dtype=np.int64)


def _sentence_grad(model: SpanModel, cols, local, ys, ye):
    n = len(ys)
    ps = softmax(local @ model.Ws[cols])
    pe = softmax(local @ model.We[cols])
    rows = np.arange(n)
    loss = -np.log(ps[rows, ys]).sum() - np.log(pe[rows, ye]).sum()
    ps[rows, ys] -= 1.0
    pe[rows, ye] -= 1.0
    return loss, local.T @ ps, local.T @ pe


def _batch_grad(model: SpanModel, items, dropout=0.0, rng=None):
    """Mean summed cross-entropy over sentences and its row-sparse gradient."""
    total = 0.0
    all_cols, gs_all, ge_all = [], [], []
    for cols, local, ys, ye in items:
        if dropout > 0.0:
            local = apply_dropout(local, dropout, rng)
        loss, gs, ge = _sentence_grad(model, cols, local, ys, ye)
        total += loss
        all_cols.append(cols)
        gs_all.append(gs)
        ge_all.append(ge)
    b = len(items)
    rows, inv = np.unique(np.concatenate(all_cols), return_inverse=True)
    k = len(SPAN_LABELS)
    gs_rows = np.zeros((len(rows), k))
    ge_rows = np.zeros((len(rows), k))
    np.add.at(gs_rows, inv, np.vstack(gs_all))
    np.add.at(ge_rows, inv, np.vstack(ge_all))
    return total / b, rows, gs_rows / b, ge_rows / b


def loss_and_gradient(model: SpanModel, batch, weight_decay: float = 0.0):
    """Loss over ``(H, start_labels, end_labels)`` triples with dense gradients.

    Loss per sentence is the summed start and end cross-entropy over its
    tokens; the batch loss is the mean over sentences plus an L2 penalty.
    """
    if not batch:
        raise ValueError("empty batch")
    items = []
    for H, starts, ends in batch:
        cols, local = compact(H)
        items.append((cols, local, _label_ids(starts), _label_ids(ends)))
    loss, rows, gs_rows, ge_rows = _batch_grad(model, items)
    gs = np.zeros_like(model.Ws)
    ge = np.zeros_like(model.We)
    gs[rows] = gs_rows
    ge[rows] = ge_rows
    loss += 0.5 * weight_decay * (np.sum(model.Ws ** 2) + np.sum(model.We ** 2))
    gs += weight_decay * model.Ws
    ge += weight_decay * model.We
    return loss, {"Ws": gs, "We": ge}


def _prepare(dataset, encoder):
    items = []
    for s in dataset:
        if len(s.tokens) == 0:
            continue
        starts, ends = gold_boundary_labels(s)
        cols, local = compact(encoder.encode(s))
        items.append((cols, local, _label_ids(starts), _label_ids(ends)))
    return items


def train_span(dataset: Sequence[TokenizedSentence], encoder_config: EncoderConfig,
               config: TrainConfig = TrainConfig(), decode: SpanDecodeConfig = SpanDecodeConfig(),
               dev: Sequence[TokenizedSentence] | None = None) -> SpanModel:
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    encoder = make_encoder(encoder_config)
    model = SpanModel.zeros(encoder.dim, encoder_config, decode)
    items = _prepare(dataset, encoder)
    if not items:
        raise ValueError("dataset has no tokens")
    dev_items = _prepare(dev, encoder) if dev else None

    opt = Adam({"Ws": model.Ws, "We": model.We}, config.resolved_lr(encoder_config.kind),
               weight_decay=config.weight_decay, sparse=("Ws", "We"))
    rng = np.random.default_rng(config.seed)
    best, best_loss, stale = None, np.inf, 0
    for epoch in range(config.epochs):
        epoch_loss = 0.0
        for idx in minibatches(len(items), config.batch_size, rng):
            batch = [items[i] for i in idx]
            loss, rows, gs, ge = _batch_grad(model, batch, config.dropout, rng)
            opt.step({"Ws": gs, "We": ge}, rows={"Ws": rows, "We": rows})
            epoch_loss += loss * len(batch)
        logger.info("span epoch %d train loss %.4f", epoch + 1, epoch_loss / len(items))
        if dev_items:
            dev_loss = _batch_grad(model, dev_items)[0]
            if dev_loss < best_loss:
                best, best_loss, stale = copy.deepcopy(model), dev_loss, 0
            else:
                stale += 1
                if stale >= config.patience:
                    logger.info("early stop at epoch %d", epoch + 1)
                    break
    return best if best is not None else model
