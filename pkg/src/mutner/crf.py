"""Linear-chain CRF tagger over encoder rows.

Score of a label sequence ``y`` for representation ``H``::

    sum_j (H_j @ W)[y_j] + T[y_{j-1}, y_j]      (y_0 = START, y_{n+1} = STOP)

``T`` has two extra rows/columns for START and STOP. Transitions that the
tag scheme forbids are masked to ``-inf`` and never trained.
"""

from __future__ import annotations

import copy
import json
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus_io import TokenizedSentence
from .encoding import EncoderConfig, compact, make_encoder
from .optim import Adam, TrainConfig, apply_dropout, minibatches
from .tagging import TagScheme, TagSequence, label_set, spans_to_tags, split_label

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def scheme_mask(labels: Sequence[str], scheme: TagScheme | None) -> np.ndarray:
    """Allowed-transition matrix of shape ``(L+2, L+2)``; START=L, STOP=L+1."""
    L = len(labels)
    start, stop = L, L + 1
    mask = np.ones((L + 2, L + 2), dtype=bool)
    mask[:, start] = False
    mask[stop, :] = False
    mask[start, stop] = False
    if scheme is None:
        return mask
    parsed = [split_label(lab) for lab in labels]
    for b, (pb, tb) in enumerate(parsed):
        if scheme is TagScheme.BIO and pb == "I":
            allowed_prev = ("B", "I")
        elif scheme is TagScheme.BMEO and pb in ("M", "E"):
            allowed_prev = ("B", "M")
        else:
            continue
        mask[start, b] = False
        for a, (pa, ta) in enumerate(parsed):
            mask[a, b] = ta is tb and pa in allowed_prev
    if scheme is TagScheme.BMEO:
        for a, (pa, ta) in enumerate(parsed):
            if pa != "M":
                continue
            mask[a, stop] = False
            for b, (pb, tb) in enumerate(parsed):
                mask[a, b] = tb is ta and pb in ("M", "E")
    return mask


class CrfModel:
    """Emission weights ``W`` (d x L), transitions ``T`` and their mask.

    ``T`` stores finite values everywhere; masked entries are kept at zero
    and replaced by ``-inf`` in :meth:`transitions`.
    """

    def __init__(self, labels: Sequence[str], W: np.ndarray, T: np.ndarray, mask: np.ndarray,
                 scheme: TagScheme | None = None, encoder: EncoderConfig | None = None):
        self.labels = list(labels)
        L = len(self.labels)
        self.W = np.asarray(W, dtype=float)
        self.T = np.asarray(T, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)
        if self.W.ndim != 2 or self.W.shape[1] != L:
            raise ValueError(f"W must have shape (d, {L})")
        if self.T.shape != (L + 2, L + 2) or self.mask.shape != (L + 2, L + 2):
            raise ValueError(f"T and mask must have shape ({L + 2}, {L + 2})")
        self.T[~self.mask] = 0.0
        self.scheme = scheme
        self.encoder = encoder
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}

    @classmethod
    def zeros(cls, scheme: TagScheme, dim: int, encoder: EncoderConfig | None = None) -> "CrfModel":
        labels = label_set(scheme)
        L = len(labels)
        return cls(labels, np.zeros((dim, L)), np.zeros((L + 2, L + 2)), scheme_mask(labels, scheme),
                   scheme, encoder)

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @property
    def start(self) -> int:
        return self.n_labels

    @property
    def stop(self) -> int:
        return self.n_labels + 1

    def transitions(self) -> np.ndarray:
        return np.where(self.mask, self.T, -np.inf)

    def emissions(self, H) -> np.ndarray:
        if H.shape[1] != self.dim:
            raise ValueError(f"representation has dimension {H.shape[1]}, model expects {self.dim}")
        return np.asarray(H @ self.W, dtype=float)

    def indices(self, tags) -> np.ndarray:
        if isinstance(tags, TagSequence):
            tags = tags.labels
        return np.array([t if isinstance(t, (int, np.integer)) else self.label_index[t] for t in tags],
                        dtype=np.int64)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict:
        rows = np.flatnonzero(np.any(self.W != 0.0, axis=1))
        return {
            "format_version": FORMAT_VERSION,
            "kind": "crf",
            "scheme": self.scheme.value if self.scheme else None,
            "labels": self.labels,
            "d": self.dim,
            "W_rows": rows.tolist(),
            "W": self.W[rows].ravel().tolist(),
            "T": self.T.ravel().tolist(),
            "mask": self.mask.astype(int).ravel().tolist(),
            "encoder": self.encoder.to_dict() if self.encoder else None,
            "encoder_digest": self.encoder.digest() if self.encoder else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CrfModel":
        if data.get("kind") != "crf" or data.get("format_version") != FORMAT_VERSION:
            raise ValueError("not a CRF model file of a supported version")
        labels = data["labels"]
        L = len(labels)
        W = np.zeros((data["d"], L))
        rows = np.asarray(data["W_rows"], dtype=np.int64)
        W[rows] = np.asarray(data["W"], dtype=float).reshape(len(rows), L)
        T = np.asarray(data["T"], dtype=float).reshape(L + 2, L + 2)
        mask = np.asarray(data["mask"], dtype=bool).reshape(L + 2, L + 2)
        scheme = TagScheme(data["scheme"]) if data["scheme"] else None
        encoder = EncoderConfig.from_dict(data["encoder"]) if data["encoder"] else None
        return cls(labels, W, T, mask, scheme, encoder)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CrfModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# dynamic programming on emission matrix E (n x L) and masked transitions Tm


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def _path_score(E: np.ndarray, Tm: np.ndarray, y: np.ndarray) -> float:
    L = E.shape[1]
    score = Tm[L, y[0]] + Tm[y[-1], L + 1]
    score += E[np.arange(len(y)), y].sum()
    score += Tm[y[:-1], y[1:]].sum()
    return float(score)


def _lse_cols(M: np.ndarray) -> np.ndarray:
    """Log-sum-exp down the columns of a 2-D array, ``-inf`` safe."""
    m = M.max(axis=0)
    if not np.isfinite(m).all():
        m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.exp(M - m).sum(axis=0)) + m


def _forward(E: np.ndarray, Tm: np.ndarray) -> tuple[np.ndarray, float]:
    n, L = E.shape
    trans = Tm[:L, :L]
    alpha = np.empty((n, L))
    alpha[0] = Tm[L, :L] + E[0]
    for j in range(1, n):
        alpha[j] = _lse_cols(alpha[j - 1][:, None] + trans) + E[j]
    log_z = float(_lse(alpha[-1] + Tm[:L, L + 1], axis=0))
    return alpha, log_z


def _backward(E: np.ndarray, Tm: np.ndarray) -> np.ndarray:
    n, L = E.shape
    trans_t = Tm[:L, :L].T
    beta = np.empty((n, L))
    beta[-1] = Tm[:L, L + 1]
    for j in range(n - 2, -1, -1):
        beta[j] = _lse_cols(trans_t + (E[j + 1] + beta[j + 1])[:, None])
    return beta


def _expected_counts(E: np.ndarray, Tm: np.ndarray):
    """Log-partition, token marginals (n x L) and expected transition counts."""
    n, L = E.shape
    alpha, log_z = _forward(E, Tm)
    beta = _backward(E, Tm)
    unary = np.exp(alpha + beta - log_z)
    counts = np.zeros_like(Tm)
    counts[L, :L] = unary[0]
    counts[:L, L + 1] = unary[-1]
    if n > 1:
        pair = alpha[:-1, :, None] + Tm[None, :L, :L] + (E[1:] + beta[1:])[:, None, :] - log_z
        counts[:L, :L] = np.exp(pair).sum(axis=0)
    return log_z, unary, counts


def _gold_counts(y: np.ndarray, L: int) -> np.ndarray:
    counts = np.zeros((L + 2, L + 2))
    counts[L, y[0]] += 1
    counts[y[-1], L + 1] += 1
    np.add.at(counts, (y[:-1], y[1:]), 1)
    return counts


def _viterbi(E: np.ndarray, Tm: np.ndarray) -> np.ndarray:
    """Exact argmax; ties go to the lexicographically smallest label sequence.

    Best suffix scores are computed right to left, then labels are chosen
    left to right with ``argmax`` (first maximum = lowest index).
    """
    n, L = E.shape
    trans = Tm[:L, :L]
    suffix = np.empty((n, L))
    suffix[-1] = E[-1] + Tm[:L, L + 1]
    for j in range(n - 2, -1, -1):
        suffix[j] = E[j] + np.max(trans + suffix[j + 1][None, :], axis=1)
    path = np.empty(n, dtype=np.int64)
    path[0] = np.argmax(Tm[L, :L] + suffix[0])
    for j in range(1, n):
        path[j] = np.argmax(trans[path[j - 1]] + suffix[j])
    return path


# ---------------------------------------------------------------------------
# public operations


def sequence_score(model: CrfModel, H, tags) -> float:
    """Unnormalised score of ``tags``; ``-inf`` if it uses a masked transition."""
    y = model.indices(tags)
    E = model.emissions(H)
    if len(y) != E.shape[0]:
        raise ValueError(f"{len(y)} tags for {E.shape[0]} tokens")
    return _path_score(E, model.transitions(), y)


def log_partition(model: CrfModel, H) -> float:
    E = model.emissions(H)
    if E.shape[0] == 0:
        raise ValueError("log_partition needs at least one token")
    return _forward(E, model.transitions())[1]


def viterbi_path(model: CrfModel, H) -> list[int]:
    E = model.emissions(H)
    if E.shape[0] == 0:
        return []
    return _viterbi(E, model.transitions()).tolist()


def viterbi_decode(model: CrfModel, H) -> TagSequence:
    if model.scheme is None:
        raise ValueError("viterbi_decode needs a model with a tag scheme; use viterbi_path")
    return TagSequence(model.scheme, tuple(model.labels[i] for i in viterbi_path(model, H)))


def _check_gold(model: CrfModel, y: np.ndarray, which) -> None:
    L = model.n_labels
    seq = np.concatenate([[L], y, [L + 1]])
    if not np.all(model.mask[seq[:-1], seq[1:]]):
        raise ValueError(f"gold tags of sentence {which} use a forbidden transition")


def _sentence_grad(model: CrfModel, cols: np.ndarray, local: np.ndarray, y: np.ndarray, Tm: np.ndarray):
    E = local @ model.W[cols]
    log_z, unary, counts = _expected_counts(E, Tm)
    nll = log_z - _path_score(E, Tm, y)
    resid = unary.copy()
    resid[np.arange(len(y)), y] -= 1.0
    gW = local.T @ resid
    gT = counts - _gold_counts(y, model.n_labels)
    return nll, gW, gT


def _batch_grad(model: CrfModel, items, dropout=0.0, rng=None):
    """Mean NLL over ``items`` and its gradient, without weight decay.

    ``items`` holds ``(cols, local, y)`` triples from :func:`encoding.compact`.
    Returns ``(loss, rows, gW_rows, gT)`` where ``gW_rows`` lines up with the
    sorted unique ``rows``.
    """
    Tm = model.transitions()
    total = 0.0
    gT = np.zeros_like(model.T)
    all_cols, all_g = [], []
    for cols, local, y in items:
        if dropout > 0.0:
            local = apply_dropout(local, dropout, rng)
        nll, gW, gTs = _sentence_grad(model, cols, local, y, Tm)
        total += nll
        gT += gTs
        all_cols.append(cols)
        all_g.append(gW)
    b = len(items)
    rows, inv = np.unique(np.concatenate(all_cols), return_inverse=True)
    gW_rows = np.zeros((len(rows), model.n_labels))
    np.add.at(gW_rows, inv, np.vstack(all_g))
    gT[~model.mask] = 0.0
    return total / b, rows, gW_rows / b, gT / b


def nll_and_gradient(model: CrfModel, batch, weight_decay: float = 0.0):
    """Mean negative log-likelihood of ``(H, tags)`` pairs plus L2 penalty.

    Returns ``(loss, {"W": dW, "T": dT})`` with dense gradients. Masked
    transition entries get zero gradient and are excluded from the penalty.
    """
    if not batch:
        raise ValueError("empty batch")
    items = []
    for k, (H, tags) in enumerate(batch):
        y = model.indices(tags)
        _check_gold(model, y, k)
        cols, local = compact(H)
        if local.shape[0] != len(y):
            raise ValueError(f"sentence {k}: {len(y)} tags for {local.shape[0]} tokens")
        items.append((cols, local, y))
    loss, rows, gW_rows, gT = _batch_grad(model, items)
    gW = np.zeros_like(model.W)
    gW[rows] = gW_rows
    T_finite = np.where(model.mask, model.T, 0.0)
    loss += 0.5 * weight_decay * (np.sum(model.W ** 2) + np.sum(T_finite ** 2))
    gW += weight_decay * model.W
    gT += weight_decay * T_finite
    return loss, {"W": gW, "T": gT}


# ---------------------------------------------------------------------------
# training


def _prepare(dataset: Sequence[TokenizedSentence], encoder, model: CrfModel):
    items = []
    for s in dataset:
        if len(s.tokens) == 0:
            continue
        tags = spans_to_tags(s, model.scheme)
        y = model.indices(tags)
        _check_gold(model, y, (s.doc_id, s.sentence_index))
        cols, local = compact(encoder.encode(s))
        items.append((cols, local, y))
    return items


def mean_nll(model: CrfModel, items) -> float:
    Tm = model.transitions()
    total = 0.0
    for cols, local, y in items:
        E = local @ model.W[cols]
        total += _forward(E, Tm)[1] - _path_score(E, Tm, y)
    return total / max(len(items), 1)


def train_crf(dataset: Sequence[TokenizedSentence], encoder_config: EncoderConfig,
              config: TrainConfig = TrainConfig(), scheme: TagScheme = TagScheme.BIO,
              dev: Sequence[TokenizedSentence] | None = None) -> CrfModel:
    """Fit a CRF with Adam on mini-batches.

    Deterministic for a fixed ``config.seed``. With a ``dev`` set the model
    with the lowest dev loss is returned and training stops after
    ``config.patience`` epochs without improvement.
    """
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    encoder = make_encoder(encoder_config)
    model = CrfModel.zeros(scheme, encoder.dim, encoder_config)
    items = _prepare(dataset, encoder, model)
    if not items:
        raise ValueError("dataset has no tokens")
    dev_items = _prepare(dev, encoder, model) if dev else None

    opt = Adam({"W": model.W, "T": model.T}, config.resolved_lr(encoder_config.kind),
               weight_decay=config.weight_decay, sparse=("W",), frozen={"T": ~model.mask})
    rng = np.random.default_rng(config.seed)
    best, best_loss, stale = None, np.inf, 0
    for epoch in range(config.epochs):
        epoch_loss = 0.0
        for idx in minibatches(len(items), config.batch_size, rng):
            batch = [items[i] for i in idx]
            loss, rows, gW, gT = _batch_grad(model, batch, config.dropout, rng)
            opt.step({"W": gW, "T": gT}, rows={"W": rows})
            epoch_loss += loss * len(batch)
        logger.info("crf-%s epoch %d train nll %.4f", scheme.value, epoch + 1, epoch_loss / len(items))
        if dev_items:
            dev_loss = mean_nll(model, dev_items)
            if dev_loss < best_loss:
                best, best_loss, stale = copy.deepcopy(model), dev_loss, 0
            else:
                stale += 1
                if stale >= config.patience:
                    logger.info("early stop at epoch %d", epoch + 1)
                    break
    return best if best is not None else model
