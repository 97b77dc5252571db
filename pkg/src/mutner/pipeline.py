"""Model loading and sentence-level prediction for all three patterns."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from .corpus_io import TokenizedSentence
from .crf import CrfModel, viterbi_decode
from .encoding import EncoderConfig, make_encoder
from .ensemble import majority_vote
from .span import SpanModel, predict_spans, spans_to_bio
from .tagging import TagScheme, TagSequence, bmeo_to_bio

PATTERNS = ("crf-bio", "crf-bmeo", "span")


def pattern_of(model) -> str:
    if isinstance(model, SpanModel):
        return "span"
    return "crf-bio" if model.scheme is TagScheme.BIO else "crf-bmeo"


def load_model(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = data.get("kind")
    if kind == "crf":
        return CrfModel.from_dict(data)
    if kind == "span":
        return SpanModel.from_dict(data)
    raise ValueError(f"{path}: unknown model kind {kind!r}")


def predict_bio(model, sentences: Sequence[TokenizedSentence],
                encoder_config: EncoderConfig | None = None) -> list[TagSequence]:
    """BIO predictions of one model; BMEO output is converted to BIO."""
    config = encoder_config or model.encoder
    if config is None:
        raise ValueError("model carries no encoder configuration")
    if model.encoder is not None and config.digest() != model.encoder.digest():
        raise ValueError("encoder configuration does not match the one the model was trained with")
    encoder = make_encoder(config)
    out = []
    for sent in sentences:
        if not sent.tokens:
            out.append(TagSequence(TagScheme.BIO, ()))
            continue
        H = encoder.encode(sent)
        if isinstance(model, SpanModel):
            out.append(spans_to_bio(predict_spans(model, H), len(sent.tokens)))
        else:
            tags = viterbi_decode(model, H)
            out.append(bmeo_to_bio(tags) if tags.scheme is TagScheme.BMEO else tags)
    return out


def order_ensemble(models) -> tuple:
    """Arrange three models as (crf-bio, crf-bmeo, span); raise otherwise."""
    by_pattern = {}
    for m in models:
        by_pattern.setdefault(pattern_of(m), []).append(m)
    if len(models) != 3 or any(len(by_pattern.get(p, [])) != 1 for p in PATTERNS):
        found = sorted(pattern_of(m) for m in models)
        raise ValueError(f"ensemble needs exactly one crf-bio, one crf-bmeo and one span model, got {found}")
    return tuple(by_pattern[p][0] for p in PATTERNS)


def predict_ensemble(models, sentences, encoder_config=None):
    """Return ``(ensemble, singles)``; ``singles`` maps pattern name to its BIO output."""
    ordered = order_ensemble(models)
    singles = {p: predict_bio(m, sentences, encoder_config) for p, m in zip(PATTERNS, ordered)}
    ens = [majority_vote(a, b, c) for a, b, c in zip(*(singles[p] for p in PATTERNS))]
    return ens, singles
