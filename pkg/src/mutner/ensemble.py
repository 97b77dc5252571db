"""Token-level majority vote over the three BIO prediction streams."""

from __future__ import annotations

from .tagging import TagScheme, TagSequence, repair

SOURCES = ("crf_bio", "crf_bmeo", "span")


def vote(crf_bio: TagSequence, crf_bmeo: TagSequence, span: TagSequence) -> TagSequence:
    """Per-token majority before repair.

    A label with at least two votes wins; on a three-way split the
    ``crf_bio`` label is kept.
    """
    streams = (crf_bio, crf_bmeo, span)
    for name, s in zip(SOURCES, streams):
        if s.scheme is not TagScheme.BIO:
            raise ValueError(f"{name} stream must be BIO, got {s.scheme.value}")
    n = len(crf_bio)
    if len(crf_bmeo) != n or len(span) != n:
        raise ValueError(f"vote inputs differ in length: {[len(s) for s in streams]}")
    out = []
    for a, b, c in zip(crf_bio.labels, crf_bmeo.labels, span.labels):
        out.append(b if b == c else a)
    return TagSequence(TagScheme.BIO, tuple(out))


def majority_vote(crf_bio: TagSequence, crf_bmeo: TagSequence, span: TagSequence) -> TagSequence:
    return repair(vote(crf_bio, crf_bmeo, span))
