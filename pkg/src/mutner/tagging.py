"""BIO / BMEO tag sequences: encoding, decoding, conversion and repair.

BMEO has no single-token tag, so a one-token mention is a lone ``B-t``.
When decoding, a ``B-t`` that is not continued by ``M-t``/``E-t`` is a
complete one-token mention.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus_io import MUTATION_TYPES, MutationType, Span, TokenizedSentence

OUTSIDE = "O"


class TagScheme(enum.Enum):
    BIO = "BIO"
    BMEO = "BMEO"

    @classmethod
    def parse(cls, name: str) -> "TagScheme":
        key = name.strip().upper()
        if key == "BEMO":
            key = "BMEO"
        return cls(key)

    @property
    def prefixes(self) -> tuple[str, ...]:
        return ("B", "I") if self is TagScheme.BIO else ("B", "M", "E")


def label_set(scheme: TagScheme) -> list[str]:
    """Labels in canonical order: ``O`` first, then per type in declaration order."""
    labels = [OUTSIDE]
    for t in MUTATION_TYPES:
        labels.extend(f"{p}-{t.code}" for p in scheme.prefixes)
    return labels


def split_label(label: str) -> tuple[str, MutationType | None]:
    if label == OUTSIDE:
        return OUTSIDE, None
    prefix, sep, code = label.partition("-")
    if not sep:
        raise ValueError(f"malformed label {label!r}")
    try:
        return prefix, MutationType.from_code(code)
    except KeyError:
        raise ValueError(f"unknown mutation type in label {label!r}") from None


@dataclass(frozen=True)
class TagSequence:
    scheme: TagScheme
    labels: tuple[str, ...]

    def __post_init__(self):
        allowed = set(label_set(self.scheme))
        bad = [lab for lab in self.labels if lab not in allowed]
        if bad:
            raise ValueError(f"labels {bad[:3]} are not in the {self.scheme.value} label set")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)


def tag_sequence(labels: Iterable[str], scheme: TagScheme | str = TagScheme.BIO) -> TagSequence:
    if isinstance(scheme, str):
        scheme = TagScheme.parse(scheme)
    return TagSequence(scheme, tuple(labels))


def _check_spans(spans: Sequence[Span], n: int) -> list[Span]:
    spans = sorted(spans)
    prev_end = -1
    for s in spans:
        if not (0 <= s.start <= s.end < n):
            raise ValueError(f"span {tuple(s)} out of range for {n} tokens")
        if s.start <= prev_end:
            raise ValueError(f"overlapping spans near token {s.start}")
        prev_end = s.end
    return spans


def encode_spans(spans: Sequence[Span], n: int, scheme: TagScheme) -> TagSequence:
    labels = [OUTSIDE] * n
    for s in _check_spans(spans, n):
        code = s.mtype.code
        labels[s.start] = f"B-{code}"
        if scheme is TagScheme.BIO:
            for i in range(s.start + 1, s.end + 1):
                labels[i] = f"I-{code}"
        elif s.end > s.start:
            for i in range(s.start + 1, s.end):
                labels[i] = f"M-{code}"
            labels[s.end] = f"E-{code}"
    return TagSequence(scheme, tuple(labels))


def spans_to_tags(sentence: TokenizedSentence, scheme: TagScheme) -> TagSequence:
    return encode_spans(sentence.gold_spans, len(sentence.tokens), scheme)


def is_valid(tags: TagSequence) -> bool:
    return repair(tags).labels == tags.labels


def repair(tags: TagSequence) -> TagSequence:
    """Single left-to-right pass that turns any sequence into a valid one.

    A continuation tag (``I``, ``M``, ``E``) without a compatible predecessor
    is promoted to ``B``. Under BMEO an ``M-t`` that is not followed by
    ``M-t``/``E-t`` is closed as ``E-t``.
    """
    labels = list(tags.labels)
    out: list[str] = []
    for i, lab in enumerate(labels):
        prefix, mtype = split_label(lab)
        prev = out[-1] if out else OUTSIDE
        pprefix, ptype = split_label(prev)
        if tags.scheme is TagScheme.BIO:
            if prefix == "I" and not (ptype is mtype and pprefix in ("B", "I")):
                lab = f"B-{mtype.code}"
        else:
            if prefix in ("M", "E") and not (ptype is mtype and pprefix in ("B", "M")):
                lab = f"B-{mtype.code}"
            elif prefix == "M":
                nxt = labels[i + 1] if i + 1 < len(labels) else OUTSIDE
                nprefix, ntype = split_label(nxt)
                if not (ntype is mtype and nprefix in ("M", "E")):
                    lab = f"E-{mtype.code}"
        out.append(lab)
    return TagSequence(tags.scheme, tuple(out))


def tags_to_spans(tags: TagSequence) -> list[Span]:
    labels = repair(tags).labels
    spans = []
    i = 0
    n = len(labels)
    while i < n:
        prefix, mtype = split_label(labels[i])
        if prefix != "B":
            i += 1
            continue
        j = i
        cont = ("I",) if tags.scheme is TagScheme.BIO else ("M", "E")
        while j + 1 < n:
            nprefix, ntype = split_label(labels[j + 1])
            if ntype is not mtype or nprefix not in cont:
                break
            j += 1
            if nprefix == "E":
                break
        spans.append(Span(i, j, mtype))
        i = j + 1
    return spans


def bmeo_to_bio(tags: TagSequence) -> TagSequence:
    if tags.scheme is not TagScheme.BMEO:
        raise ValueError(f"expected a BMEO sequence, got {tags.scheme.value}")
    out = []
    for lab in tags.labels:
        prefix, mtype = split_label(lab)
        if prefix in ("M", "E"):
            lab = f"I-{mtype.code}"
        out.append(lab)
    return TagSequence(TagScheme.BIO, tuple(out))
