"""Cross-corpus training-set expansion.

Every sentence with a gold mention is kept. A sentence without mentions is
kept only if one of its case-folded tokens also occurs inside some mention
of any input corpus.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus_io import TokenizedSentence, tokenize


@dataclass
class MentionDictionary:
    counts: Counter = field(default_factory=Counter)

    def __contains__(self, token: str) -> bool:
        return token.casefold() in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def tokens(self) -> set[str]:
        return set(self.counts)

    def hits(self, sentence: TokenizedSentence) -> bool:
        return any(t.surface.casefold() in self.counts for t in sentence.tokens)

    def to_text(self) -> str:
        return "".join(f"{tok}\t{cnt}\n" for tok, cnt in sorted(self.counts.items()))

    @classmethod
    def from_text(cls, text: str) -> "MentionDictionary":
        counts = Counter()
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            tok, sep, cnt = line.rpartition("\t")
            if not sep:
                raise ValueError(f"dictionary line {lineno}: expected token<TAB>count")
            counts[tok] = int(cnt)
        return cls(counts)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "MentionDictionary":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def build_dictionary(corpora: Sequence[Sequence[TokenizedSentence]]) -> MentionDictionary:
    """Case-folded tokens of every mention surface; counts are mention occurrences.

    Punctuation-only tokens ("." in "c.76del") are skipped, otherwise nearly
    every negative sentence would hit the dictionary.
    """
    counts = Counter()
    for corpus in corpora:
        for sent in corpus:
            for span in sent.gold_spans:
                surface = sent.span_text(span.start, span.end)
                counts.update({t.surface.casefold() for t in tokenize(surface) if t.surface.isalnum()})
    return MentionDictionary(counts)


@dataclass
class CorpusStats:
    positives: int = 0
    negatives_kept: int = 0
    negatives_dropped: int = 0


@dataclass
class ExpandedDataset:
    sentences: list[TokenizedSentence]
    sources: list[str]
    stats: dict[str, CorpusStats]

    def totals(self) -> CorpusStats:
        out = CorpusStats()
        for s in self.stats.values():
            out.positives += s.positives
            out.negatives_kept += s.negatives_kept
            out.negatives_dropped += s.negatives_dropped
        return out

    def stats_dict(self) -> dict:
        total = self.totals()
        return {
            "corpora": {name: vars(s) for name, s in self.stats.items()},
            "total": vars(total),
            "sentences": len(self.sentences),
        }


def expand(corpora: Sequence[Sequence[TokenizedSentence]], dictionary: MentionDictionary,
           names: Sequence[str] | None = None) -> ExpandedDataset:
    if names is None:
        names = [f"corpus{i}" for i in range(len(corpora))]
    if len(names) != len(corpora):
        raise ValueError("one name per corpus expected")
    sentences, sources = [], []
    stats: dict[str, CorpusStats] = {}
    for name, corpus in zip(names, corpora):
        st = stats.setdefault(name, CorpusStats())
        for sent in corpus:
            if sent.is_positive:
                st.positives += 1
            elif dictionary.hits(sent):
                st.negatives_kept += 1
            else:
                st.negatives_dropped += 1
                continue
            sentences.append(sent)
            sources.append(name)
    return ExpandedDataset(sentences, sources, stats)
