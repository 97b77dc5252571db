"""Token/tag files.

One token per line as ``token<TAB>char_start<TAB>char_end<TAB>gold_tag``,
with an optional fifth predicted-tag column. Sentences are separated by a
blank line; ``# doc <id>`` opens a document and ``# sentence <index>`` keeps
the sentence's index within it. Gold and predicted tags are BIO.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus_io import Token, TokenizedSentence
from .tagging import TagScheme, TagSequence, spans_to_tags, tags_to_spans


class ConllError(ValueError):
    pass


@dataclass(frozen=True)
class ConllSentence:
    sentence: TokenizedSentence
    gold: TagSequence
    pred: TagSequence | None = None


def format_conll(sentences: Sequence[TokenizedSentence],
                 predictions: Sequence[TagSequence] | None = None) -> str:
    if predictions is not None and len(predictions) != len(sentences):
        raise ValueError("one prediction per sentence expected")
    lines = []
    current_doc = None
    for k, sent in enumerate(sentences):
        if sent.doc_id != current_doc:
            lines.append(f"# doc {sent.doc_id}")
            current_doc = sent.doc_id
        lines.append(f"# sentence {sent.sentence_index}")
        gold = spans_to_tags(sent, TagScheme.BIO).labels
        pred = predictions[k].labels if predictions is not None else None
        for i, tok in enumerate(sent.tokens):
            row = [tok.surface, str(tok.start), str(tok.end), gold[i]]
            if pred is not None:
                row.append(pred[i])
            lines.append("\t".join(row))
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def write_conll(path, sentences, predictions=None) -> None:
    Path(path).write_text(format_conll(sentences, predictions), encoding="utf-8")


def parse_conll(lines: Iterable[str]) -> list[ConllSentence]:
    out: list[ConllSentence] = []
    doc_id = None
    next_index = 0
    sent_index = None
    rows: list[tuple[int, list[str]]] = []

    def flush():
        nonlocal rows, sent_index, next_index
        if not rows:
            return
        if doc_id is None:
            raise ConllError(f"line {rows[0][0]}: sentence before any '# doc' header")
        ncols = {len(r) for _, r in rows}
        if len(ncols) != 1:
            raise ConllError(f"line {rows[0][0]}: inconsistent column count within sentence")
        idx = sent_index if sent_index is not None else next_index
        tokens = tuple(Token(r[0], int(r[1]), int(r[2])) for _, r in rows)
        try:
            gold = TagSequence(TagScheme.BIO, tuple(r[3] for _, r in rows))
            pred = TagSequence(TagScheme.BIO, tuple(r[4] for _, r in rows)) if ncols == {5} else None
        except ValueError as exc:
            raise ConllError(f"line {rows[0][0]}: {exc}") from None
        sent = TokenizedSentence(doc_id, idx, tokens, tuple(tags_to_spans(gold)))
        out.append(ConllSentence(sent, gold, pred))
        next_index = idx + 1
        sent_index = None
        rows = []

    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("# doc "):
            flush()
            doc_id = line[len("# doc "):]
            next_index = 0
            continue
        if line.startswith("# sentence "):
            flush()
            try:
                sent_index = int(line[len("# sentence "):])
            except ValueError:
                raise ConllError(f"line {lineno}: bad sentence index") from None
            continue
        if line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (4, 5):
            raise ConllError(f"line {lineno}: expected 4 or 5 tab-separated columns")
        try:
            int(fields[1]), int(fields[2])
        except ValueError:
            raise ConllError(f"line {lineno}: token offsets are not integers") from None
        rows.append((lineno, fields))
    flush()
    return out


def read_conll(path) -> list[ConllSentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_conll(fh)
