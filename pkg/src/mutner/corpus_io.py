"""PubTator-style corpus reading, tokenization and mention alignment."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

logger = logging.getLogger(__name__)


class MutationType(enum.Enum):
    """Seven-way mutation taxonomy. Values are the short codes used in tags."""

    SUBSTITUTION = "Sub"
    DELETION = "Del"
    INSERTION = "Ins"
    DUPLICATION = "Dup"
    INDEL = "InDel"
    SNP = "SNP"
    FRAMESHIFT = "FS"

    @property
    def code(self) -> str:
        return self.value

    @classmethod
    def from_code(cls, code: str) -> "MutationType":
        return _BY_CODE[code]


_BY_CODE = {t.value: t for t in MutationType}
MUTATION_TYPES: tuple[MutationType, ...] = tuple(MutationType)


class Token(NamedTuple):
    surface: str
    start: int
    end: int


class Span(NamedTuple):
    """Token span, both ends inclusive."""

    start: int
    end: int
    mtype: MutationType


@dataclass(frozen=True)
class Mention:
    start: int
    end: int
    surface: str
    mtype: MutationType
    norm_id: str | None = None


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    mentions: tuple[Mention, ...] = ()


@dataclass(frozen=True)
class TokenizedSentence:
    doc_id: str
    sentence_index: int
    tokens: tuple[Token, ...]
    gold_spans: tuple[Span, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def is_positive(self) -> bool:
        return bool(self.gold_spans)

    def span_text(self, start: int, end: int) -> str:
        """Text of tokens ``start..end`` with the original inter-token gaps."""
        return join_tokens(self.tokens[start:end + 1])


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    message: str
    line: int | None = None
    doc_id: str | None = None

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.doc_id is not None:
            where.append(f"doc {self.doc_id}")
        prefix = f"[{', '.join(where)}] " if where else ""
        return f"{self.level}: {prefix}{self.message}"


class PubTatorError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def join_tokens(tokens: Sequence[Token]) -> str:
    parts = []
    prev_end = None
    for tok in tokens:
        if prev_end is not None:
            parts.append(" " * (tok.start - prev_end))
        parts.append(tok.surface)
        prev_end = tok.end
    return "".join(parts)


def _report(diagnostics, diag: Diagnostic) -> None:
    if diagnostics is not None:
        diagnostics.append(diag)
    if diag.level == "error":
        logger.error("%s", diag)
    else:
        logger.warning("%s", diag)


# ---------------------------------------------------------------------------
# type aliases


def load_alias_table(source: str | Path | Iterable[str] | None = None) -> dict[str, MutationType]:
    """Read ``alias<TAB>canonical`` lines; ``#`` starts a comment.

    Keys are stored case-folded. ``None`` loads the bundled default table.
    """
    if source is None:
        lines = resources.files("mutner.data").joinpath("type_aliases.tsv").read_text("utf-8").splitlines()
    elif isinstance(source, (str, Path)):
        lines = Path(source).read_text("utf-8").splitlines()
    else:
        lines = list(source)
    table: dict[str, MutationType] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"alias table line {lineno}: expected alias<TAB>canonical")
        alias, canonical = parts[0].strip(), parts[1].strip()
        try:
            mtype = MutationType.from_code(canonical)
        except KeyError:
            try:
                mtype = MutationType[canonical.upper()]
            except KeyError:
                raise ValueError(f"alias table line {lineno}: unknown canonical type {canonical!r}") from None
        table[alias.casefold()] = mtype
    for t in MutationType:
        table.setdefault(t.code.casefold(), t)
    return table


def resolve_type(type_field: str, norm_id: str | None, aliases: dict[str, MutationType]) -> MutationType | None:
    mtype = aliases.get(type_field.strip().casefold())
    if mtype is None and norm_id:
        # tmVar-style normalized ids carry the type as the second field, e.g. "p|SUB|V|600|E"
        parts = norm_id.split("|")
        if len(parts) > 1:
            mtype = aliases.get(parts[1].strip().casefold())
    return mtype


# ---------------------------------------------------------------------------
# PubTator


_TITLE_RE = re.compile(r"^([^|\t]+)\|t\|(.*)$")
_ABSTRACT_RE = re.compile(r"^([^|\t]+)\|a\|(.*)$")


def parse_pubtator(stream, aliases: dict[str, MutationType] | None = None,
                   diagnostics: list[Diagnostic] | None = None) -> list[Document]:
    """Parse a PubTator-style stream into documents.

    ``stream`` may be a string or an iterable of lines. Document text is
    ``title + "\\n" + abstract``. Malformed lines raise :class:`PubTatorError`;
    bad annotations are rejected individually and reported through
    ``diagnostics``.
    """
    if aliases is None:
        aliases = load_alias_table()
    if isinstance(stream, str):
        lines = stream.splitlines()
    else:
        lines = [ln.rstrip("\n").rstrip("\r") for ln in stream]

    docs: list[Document] = []
    block: list[tuple[int, str]] = []
    for lineno, line in enumerate(lines, 1):
        if line.strip() == "":
            if block:
                docs.append(_parse_block(block, aliases, diagnostics))
                block = []
            continue
        block.append((lineno, line))
    if block:
        docs.append(_parse_block(block, aliases, diagnostics))
    return docs


def _parse_block(block, aliases, diagnostics) -> Document:
    doc_id = None
    title = None
    abstract = None
    raw_mentions: list[tuple[int, list[str]]] = []
    for lineno, line in block:
        m = _TITLE_RE.match(line)
        if m and "\t" not in m.group(1):
            if title is not None or raw_mentions:
                raise PubTatorError("unexpected title line", lineno)
            doc_id, title = m.group(1), m.group(2)
            continue
        m = _ABSTRACT_RE.match(line)
        if m and "\t" not in m.group(1):
            if title is None or abstract is not None or raw_mentions:
                raise PubTatorError("abstract line must directly follow the title line", lineno)
            if m.group(1) != doc_id:
                raise PubTatorError(f"document id {m.group(1)!r} does not match title id {doc_id!r}", lineno)
            abstract = m.group(2)
            continue
        fields = line.split("\t")
        if len(fields) < 5 or len(fields) > 6:
            raise PubTatorError("expected ID|t|, ID|a| or a 5/6-field annotation line", lineno)
        if title is None:
            raise PubTatorError("annotation before title line", lineno)
        if fields[0] != doc_id:
            raise PubTatorError(f"annotation id {fields[0]!r} does not match document id {doc_id!r}", lineno)
        raw_mentions.append((lineno, fields))
    if title is None:
        raise PubTatorError("block has no title line", block[0][0])

    text = title + "\n" + (abstract or "")
    mentions: list[Mention] = []
    for lineno, fields in raw_mentions:
        try:
            start, end = int(fields[1]), int(fields[2])
        except ValueError:
            raise PubTatorError("annotation offsets are not integers", lineno) from None
        surface, type_field = fields[3], fields[4]
        norm_id = fields[5] if len(fields) == 6 else None
        if not (0 <= start < end <= len(text)):
            _report(diagnostics, Diagnostic("error", f"offsets {start}-{end} out of range", lineno, doc_id))
            continue
        if text[start:end] != surface:
            _report(diagnostics, Diagnostic(
                "error", f"surface {surface!r} does not match text {text[start:end]!r} at {start}-{end}",
                lineno, doc_id))
            continue
        mtype = resolve_type(type_field, norm_id, aliases)
        if mtype is None:
            _report(diagnostics, Diagnostic("error", f"unknown mutation type {type_field!r}", lineno, doc_id))
            continue
        mentions.append(Mention(start, end, surface, mtype, norm_id))
    kept = resolve_overlaps(mentions, doc_id, diagnostics)
    return Document(doc_id, text, tuple(kept))


def resolve_overlaps(mentions: Sequence[Mention], doc_id=None, diagnostics=None) -> list[Mention]:
    """Keep the longest of any overlapping group (earliest start wins ties)."""
    order = sorted(mentions, key=lambda m: (-(m.end - m.start), m.start, m.end))
    kept: list[Mention] = []
    for m in order:
        if any(m.start < k.end and k.start < m.end for k in kept):
            _report(diagnostics, Diagnostic(
                "warning", f"dropped overlapping mention {m.surface!r} at {m.start}-{m.end}", doc_id=doc_id))
            continue
        kept.append(m)
    kept.sort(key=lambda m: (m.start, m.end))
    return kept


def write_pubtator(docs: Iterable[Document]) -> str:
    out = []
    for doc in docs:
        title, _, abstract = doc.text.partition("\n")
        out.append(f"{doc.id}|t|{title}")
        out.append(f"{doc.id}|a|{abstract}")
        for m in doc.mentions:
            fields = [doc.id, str(m.start), str(m.end), m.surface, m.mtype.code]
            if m.norm_id is not None:
                fields.append(m.norm_id)
            out.append("\t".join(fields))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


# ---------------------------------------------------------------------------
# tokenization and sentence splitting


_TOKEN_RE = re.compile(r"[^\W\d_]+|\d+|\S")


def tokenize(text: str, offset: int = 0) -> list[Token]:
    """Split into letter runs, digit runs and single other characters."""
    return [Token(m.group(), m.start() + offset, m.end() + offset) for m in _TOKEN_RE.finditer(text)]


DEFAULT_ABBREVIATIONS = frozenset({
    "e.g.", "i.e.", "al.", "fig.", "figs.", "vs.", "approx.", "ca.", "cf.", "no.", "nos.",
    "dr.", "mr.", "mrs.", "ms.", "prof.", "sp.", "spp.", "resp.", "ref.", "refs.", "vol.",
    "eq.", "eqs.", "tab.", "suppl.", "inc.", "ltd.", "co.", "jan.", "feb.", "mar.", "apr.",
    "jun.", "jul.", "aug.", "sep.", "sept.", "oct.", "nov.", "dec.",
})

_TERMINAL = ".!?"


def sentence_boundaries(text: str, mentions: Sequence[Mention] = (),
                        abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[int]:
    """Character positions at which a new sentence may start (excluding 0)."""
    cuts = []
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINAL or i + 1 >= n or not text[i + 1].isspace():
            continue
        j = i + 1
        while j < n and text[j].isspace():
            j += 1
        if j >= n or not (text[j].isupper() or text[j].isdigit()):
            continue
        k = i
        while k > 0 and not text[k - 1].isspace():
            k -= 1
        if text[k:i + 1].casefold() in abbreviations:
            continue
        cut = i + 1
        if any(m.start < cut < m.end for m in mentions):
            continue
        cuts.append(cut)
    return cuts


def split_sentences(doc: Document, abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS,
                    diagnostics: list[Diagnostic] | None = None) -> list[TokenizedSentence]:
    """Tokenize ``doc``, split into sentences, and attach aligned gold spans."""
    tokens = tokenize(doc.text)
    cuts = sentence_boundaries(doc.text, doc.mentions, abbreviations)
    groups: list[list[Token]] = [[] for _ in range(len(cuts) + 1)]
    seg = 0
    for tok in tokens:
        while seg < len(cuts) and tok.start >= cuts[seg]:
            seg += 1
        groups[seg].append(tok)
    sentences = [TokenizedSentence(doc.id, i, tuple(g))
                 for i, g in enumerate(g for g in groups if g)]
    return align_mentions(doc, sentences, diagnostics)


def align_mentions(doc: Document, sentences: Sequence[TokenizedSentence],
                   diagnostics: list[Diagnostic] | None = None) -> list[TokenizedSentence]:
    """Map each mention to the minimal covering token range of its sentence."""
    per_sentence: list[list[tuple[Span, Mention]]] = [[] for _ in sentences]
    for m in doc.mentions:
        hits = []
        for si, sent in enumerate(sentences):
            for ti, tok in enumerate(sent.tokens):
                if tok.end > m.start and tok.start < m.end:
                    hits.append((si, ti))
        if not hits:
            _report(diagnostics, Diagnostic("error", f"mention {m.surface!r} covers no token", doc_id=doc.id))
            continue
        if len({si for si, _ in hits}) > 1:
            _report(diagnostics, Diagnostic(
                "error", f"mention {m.surface!r} at {m.start}-{m.end} crosses a sentence boundary", doc_id=doc.id))
            continue
        si = hits[0][0]
        t0, t1 = hits[0][1], hits[-1][1]
        toks = sentences[si].tokens
        if toks[t0].start != m.start or toks[t1].end != m.end:
            _report(diagnostics, Diagnostic(
                "warning", f"mention {m.surface!r} at {m.start}-{m.end} expanded to covering tokens "
                f"{toks[t0].start}-{toks[t1].end}", doc_id=doc.id))
        per_sentence[si].append((Span(t0, t1, m.mtype), m))

    out = []
    for sent, pairs in zip(sentences, per_sentence):
        kept: list[Span] = []
        for span, m in sorted(pairs, key=lambda p: (-(p[0].end - p[0].start), p[0].start)):
            if any(span.start <= k.end and k.start <= span.end for k in kept):
                _report(diagnostics, Diagnostic(
                    "warning", f"dropped mention {m.surface!r}: token span overlaps another mention",
                    doc_id=doc.id))
                continue
            kept.append(span)
        kept.sort()
        out.append(replace(sent, gold_spans=tuple(kept)))
    return out


def load_corpus(path: str | Path, aliases=None, diagnostics=None) -> list[TokenizedSentence]:
    """Parse a PubTator file and return its aligned sentences."""
    with open(path, encoding="utf-8") as fh:
        docs = parse_pubtator(fh, aliases, diagnostics)
    sentences = []
    for doc in docs:
        sentences.extend(split_sentences(doc, diagnostics=diagnostics))
    return sentences
