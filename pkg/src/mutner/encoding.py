"""Per-token representation matrices.

Two encoders share one interface: ``encode(sentence) -> matrix`` with one row
per token. The orthographic encoder hashes sparse binary features into
``2**hash_bits`` columns and returns a ``scipy.sparse.csr_matrix``; the
embedding-file encoder returns precomputed dense vectors read from a sidecar
file.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus_io import Token, TokenizedSentence

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

DEFAULT_HASH_BITS = 18


def fnv1a_64(data: bytes, basis: int = FNV_OFFSET) -> int:
    h = basis
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


@functools.lru_cache(maxsize=1 << 20)
def feature_index(feature: str, hash_bits: int, seed: int = 0) -> int:
    """Column for a feature string: FNV-1a 64 with the seed XORed into the basis."""
    return fnv1a_64(feature.encode("utf-8"), FNV_OFFSET ^ (seed & _MASK64)) & ((1 << hash_bits) - 1)


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "orthographic"
    hash_bits: int = DEFAULT_HASH_BITS
    sidecar: str | None = None
    dim: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("orthographic", "embedding_file"):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind == "orthographic":
            if not 1 <= self.hash_bits <= 30:
                raise ValueError("hash_bits must be in 1..30")
            if self.dim is not None and self.dim != 1 << self.hash_bits:
                raise ValueError(f"orthographic dim must equal 2**hash_bits = {1 << self.hash_bits}")
        elif self.sidecar is None:
            raise ValueError("embedding_file encoder needs a sidecar path")

    @property
    def dimension(self) -> int:
        if self.kind == "orthographic":
            return 1 << self.hash_bits
        store = read_embedding_sidecar(self.sidecar)
        if self.dim is not None and self.dim != store.dim:
            raise ValueError(f"configured dim {self.dim} does not match sidecar dim {store.dim}")
        return store.dim

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        return cls(**data)

    def digest(self) -> str:
        """Hash of the settings that determine feature columns (sidecar path excluded)."""
        payload = {k: v for k, v in self.to_dict().items() if k != "sidecar"}
        if self.kind == "orthographic":
            payload["dim"] = self.dimension
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# orthographic features


def word_shape(surface: str) -> str:
    out = []
    for ch in surface:
        if ch.isdigit():
            c = "0"
        elif ch.isalpha():
            c = "A" if ch.isupper() else "a"
        else:
            c = ch
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


def _word_chunks(tokens: Sequence[Token]) -> list[int]:
    """Index of the whitespace-delimited chunk each token belongs to."""
    chunk = []
    cur = 0
    for i, tok in enumerate(tokens):
        if i and tok.start != tokens[i - 1].end:
            cur += 1
        chunk.append(cur)
    return chunk


def token_features(tokens: Sequence[Token], i: int) -> list[str]:
    """Feature strings for token ``i``. A constant bias feature is included."""
    surf = tokens[i].surface
    lower = surf.lower()
    shape = word_shape(surf)
    feats = ["bias", f"w={lower}", f"shape={shape}"]
    for k in (1, 2, 3):
        if len(surf) >= k:
            feats.append(f"pre{k}={surf[:k]}")
            feats.append(f"suf{k}={surf[-k:]}")
    if surf.isdigit():
        feats.append("alldigits")
    chunks = _word_chunks(tokens)
    word = "".join(t.surface for t, c in zip(tokens, chunks) if c == chunks[i])
    if any(ch.isdigit() for ch in word) and any(ch.isalpha() for ch in word):
        feats.append("word_has_digit_and_letter")
    n = len(tokens)
    for off in (-2, -1, 0, 1, 2):
        j = i + off
        ctx = tokens[j].surface if 0 <= j < n else ("<s>" if j < 0 else "</s>")
        feats.append(f"w[{off}]={ctx}")
    prev_shape = word_shape(tokens[i - 1].surface) if i > 0 else "<s>"
    feats.append(f"shape[-1:0]={prev_shape}|{shape}")
    return feats


class OrthographicEncoder:
    def __init__(self, config: EncoderConfig):
        self.config = config
        self.dim = config.dimension

    def feature_columns(self, sentence: TokenizedSentence) -> list[list[int]]:
        bits, seed = self.config.hash_bits, self.config.seed
        out = []
        for i in range(len(sentence.tokens)):
            cols = {feature_index(f, bits, seed) for f in token_features(sentence.tokens, i)}
            out.append(sorted(cols))
        return out

    def encode(self, sentence: TokenizedSentence) -> sp.csr_matrix:
        cols = self.feature_columns(sentence)
        indptr = np.zeros(len(cols) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(c) for c in cols])
        indices = np.fromiter((c for row in cols for c in row), dtype=np.int64, count=int(indptr[-1]))
        data = np.ones(len(indices))
        return sp.csr_matrix((data, indices, indptr), shape=(len(cols), self.dim))


# ---------------------------------------------------------------------------
# embedding sidecar


class SidecarError(ValueError):
    pass


@dataclass
class EmbeddingStore:
    dim: int
    vectors: dict[tuple[str, int, int], np.ndarray]

    def lookup(self, doc_id: str, sentence_index: int, token_index: int) -> np.ndarray:
        try:
            return self.vectors[(doc_id, sentence_index, token_index)]
        except KeyError:
            raise KeyError(f"no embedding for doc_id={doc_id!r} sentence_index={sentence_index} "
                           f"token_index={token_index}") from None

    def __len__(self) -> int:
        return len(self.vectors)


def parse_embedding_sidecar(lines: Sequence[str]) -> EmbeddingStore:
    it = iter(enumerate(lines, 1))
    try:
        _, header = next(it)
    except StopIteration:
        raise SidecarError("line 1: missing dim=<d> header") from None
    header = header.strip()
    if not header.startswith("dim="):
        raise SidecarError("line 1: missing dim=<d> header")
    try:
        dim = int(header[4:])
    except ValueError:
        raise SidecarError(f"line 1: bad dimension {header[4:]!r}") from None
    vectors: dict[tuple[str, int, int], np.ndarray] = {}
    for lineno, line in it:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise SidecarError(f"line {lineno}: expected doc_id<TAB>sent_idx<TAB>tok_idx<TAB>vector")
        try:
            key = (fields[0], int(fields[1]), int(fields[2]))
            vec = np.array([float(v) for v in fields[3].split()])
        except ValueError:
            raise SidecarError(f"line {lineno}: non-numeric field") from None
        if len(vec) != dim:
            raise SidecarError(f"line {lineno}: vector has {len(vec)} values, header says dim={dim}")
        if not np.all(np.isfinite(vec)):
            raise SidecarError(f"line {lineno}: non-finite value")
        if key in vectors:
            raise SidecarError(f"line {lineno}: duplicate key {key}")
        vectors[key] = vec
    return EmbeddingStore(dim, vectors)


@functools.lru_cache(maxsize=8)
def _read_cached(path: str, mtime: float) -> EmbeddingStore:
    with open(path, encoding="utf-8") as fh:
        return parse_embedding_sidecar(fh.readlines())


def read_embedding_sidecar(path) -> EmbeddingStore:
    p = Path(path)
    return _read_cached(str(p.resolve()), p.stat().st_mtime)


def write_embedding_sidecar(path, store: EmbeddingStore) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"dim={store.dim}\n")
        for (doc_id, si, ti), vec in sorted(store.vectors.items()):
            fh.write(f"{doc_id}\t{si}\t{ti}\t{' '.join(repr(float(v)) for v in vec)}\n")


class EmbeddingFileEncoder:
    def __init__(self, config: EncoderConfig):
        self.config = config
        self.store = read_embedding_sidecar(config.sidecar)
        self.dim = config.dimension

    def encode(self, sentence: TokenizedSentence) -> np.ndarray:
        rows = [self.store.lookup(sentence.doc_id, sentence.sentence_index, i)
                for i in range(len(sentence.tokens))]
        if not rows:
            return np.zeros((0, self.dim))
        return np.vstack(rows)


def make_encoder(config: EncoderConfig):
    if config.kind == "orthographic":
        return OrthographicEncoder(config)
    return EmbeddingFileEncoder(config)


def encode(sentence: TokenizedSentence, config: EncoderConfig):
    return make_encoder(config).encode(sentence)


def compact(H) -> tuple[np.ndarray, np.ndarray]:
    """Restrict ``H`` to its non-zero columns.

    Returns ``(cols, local)`` with ``H[:, cols] == local`` (dense) and every
    other column of ``H`` zero. Lets training touch only the weight rows a
    sentence can influence.
    """
    if sp.issparse(H):
        H = sp.csr_matrix(H)
        H.sum_duplicates()
        cols, pos = np.unique(H.indices, return_inverse=True)
        local = np.zeros((H.shape[0], len(cols)))
        row_of = np.repeat(np.arange(H.shape[0]), np.diff(H.indptr))
        local[row_of, pos] = H.data
        return cols, local
    H = np.asarray(H, dtype=float)
    return np.arange(H.shape[1]), H
