import numpy as np
import pytest

from mutner.corpus_io import Document, Token, TokenizedSentence, split_sentences, tokenize
from mutner.encoding import (
    EmbeddingStore,
    EncoderConfig,
    SidecarError,
    compact,
    encode,
    feature_index,
    fnv1a_64,
    parse_embedding_sidecar,
    read_embedding_sidecar,
    token_features,
    word_shape,
    write_embedding_sidecar,
)


def sent(text, doc_id="d", idx=0):
    return TokenizedSentence(doc_id, idx, tuple(tokenize(text)))


def test_fnv1a_reference_vectors():
    # published FNV-1a 64-bit test vectors
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_word_shape():
    assert word_shape("Val") == "Aa"
    assert word_shape("600") == "0"
    assert word_shape("c.1234A>G") == "a.0A>A"


def test_features_of_digit_token():
    s = sent("BRAF V600E mutation")
    feats = token_features(s.tokens, 2)
    assert "w=600" in feats and "alldigits" in feats and "word_has_digit_and_letter" in feats
    assert "w[-1]=V" in feats and "w[1]=E" in feats and "w[2]=mutation" in feats
    assert "w[-2]=BRAF" in feats
    assert "shape[-1:0]=A|0" in feats


def test_orthographic_row_is_hashed_feature_set():
    cfg = EncoderConfig(hash_bits=12)
    s = sent("found V600E here")
    H = encode(s, cfg)
    assert H.shape == (5, 4096)
    expected = sorted({feature_index(f, 12, 0) for f in token_features(s.tokens, 2)})
    assert H[2].indices.tolist() == expected
    assert set(H[2].data) == {1.0}
    again = encode(s, cfg)
    assert (H != again).nnz == 0


def test_same_context_same_row():
    cfg = EncoderConfig(hash_bits=14)
    a = sent("we saw the V600E change in one case")
    b = sent("they the V600E change in melanoma today")
    ia = [t.surface for t in a.tokens].index("600")
    ib = [t.surface for t in b.tokens].index("600")
    assert (encode(a, cfg)[ia] != encode(b, cfg)[ib]).nnz == 0


def test_seed_changes_columns():
    assert feature_index("w=600", 18, 0) != feature_index("w=600", 18, 12345)


def test_encoding_ignores_other_sentences():
    cfg = EncoderConfig(hash_bits=10)
    doc = Document("d", "We found V600E. It was in BRAF.", ())
    first, _ = split_sentences(doc)
    alone = split_sentences(Document("d", "We found V600E.", ()))[0]
    assert (encode(first, cfg) != encode(alone, cfg)).nnz == 0


def test_config_validation():
    with pytest.raises(ValueError):
        EncoderConfig(kind="bert")
    with pytest.raises(ValueError):
        EncoderConfig(kind="embedding_file")
    with pytest.raises(ValueError):
        EncoderConfig(hash_bits=4, dim=8)
    assert EncoderConfig(hash_bits=4).dimension == 16


class TestSidecar:
    def test_zero_record(self):
        store = parse_embedding_sidecar(["dim=4", "d\t0\t0\t0 0 0 0"])
        np.testing.assert_array_equal(store.lookup("d", 0, 0), np.zeros(4))

    def test_header_only(self):
        store = parse_embedding_sidecar(["dim=3\n"])
        assert len(store) == 0
        with pytest.raises(KeyError):
            store.lookup("d", 0, 0)

    def test_hand_written_file(self, tmp_path):
        rows = np.arange(24, dtype=float).reshape(3, 8) / 7.0
        path = tmp_path / "emb.tsv"
        lines = ["dim=8"] + [f"doc1\t2\t{i}\t" + " ".join(repr(float(v)) for v in rows[i]) for i in range(3)]
        path.write_text("\n".join(lines) + "\n")
        cfg = EncoderConfig(kind="embedding_file", sidecar=str(path))
        s = TokenizedSentence("doc1", 2, tuple(tokenize("V600E")))
        H = encode(s, cfg)
        assert H.shape == (3, 8)
        assert np.array_equal(H, rows)

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        store = EmbeddingStore(5, {("a", 0, 0): rng.normal(size=5), ("a", 0, 1): rng.normal(size=5)})
        path = tmp_path / "s.tsv"
        write_embedding_sidecar(path, store)
        back = read_embedding_sidecar(path)
        assert back.dim == 5
        for key, vec in store.vectors.items():
            np.testing.assert_array_equal(back.vectors[key], vec)

    def test_errors(self):
        with pytest.raises(SidecarError, match="duplicate"):
            parse_embedding_sidecar(["dim=1", "a\t0\t0\t1", "a\t0\t0\t2"])
        with pytest.raises(SidecarError, match="line 2"):
            parse_embedding_sidecar(["dim=2", "a\t0\t0\t1 x"])
        with pytest.raises(SidecarError, match="dim=2"):
            parse_embedding_sidecar(["dim=2", "a\t0\t0\t1 2 3"])
        with pytest.raises(SidecarError):
            parse_embedding_sidecar(["4"])

    def test_missing_entry_names_position(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("dim=2\nd\t0\t0\t1 2\n")
        cfg = EncoderConfig(kind="embedding_file", sidecar=str(path))
        with pytest.raises(KeyError, match="sentence_index=0 token_index=1"):
            encode(TokenizedSentence("d", 0, tuple(tokenize("a b"))), cfg)

    def test_dim_mismatch(self, tmp_path):
        path = tmp_path / "s.tsv"
        path.write_text("dim=2\n")
        with pytest.raises(ValueError):
            EncoderConfig(kind="embedding_file", sidecar=str(path), dim=3).dimension


def test_compact_matches_dense():
    cfg = EncoderConfig(hash_bits=8)
    H = encode(sent("p.Val600Glu in BRAF"), cfg)
    cols, local = compact(H)
    dense = H.toarray()
    np.testing.assert_array_equal(dense[:, cols], local)
    rest = np.setdiff1d(np.arange(256), cols)
    assert not dense[:, rest].any()
