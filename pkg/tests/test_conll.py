import numpy as np
import pytest

from mutner.conll import ConllError, format_conll, parse_conll
from mutner.corpus_io import Document, Mention, MutationType, align_mentions, split_sentences
from mutner.crf import CrfModel
from mutner.encoding import EncoderConfig
from mutner.pipeline import load_model, order_ensemble, predict_bio, predict_ensemble
from mutner.span import SpanModel
from mutner.tagging import TagScheme, tag_sequence

TEXT = "We found V600E. It was rare."
DOC = Document("7", TEXT, (Mention(9, 14, "V600E", MutationType.SUBSTITUTION),))


def sentences():
    return align_mentions(DOC, split_sentences(DOC))


def test_round_trip_keeps_indices_and_spans():
    sents = sentences()
    text = format_conll(sents)
    assert text.startswith("# doc 7\n# sentence 0\nWe\t0\t2\tO\n")
    back = parse_conll(text.splitlines(True))
    assert [c.sentence for c in back] == sents
    assert format_conll([c.sentence for c in back]) == text


def test_prediction_column():
    sents = sentences()
    preds = [tag_sequence(["O"] * len(s.tokens)) for s in sents]
    back = parse_conll(format_conll(sents, preds).splitlines())
    assert back[0].pred == preds[0]


def test_kept_sentence_index_survives_filtering():
    second = sentences()[1]
    (back,) = parse_conll(format_conll([second]).splitlines())
    assert back.sentence.sentence_index == 1


def test_errors():
    with pytest.raises(ConllError, match="line 1"):
        parse_conll(["a\t0\t1\tO\n"])
    with pytest.raises(ConllError, match="line 2"):
        parse_conll(["# doc x\n", "a\t0\n"])
    with pytest.raises(ConllError):
        parse_conll(["# doc x\n", "a\t0\t1\tB-Gene\n"])
    assert parse_conll([]) == []


class TestPipeline:
    cfg = EncoderConfig(hash_bits=8)

    def models(self):
        return [SpanModel.zeros(256, self.cfg), CrfModel.zeros(TagScheme.BMEO, 256, self.cfg),
                CrfModel.zeros(TagScheme.BIO, 256, self.cfg)]

    def test_order_and_reject(self):
        span, bmeo, bio = self.models()
        assert order_ensemble([span, bmeo, bio]) == (bio, bmeo, span)
        with pytest.raises(ValueError):
            order_ensemble([bio, bio, span])
        with pytest.raises(ValueError):
            order_ensemble([bio, span])

    def test_zero_models_predict_o_in_bio(self):
        ens, singles = predict_ensemble(self.models(), sentences())
        for seqs in [ens, *singles.values()]:
            assert all(s.scheme is TagScheme.BIO and set(s.labels) == {"O"} for s in seqs)

    def test_encoder_mismatch(self):
        with pytest.raises(ValueError):
            predict_bio(self.models()[0], sentences(), EncoderConfig(hash_bits=8, seed=1))

    def test_load_model_by_kind(self, tmp_path):
        span, bmeo, _ = self.models()
        span.Ws[3, 2] = 1.5
        span.save(tmp_path / "s.json")
        bmeo.save(tmp_path / "c.json")
        assert isinstance(load_model(tmp_path / "s.json"), SpanModel)
        assert load_model(tmp_path / "s.json").Ws[3, 2] == 1.5
        assert load_model(tmp_path / "c.json").scheme is TagScheme.BMEO
        (tmp_path / "x.json").write_text('{"kind": "svm"}')
        with pytest.raises(ValueError):
            load_model(tmp_path / "x.json")

    def test_masked_transitions_survive_save(self, tmp_path):
        m = CrfModel.zeros(TagScheme.BIO, 4, self.cfg)
        m.T[:] = np.arange(m.T.size).reshape(m.T.shape)
        m.T[~m.mask] = 0.0
        m.save(tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        np.testing.assert_array_equal(back.transitions(), m.transitions())
