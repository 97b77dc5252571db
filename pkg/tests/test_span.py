import numpy as np
import pytest

from mutner.corpus_io import Document, MutationType, Span, Token, TokenizedSentence, align_mentions, split_sentences
from mutner.encoding import EncoderConfig, encode
from mutner.optim import TrainConfig
from mutner.span import (
    NONE,
    SPAN_LABELS,
    SpanDecodeConfig,
    SpanModel,
    decode_spans,
    gold_boundary_labels,
    loss_and_gradient,
    predict_spans,
    predict_token_labels,
    spans_to_bio,
    train_span,
)
from mutner.synthetic import generate_documents
from oracles import central_differences, max_relative_error, random_spans

SUB, DEL, SNP = MutationType.SUBSTITUTION, MutationType.DELETION, MutationType.SNP


def boundary_lists(spans, n):
    starts, ends = [NONE] * n, [NONE] * n
    for s in spans:
        starts[s.start] = s.mtype.code
        ends[s.end] = s.mtype.code
    return starts, ends


class TestTokenLabels:
    def test_zero_model_predicts_none(self):
        starts, ends = predict_token_labels(SpanModel.zeros(3), np.zeros((4, 3)))
        assert starts == ends == [NONE] * 4

    def test_crafted_start_weights(self):
        model = SpanModel.zeros(2)
        model.Ws[1, SPAN_LABELS.index("Sub")] = 5.0
        H = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        starts, _ = predict_token_labels(model, H)
        assert starts == [NONE, "Sub", NONE]

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        model = SpanModel(rng.normal(size=(3, 8)), rng.normal(size=(3, 8)))
        H = rng.normal(size=(5, 3))
        shifted = SpanModel(model.Ws.copy(), model.We.copy())
        # a constant added to every logit of a token: append a feature that hits every label equally
        H2 = np.hstack([H, np.ones((5, 1))])
        shifted.Ws = np.vstack([model.Ws, np.full((1, 8), 7.0)])
        shifted.We = np.vstack([model.We, np.full((1, 8), -3.0)])
        assert predict_token_labels(model, H) == predict_token_labels(shifted, H2)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            predict_token_labels(SpanModel.zeros(3), np.zeros((2, 4)))


class TestDecode:
    def test_all_none(self):
        assert decode_spans([NONE] * 4, [NONE] * 4) == []

    def test_hand_trace(self):
        start = [NONE, "Sub", NONE, NONE]
        end = [NONE, NONE, "Sub", NONE]
        assert decode_spans(start, end) == [Span(1, 2, SUB)]

    def test_no_end_in_window(self):
        assert decode_spans(["Del", NONE, NONE], [NONE] * 3) == []

    def test_single_token_and_resume(self):
        start = ["SNP", "Sub", NONE, "Sub"]
        end = ["SNP", NONE, "Sub", "Sub"]
        assert decode_spans(start, end) == [Span(0, 0, SNP), Span(1, 2, SUB), Span(3, 3, SUB)]

    def test_window_limit(self):
        start = ["Del"] + [NONE] * 4
        end = [NONE] * 4 + ["Del"]
        assert decode_spans(start, end, SpanDecodeConfig(4)) == []
        assert decode_spans(start, end, SpanDecodeConfig(5)) == [Span(0, 4, DEL)]

    def test_unmatched_start_resumes_next_token(self):
        start = ["Sub", "Del", NONE]
        end = [NONE, NONE, "Del"]
        assert decode_spans(start, end) == [Span(1, 2, DEL)]

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            decode_spans([NONE], [])

    def test_random_output_is_non_overlapping(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(0, 30))
            start = [SPAN_LABELS[i] for i in rng.integers(0, 8, n)]
            end = [SPAN_LABELS[i] for i in rng.integers(0, 8, n)]
            spans = decode_spans(start, end, SpanDecodeConfig(6))
            for a, b in zip(spans, spans[1:]):
                assert a.end < b.start
            assert all(s.end - s.start + 1 <= 6 for s in spans)

    def test_gold_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            n = int(rng.integers(0, 40))
            spans = random_spans(rng, n, max_len=20)
            assert decode_spans(*boundary_lists(spans, n)) == spans


def test_spans_to_bio():
    assert spans_to_bio([], 3).labels == ("O", "O", "O")
    assert spans_to_bio([Span(1, 2, SUB)], 4).labels == ("O", "B-Sub", "I-Sub", "O")
    assert spans_to_bio([Span(0, 0, SNP), Span(2, 3, DEL)], 4).labels == ("B-SNP", "O", "B-Del", "I-Del")
    with pytest.raises(ValueError):
        spans_to_bio([Span(2, 4, SUB)], 3)


def test_gold_boundary_single_token():
    toks = tuple(Token(s, i, i + 1) for i, s in enumerate("abc"))
    sent = TokenizedSentence("d", 0, toks, (Span(1, 1, SNP),))
    assert gold_boundary_labels(sent) == ([NONE, "SNP", NONE], [NONE, "SNP", NONE])


class TestGradient:
    def test_finite_differences(self):
        rng = np.random.default_rng(3)
        model = SpanModel(rng.normal(size=(4, 8)), rng.normal(size=(4, 8)))
        batch = []
        for n in (1, 3, 5):
            starts = [SPAN_LABELS[i] for i in rng.integers(0, 8, n)]
            ends = [SPAN_LABELS[i] for i in rng.integers(0, 8, n)]
            batch.append((rng.normal(size=(n, 4)), starts, ends))
        wd = 0.02
        _, grads = loss_and_gradient(model, batch, wd)
        f = lambda: loss_and_gradient(model, batch, wd)[0]
        assert max_relative_error(grads["Ws"], central_differences(f, model.Ws)) <= 1e-4
        assert max_relative_error(grads["We"], central_differences(f, model.We)) <= 1e-4

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            loss_and_gradient(SpanModel.zeros(2), [])


def _synthetic(n, seed=0):
    out = []
    for doc in generate_documents(n, seed=seed):
        out.extend(align_mentions(doc, split_sentences(doc)))
    return out


class TestTraining:
    cfg = EncoderConfig(hash_bits=12)

    def test_empty_dataset(self):
        with pytest.raises(ValueError):
            train_span([], self.cfg)

    def test_no_mentions_predicts_none(self):
        doc = Document("d", "We studied BRAF in melanoma. Patients were enrolled in 1999.", ())
        data = split_sentences(doc)
        model = train_span(data, self.cfg, TrainConfig(epochs=5))
        for s in data:
            assert predict_spans(model, encode(s, self.cfg)) == []

    def test_fits_training_data(self):
        data = _synthetic(60)
        model = train_span(data, self.cfg, TrainConfig(epochs=15))
        hits = sum(predict_spans(model, encode(s, self.cfg)) == list(s.gold_spans) for s in data)
        assert hits >= 0.9 * len(data)

    def test_deterministic_save_load(self, tmp_path):
        data = _synthetic(30)
        a = train_span(data, self.cfg, TrainConfig(epochs=3, seed=5), SpanDecodeConfig(12))
        b = train_span(data, self.cfg, TrainConfig(epochs=3, seed=5), SpanDecodeConfig(12))
        a.save(tmp_path / "a.json")
        b.save(tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        back = SpanModel.load(tmp_path / "a.json")
        np.testing.assert_array_equal(back.Ws, a.Ws)
        np.testing.assert_array_equal(back.We, a.We)
        assert back.decode.max_span_length == 12
