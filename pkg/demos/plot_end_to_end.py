"""
Training the three patterns and voting
======================================

Generate a synthetic corpus, train both CRF taggers and the span tagger,
then compare each one with the majority-vote ensemble on held-out text.
Takes well under a minute.
"""

from mutner import EncoderConfig, TrainConfig, split_sentences, tags_to_spans
from mutner.crf import train_crf
from mutner.evaluation import emit_report, exact_match_prf
from mutner.pipeline import predict_ensemble
from mutner.span import train_span
from mutner.synthetic import generate_documents
from mutner.tagging import TagScheme

docs = generate_documents(600, seed=1)
sentences = [s for d in docs for s in split_sentences(d)]
train, test = sentences[:500], sentences[500:]
print(test[0].surfaces)

enc = EncoderConfig()
tc = TrainConfig(epochs=30)
models = [train_crf(train, enc, tc, TagScheme.BIO),
          train_crf(train, enc, tc, TagScheme.BMEO),
          train_span(train, enc, tc)]

ensemble, singles = predict_ensemble(models, test)
gold = [s.gold_spans for s in test]
for name, preds in [*singles.items(), ("ensemble", ensemble)]:
    report = exact_match_prf(gold, [tags_to_spans(p) for p in preds], model=name)
    print(f"{name:9s} F1 {report.micro.f1:.3f}")

print(emit_report(exact_match_prf(gold, [tags_to_spans(p) for p in ensemble]), "tsv"))
