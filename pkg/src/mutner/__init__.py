"""Mutation mention recognition with a CRF tagger, a start/end span tagger,
majority-vote ensembling and cross-corpus training-set expansion."""

from .corpus_io import (
    Diagnostic,
    Document,
    Mention,
    MutationType,
    Span,
    Token,
    TokenizedSentence,
    align_mentions,
    load_alias_table,
    parse_pubtator,
    split_sentences,
    tokenize,
    write_pubtator,
)
from .crf import CrfModel, log_partition, nll_and_gradient, sequence_score, train_crf, viterbi_decode
from .encoding import EncoderConfig, encode, read_embedding_sidecar
from .ensemble import majority_vote
from .evaluation import EvalReport, emit_report, exact_match_prf
from .expansion import MentionDictionary, build_dictionary, expand
from .optim import TrainConfig
from .span import SpanDecodeConfig, SpanModel, decode_spans, predict_token_labels, spans_to_bio, train_span
from .tagging import TagScheme, TagSequence, bmeo_to_bio, repair, spans_to_tags, tag_sequence, tags_to_spans

__version__ = "0.1.0"
