from collections import Counter

from mutner.corpus_io import Document, Mention, MutationType, align_mentions, split_sentences
from mutner.expansion import MentionDictionary, build_dictionary, expand

SUB = MutationType.SUBSTITUTION


def corpus(*docs):
    out = []
    for doc in docs:
        out.extend(align_mentions(doc, split_sentences(doc)))
    return out


def doc_with(doc_id, text, surface=None, mtype=SUB):
    mentions = ()
    if surface:
        start = text.index(surface)
        mentions = (Mention(start, start + len(surface), surface, mtype),)
    return Document(doc_id, text, mentions)


POS_A = doc_with("a1", "We found V600E in BRAF.", "V600E")
NEG_COHORT = doc_with("a2", "The V600E cohort was large.")
NEG_1999 = doc_with("a3", "Patients were enrolled in 1999.")
POS_B = doc_with("b1", "The c.76del variant was rare.", "c.76del", MutationType.DELETION)
NEG_B = doc_with("b2", "Exon 76 was sequenced.")


class TestDictionary:
    def test_empty(self):
        assert len(build_dictionary([corpus(NEG_1999)])) == 0

    def test_v600e_tokens(self):
        assert build_dictionary([corpus(POS_A)]).tokens == {"v", "600", "e"}

    def test_provenance_counts(self):
        d = build_dictionary([corpus(POS_A), corpus(doc_with("x", "Also V600E.", "V600E"))])
        assert d.tokens == {"v", "600", "e"}
        assert d.counts["600"] == 2

    def test_punctuation_skipped(self):
        assert build_dictionary([corpus(POS_B)]).tokens == {"c", "76", "del"}

    def test_case_folded_lookup(self):
        d = build_dictionary([corpus(POS_A)])
        assert "V" in d and "600" in d and "v600e" not in d

    def test_text_round_trip(self, tmp_path):
        d = build_dictionary([corpus(POS_A, POS_B)])
        d.save(tmp_path / "dict.tsv")
        lines = (tmp_path / "dict.tsv").read_text().splitlines()
        assert lines == sorted(lines)
        assert MentionDictionary.load(tmp_path / "dict.tsv") == d


class TestExpand:
    def test_cohort_kept_enrolled_dropped(self):
        d = MentionDictionary(Counter({"v": 1, "600": 1, "e": 1}))
        out = expand([corpus(NEG_COHORT, NEG_1999)], d)
        assert [s.doc_id for s in out.sentences] == ["a2"]
        st = out.stats["corpus0"]
        assert (st.positives, st.negatives_kept, st.negatives_dropped) == (0, 1, 1)

    def test_two_corpora_reconcile(self):
        a, b = corpus(POS_A, NEG_COHORT, NEG_1999), corpus(POS_B, NEG_B)
        d = build_dictionary([a, b])
        out = expand([a, b], d, ["A", "B"])
        totals = out.totals()
        assert len(out.sentences) == totals.positives + totals.negatives_kept
        assert totals.positives + totals.negatives_kept + totals.negatives_dropped == len(a) + len(b)
        # "76" from c.76del pulls in the exon sentence of corpus B
        assert [s.doc_id for s in out.sentences] == ["a1", "a2", "b1", "b2"]
        assert out.sources == ["A", "A", "B", "B"]
        assert out.stats_dict()["total"] == {"positives": 2, "negatives_kept": 2, "negatives_dropped": 1}

    def test_all_positive_is_identity(self):
        a = corpus(POS_A, POS_B)
        out = expand([a], build_dictionary([a]))
        assert out.sentences == a and out.stats["corpus0"].negatives_dropped == 0

    def test_empty_dictionary_drops_negatives(self):
        a = corpus(POS_A, NEG_COHORT, NEG_B)
        out = expand([a], MentionDictionary())
        assert [s.doc_id for s in out.sentences] == ["a1"]

    def test_monotone_in_dictionary(self):
        a = corpus(POS_A, NEG_COHORT, NEG_1999, NEG_B)
        small = MentionDictionary(Counter({"v": 1}))
        big = MentionDictionary(Counter({"v": 1, "1999": 1, "76": 1}))
        assert expand([a], small).totals().negatives_kept <= expand([a], big).totals().negatives_kept

    def test_idempotent(self):
        a, b = corpus(POS_A, NEG_COHORT, NEG_1999), corpus(POS_B, NEG_B)
        d = build_dictionary([a, b])
        once = expand([a, b], d)
        twice = expand([once.sentences], d)
        assert twice.sentences == once.sentences
