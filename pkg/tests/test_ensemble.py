import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mutner.ensemble import majority_vote, vote
from mutner.tagging import TagScheme, label_set, repair, tag_sequence
from oracles import valid_bio

BIO_LABELS = label_set(TagScheme.BIO)


def seq(*labels, scheme=TagScheme.BIO):
    return tag_sequence(list(labels), scheme)


def test_unanimity():
    s = seq("O", "B-Sub", "I-Sub", "O")
    assert majority_vote(s, s, s) == s


def test_two_of_three():
    a = seq("B-Sub", "I-Sub")
    assert majority_vote(a, a, seq("O", "O")) == a
    assert majority_vote(seq("O", "O"), a, a) == a


def test_three_way_tie_keeps_crf_bio_then_repairs():
    out = majority_vote(seq("B-Sub", "O"), seq("B-Del", "O"), seq("O", "O"))
    assert out.labels == ("B-Sub", "O")
    # crf_bio wins the tie on token 0 but leaves a dangling I that repair fixes
    out = majority_vote(seq("I-Sub", "O"), seq("B-Del", "O"), seq("O", "O"))
    assert out.labels == ("B-Sub", "O")


def test_length_mismatch():
    with pytest.raises(ValueError):
        majority_vote(seq("O"), seq("O", "O"), seq("O"))


def test_bmeo_input_rejected():
    with pytest.raises(ValueError):
        majority_vote(seq("O"), seq("O", scheme=TagScheme.BMEO), seq("O"))


triples = st.integers(0, 20).flatmap(
    lambda n: st.tuples(*[st.lists(st.sampled_from(BIO_LABELS), min_size=n, max_size=n)] * 3))


@given(triples)
def test_vote_properties(t):
    a, b, c = (seq(*x) for x in t)
    pre = vote(a, b, c)
    for i, (x, y, z) in enumerate(zip(*t)):
        if x == y or x == z:
            assert pre.labels[i] == x
        elif y == z:
            assert pre.labels[i] == y
        else:
            assert pre.labels[i] == x
    out = majority_vote(a, b, c)
    assert valid_bio(out.labels)
    assert out == repair(pre)
    assert vote(a, c, b) == pre


def test_unanimity_random_valid():
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = repair(seq(*[BIO_LABELS[i] for i in rng.integers(0, len(BIO_LABELS), 10)]))
        assert majority_vote(s, s, s) == s
