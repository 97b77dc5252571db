"""
Tagging a mutation mention two ways
===================================

Parse one PubTator block, split it into sentences and show the BIO and
BMEO tags of every token.
"""

from mutner import TagScheme, parse_pubtator, repair, spans_to_tags, split_sentences, tag_sequence

block = """\
1|t|BRAF in melanoma
1|a|We found the V600E mutation and rs113488022. Other cases carried c.76_78del.
1\t30\t35\tV600E\tSub
1\t49\t60\trs113488022\tSNP
1\t82\t92\tc.76_78del\tDEL
"""

(doc,) = parse_pubtator(block)
for sent in split_sentences(doc):
    bio = spans_to_tags(sent, TagScheme.BIO).labels
    bmeo = spans_to_tags(sent, TagScheme.BMEO).labels
    for tok, a, b in zip(sent.tokens, bio, bmeo):
        print(f"{tok.surface:12s} {a:8s} {b}")
    print()

# a dangling continuation is turned into a begin tag
print(repair(tag_sequence(["O", "I-Sub", "I-Sub"])).labels)
