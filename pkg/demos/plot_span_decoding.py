"""
Matching start and end labels
=============================

The span pattern labels each token twice, once as a possible start and
once as a possible end. Spans come from pairing each start with the
nearest end of the same type.
"""

from mutner.span import decode_spans, spans_to_bio

starts = ["none", "Sub", "none", "none", "Del", "none"]
ends = ["none", "none", "Sub", "none", "none", "none"]
spans = decode_spans(starts, ends)
print(spans)
# the Del start finds no end inside the window and is dropped
print(spans_to_bio(spans, len(starts)).labels)
