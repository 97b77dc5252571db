"""
Forward algorithm and Viterbi on a toy CRF
==========================================

Three labels and two tokens are small enough to enumerate, so the
dynamic programs can be compared with brute force.
"""

import itertools

import numpy as np

from mutner.crf import CrfModel, log_partition, scheme_mask, sequence_score, viterbi_path

rng = np.random.default_rng(0)
labels = ["a", "b", "c"]
model = CrfModel(labels, rng.normal(size=(4, 3)), rng.normal(size=(5, 5)), scheme_mask(labels, None))
H = rng.normal(size=(2, 4))

scores = {y: sequence_score(model, H, list(y)) for y in itertools.product(range(3), repeat=2)}
print("log Z by enumeration:", np.log(sum(np.exp(s) for s in scores.values())))
print("log Z by forward    :", log_partition(model, H))
print("best by enumeration :", max(scores, key=scores.get))
print("best by Viterbi     :", viterbi_path(model, H))
