"""Exact-match mention-level precision, recall and F1."""

from __future__ import annotations

import io
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .corpus_io import MUTATION_TYPES, MutationType, Span

TYPE_NAMES = {
    MutationType.SUBSTITUTION: "Substitution",
    MutationType.DELETION: "Deletion",
    MutationType.INSERTION: "Insertion",
    MutationType.DUPLICATION: "Duplication",
    MutationType.INDEL: "InDel",
    MutationType.SNP: "SNP",
    MutationType.FRAMESHIFT: "Frame Shift",
}


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


@dataclass(frozen=True)
class Scores:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class EvalReport:
    micro: Scores
    per_type: dict[MutationType, Scores] = field(default_factory=dict)
    dataset: str | None = None
    model: str | None = None


def exact_match_prf(gold: Sequence[Sequence[Span]], pred: Sequence[Sequence[Span]],
                    dataset: str | None = None, model: str | None = None) -> EvalReport:
    """Score per-sentence span lists; a prediction counts only on identical bounds and type."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    tp, fp, fn = Counter(), Counter(), Counter()
    for g_sent, p_sent in zip(gold, pred):
        g = Counter(tuple(s) for s in g_sent)
        p = Counter(tuple(s) for s in p_sent)
        matched = g & p
        for key, c in matched.items():
            tp[key[2]] += c
        for key, c in (p - matched).items():
            fp[key[2]] += c
        for key, c in (g - matched).items():
            fn[key[2]] += c
    per_type = {t: Scores(tp[t], fp[t], fn[t]) for t in MUTATION_TYPES}
    micro = Scores(sum(tp.values()), sum(fp.values()), sum(fn.values()))
    return EvalReport(micro, per_type, dataset, model)


def _pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def emit_report(report: EvalReport, fmt: str = "json") -> str:
    if fmt == "json":
        payload = {
            "dataset": report.dataset,
            "model": report.model,
            "micro": report.micro.as_dict(),
            "per_type": {TYPE_NAMES[t]: report.per_type.get(t, Scores()).as_dict() for t in MUTATION_TYPES},
        }
        return json.dumps(payload, indent=2) + "\n"
    if fmt == "tsv":
        buf = io.StringIO()
        buf.write("type\tprecision\trecall\tf1\ttp\tfp\tfn\n")
        rows = [("micro", report.micro)] + [(TYPE_NAMES[t], report.per_type.get(t, Scores()))
                                            for t in MUTATION_TYPES]
        for name, s in rows:
            buf.write(f"{name}\t{_pct(s.precision)}\t{_pct(s.recall)}\t{_pct(s.f1)}\t{s.tp}\t{s.fp}\t{s.fn}\n")
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")
