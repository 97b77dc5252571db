"""Synthetic mutation-mention corpus for smoke tests and demonstrations.

Carrier sentences are plain English with slots filled by mutation-like
strings drawn from per-type templates (``V600E`` for substitutions,
``c.76_78del`` for deletions, ``rs121913529`` for SNPs, ...). Gene names with
digits and bare numbers appear in the carriers as look-alike negatives.
"""

from __future__ import annotations

import numpy as np

from .corpus_io import Document, Mention, MutationType

AA1 = "ACDEFGHIKLMNPQRSTVWY"
AA3 = ("Ala", "Arg", "Asn", "Asp", "Cys", "Gln", "Glu", "Gly", "His", "Ile",
       "Leu", "Lys", "Met", "Phe", "Pro", "Ser", "Thr", "Trp", "Tyr", "Val")
NT = "ACGT"
GENES = ("BRAF", "KRAS", "EGFR", "TP53", "BRCA1", "BRCA2", "PIK3CA", "CFTR", "MLH1", "APC", "NRAS", "IDH1")
DISEASES = ("melanoma", "colorectal cancer", "lung adenocarcinoma", "breast cancer", "glioma",
            "cystic fibrosis", "ovarian cancer")
DRUGS = ("vemurafenib", "gefitinib", "cetuximab", "olaparib", "erlotinib")

POSITIVE_CARRIERS = (
    "The {M} mutation was detected in {n} of {k} patients with {disease}.",
    "We identified {M} in the {gene} gene.",
    "{gene} {M} was associated with poor prognosis in {disease}.",
    "Patients carrying {M} and {M} showed resistance to {drug}.",
    "In this cohort , {M} was the most frequent alteration.",
    "Functional assays showed that {M} reduces {gene} activity by {n} percent.",
    "{M} was found together with {M} in {n} tumors.",
    "Sequencing of exon {n} revealed {M} in a family with {disease}.",
    "The variant {M} ( {gene} ) was absent from {k} controls.",
    "Carriers of {M} responded to {drug} treatment.",
)
NEGATIVE_CARRIERS = (
    "No mutations were found in exon {n} of {gene}.",
    "A total of {k} tumors were sequenced between {year} and {year2}.",
    "Patients were enrolled in {year} at {n} centers.",
    "Expression of {gene} was measured in {k} samples of {disease}.",
    "The median age at diagnosis was {n} years.",
    "Treatment with {drug} improved survival in {disease}.",
)


def _pos(rng) -> int:
    return int(rng.integers(2, 2000))


def _mention(rng, mtype: MutationType) -> str:
    a, b = AA1[rng.integers(20)], AA1[rng.integers(20)]
    p = _pos(rng)
    form = rng.integers(2)
    if mtype is MutationType.SUBSTITUTION:
        if form == 0:
            return f"{a}{p}{b}"
        return f"p.{AA3[rng.integers(20)]}{p}{AA3[rng.integers(20)]}"
    if mtype is MutationType.DELETION:
        if form == 0:
            return f"c.{p}_{p + int(rng.integers(1, 30))}del"
        return f"c.{p}del"
    if mtype is MutationType.INSERTION:
        ins = "".join(NT[i] for i in rng.integers(4, size=int(rng.integers(1, 5))))
        return f"g.{p}_{p + 1}ins{ins}"
    if mtype is MutationType.DUPLICATION:
        return f"{AA3[rng.integers(20)]}{p}dup"
    if mtype is MutationType.INDEL:
        ins = "".join(AA1[i] for i in rng.integers(20, size=int(rng.integers(1, 4))))
        return f"{a}{p}_{b}{p + int(rng.integers(2, 10))}delins{ins}"
    if mtype is MutationType.SNP:
        return f"rs{int(rng.integers(1000, 1_000_000_000))}"
    if form == 0:
        return f"{a}{p}fs*{int(rng.integers(2, 60))}"
    return f"{a}{p}{b}fs"


def _fill(template: str, rng, types) -> tuple[str, list[Mention]]:
    parts = []
    mentions = []
    pos = 0
    rest = template
    while rest:
        i = rest.find("{")
        if i < 0:
            parts.append(rest)
            break
        parts.append(rest[:i])
        pos += i
        j = rest.index("}", i)
        slot = rest[i + 1:j]
        rest = rest[j + 1:]
        if slot == "M":
            mtype = types[rng.integers(len(types))]
            value = _mention(rng, mtype)
            mentions.append(Mention(pos, pos + len(value), value, mtype))
        elif slot == "gene":
            value = GENES[rng.integers(len(GENES))]
        elif slot == "disease":
            value = DISEASES[rng.integers(len(DISEASES))]
        elif slot == "drug":
            value = DRUGS[rng.integers(len(DRUGS))]
        elif slot in ("year", "year2"):
            value = str(int(rng.integers(1990, 2021)))
        else:
            value = str(int(rng.integers(2, 500)))
        parts.append(value)
        pos += len(value)
    return "".join(parts), mentions


def generate_documents(n: int = 600, seed: int = 0, negative_rate: float = 0.25,
                       types=tuple(MutationType), prefix: str = "syn") -> list[Document]:
    """``n`` single-sentence documents; roughly ``negative_rate`` carry no mention."""
    rng = np.random.default_rng(seed)
    docs = []
    for k in range(n):
        if rng.random() < negative_rate:
            template = NEGATIVE_CARRIERS[rng.integers(len(NEGATIVE_CARRIERS))]
        else:
            template = POSITIVE_CARRIERS[rng.integers(len(POSITIVE_CARRIERS))]
        text, mentions = _fill(template, rng, types)
        # title-only document: text is "<title>\n<empty abstract>"
        docs.append(Document(f"{prefix}{k}", text + "\n", tuple(mentions)))
    return docs
