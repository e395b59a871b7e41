"""Correction metrics: sentence/char precision-recall-F1, FPR, CER/CERR.

Sentence scores are all-or-nothing (every error fixed, none introduced).
Character scores align prediction and target to the source with the
Levenshtein algorithm so a single insertion or deletion does not cascade
into marking every following character wrong.  Inputs are normalized by
removing whitespace and folding full-width ASCII punctuation to half-width
before comparison.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .chardata import KnowledgeBase
from .distortion import DistortionType, SimilarityTables, classify

_REACHABLE = frozenset(
    {
        DistortionType.IDENTICAL,
        DistortionType.SAME_PINYIN,
        DistortionType.SIMILAR_PINYIN,
        DistortionType.SIMILAR_SHAPE,
    }
)

# U+FF01..U+FF5E are the full-width forms of ASCII 0x21..0x7E.
_FULLWIDTH_OFFSET = 0xFF01 - 0x21


@dataclass(frozen=True)
class EvalTriple:
    source: str
    prediction: str
    target: str


@dataclass(frozen=True)
class MetricsReport:
    s_p: float
    s_r: float
    s_f: float
    c_p: float
    c_r: float
    c_f: float
    fpr: float
    cer: float
    cerr: float
    recall_upper_bound: float
    counts: dict

    def to_json(self, **kw) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, **kw)


def normalize_for_eval(s: str) -> str:
    """Drop all whitespace and fold full-width ASCII-range punctuation."""
    out = []
    for ch in s:
        if ch.isspace():
            continue
        code = ord(ch)
        if 0xFF01 <= code <= 0xFF5E:
            ch = chr(code - _FULLWIDTH_OFFSET)
        out.append(ch)
    return "".join(out)


def normalize_triples(triples) -> list[EvalTriple]:
    return [
        EvalTriple(
            normalize_for_eval(t.source),
            normalize_for_eval(t.prediction),
            normalize_for_eval(t.target),
        )
        for t in triples
    ]


def filter_length_mismatch(triples) -> tuple[list[EvalTriple], int]:
    """Drop triples whose prediction length differs from the source length."""
    kept = [t for t in triples if len(t.prediction) == len(t.source)]
    return kept, len(triples) - len(kept)


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def sentence_metrics(triples) -> tuple[float, float, float]:
    """Precision over modified sentences, recall over sentences needing fixes."""
    modified = corrected = needs = 0
    for t in triples:
        if t.prediction != t.source:
            modified += 1
        if t.target != t.source:
            needs += 1
            if t.prediction == t.target:
                corrected += 1
    p = _ratio(corrected, modified)
    r = _ratio(corrected, needs)
    return p, r, _f1(p, r)


def levenshtein_ops(a: str, b: str) -> int:
    """Minimal number of insert/delete/substitute edits turning a into b."""
    if a == b:
        return 0
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _align_with_insertions(source: str, other: str) -> tuple[list[str | None], int]:
    """other's char aligned to each source position (None = deleted) plus
    the count of other's chars aligned to no source position (insertions).

    Equal-length pairs whose substitution distance already equals the edit
    distance align positionally; otherwise a full backtrace runs with ties
    broken substitution > insertion > deletion for determinism.
    """
    if len(source) == len(other):
        subs = sum(1 for a, b in zip(source, other) if a != b)
        if subs == levenshtein_ops(source, other):
            return list(other), 0

    n, m = len(source), len(other)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dist[i][0] = i
    for j in range(m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            dist[i][j] = min(
                dist[i - 1][j - 1] + (source[i - 1] != other[j - 1]),
                dist[i][j - 1] + 1,
                dist[i - 1][j] + 1,
            )

    aligned: list[str | None] = [None] * n
    insertions = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (source[i - 1] != other[j - 1]):
            aligned[i - 1] = other[j - 1]
            i, j = i - 1, j - 1
        elif j > 0 and dist[i][j] == dist[i][j - 1] + 1:
            insertions += 1
            j -= 1
        else:
            i -= 1
    return aligned, insertions


def char_metrics(triples) -> tuple[float, float, float]:
    """Character precision/recall/F1 under source-anchored alignment.

    A character counts as corrected when prediction and target align the
    same char to a source position they both changed.  Insertions and
    deletions count toward the modified/needed totals but can never be
    corrected; wrongly-changed characters inflate only the precision
    denominator.
    """
    corrected = modified = needed = 0
    for t in triples:
        pred_aligned, pred_ins = _align_with_insertions(t.source, t.prediction)
        tgt_aligned, tgt_ins = _align_with_insertions(t.source, t.target)
        modified += pred_ins
        needed += tgt_ins
        for i, source_char in enumerate(t.source):
            p_char = pred_aligned[i]
            t_char = tgt_aligned[i]
            if p_char != source_char:
                modified += 1
            if t_char != source_char:
                needed += 1
                if p_char == t_char:
                    corrected += 1
    p = _ratio(corrected, modified)
    r = _ratio(corrected, needed)
    return p, r, _f1(p, r)


def fpr(triples) -> float:
    """Share of already-correct sentences the system still modified."""
    correct_sources = [t for t in triples if t.source == t.target]
    touched = sum(1 for t in correct_sources if t.prediction != t.source)
    return _ratio(touched, len(correct_sources))


def cer(triples) -> float:
    """Total edit operations against targets over total target length."""
    ops = sum(levenshtein_ops(t.prediction, t.target) for t in triples)
    total = sum(len(t.target) for t in triples)
    return _ratio(ops, total)


def cerr(baseline_cer: float, system_cer: float) -> float:
    """Relative character-error-rate reduction versus a baseline."""
    if baseline_cer <= 0:
        raise ValueError("baseline CER must be positive")
    return 1.0 - system_cer / baseline_cer


def recall_upper_bound(kb: KnowledgeBase, tables: SimilarityTables, pairs) -> float:
    """Fraction of sentences whose every needed fix the channel can reach."""
    if not pairs:
        return 0.0
    reachable = 0
    for idx, (source, target) in enumerate(pairs):
        if len(source) != len(target):
            raise ValueError(f"pair {idx}: length mismatch")
        if all(
            classify(kb, tables, t_char, s_char) in _REACHABLE
            for s_char, t_char in zip(source, target)
        ):
            reachable += 1
    return reachable / len(pairs)


def compute_report(
    triples,
    kb: KnowledgeBase | None = None,
    tables: SimilarityTables | None = None,
) -> MetricsReport:
    """All metrics over normalized triples (already length-filtered).

    CERR is taken against the no-correction baseline (source as prediction);
    the recall upper bound needs the knowledge base and is reported as 0
    when none is supplied.
    """
    s_p, s_r, s_f = sentence_metrics(triples)
    c_p, c_r, c_f = char_metrics(triples)
    system_cer = cer(triples)
    baseline_cer = cer([EvalTriple(t.source, t.source, t.target) for t in triples])
    upper = 0.0
    if kb is not None and tables is not None:
        equal_len = [
            (t.source, t.target) for t in triples if len(t.source) == len(t.target)
        ]
        if equal_len:
            upper = recall_upper_bound(kb, tables, equal_len)
    counts = {
        "sentences": len(triples),
        "modified_sentences": sum(1 for t in triples if t.prediction != t.source),
        "erroneous_sentences": sum(1 for t in triples if t.target != t.source),
        "correct_corrections": sum(
            1 for t in triples if t.target != t.source and t.prediction == t.target
        ),
        "edit_ops": sum(levenshtein_ops(t.prediction, t.target) for t in triples),
        "target_chars": sum(len(t.target) for t in triples),
        "no_correction_cer": baseline_cer,
    }
    return MetricsReport(
        s_p=s_p, s_r=s_r, s_f=s_f,
        c_p=c_p, c_r=c_r, c_f=c_f,
        fpr=fpr(triples),
        cer=system_cer,
        cerr=cerr(baseline_cer, system_cer) if baseline_cer > 0 else 0.0,
        recall_upper_bound=upper,
        counts=counts,
    )


def load_triples(path, prediction_column: bool = True) -> list[EvalTriple]:
    """Read `source<TAB>prediction<TAB>target` (or `source<TAB>target`) TSV."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if prediction_column and len(parts) == 3:
                triples.append(EvalTriple(parts[0], parts[1], parts[2]))
            elif not prediction_column and len(parts) == 2:
                triples.append(EvalTriple(parts[0], parts[0], parts[1]))
            else:
                raise ValueError(f"{path}:{no}: wrong number of columns")
    return triples
