"""Channel model: classify (corrected, input) char pairs and price the types.

A pair falls into exactly one type, checked in strict priority order:
interchangeable trick / identical, same pinyin, similar pinyin, similar
shape, other-similar (confusion-set catch-all), unrelated.  Types map to
log-probabilities; per-pair probabilities are deliberately not modeled.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

from .chardata import (
    KnowledgeBase,
    KnowledgeBaseError,
    PinyinSyllable,
    _read_lines,
)

log = logging.getLogger(__name__)

SHAPE_SIMILARITY_THRESHOLD = 0.45
UNRELATED_TRICK_LOGPROB = -15.0
ZERO_COUNT_FLOOR = math.log(1e-6)


class DistortionType(Enum):
    IDENTICAL = "Identical"
    SAME_PINYIN = "SamePinyin"
    SIMILAR_PINYIN = "SimilarPinyin"
    SIMILAR_SHAPE = "SimilarShape"
    OTHER_SIMILAR = "OtherSimilar"
    UNRELATED = "Unrelated"


# Priority order for estimation reports and the default-parameter checks.
CORE_TYPES = (
    DistortionType.IDENTICAL,
    DistortionType.SAME_PINYIN,
    DistortionType.SIMILAR_PINYIN,
    DistortionType.SIMILAR_SHAPE,
    DistortionType.UNRELATED,
)

DEFAULT_PROPORTIONS = {
    DistortionType.IDENTICAL: 0.962,
    DistortionType.SAME_PINYIN: 0.023,
    DistortionType.SIMILAR_PINYIN: 0.008,
    DistortionType.SIMILAR_SHAPE: 0.004,
    DistortionType.UNRELATED: 0.003,
}


@dataclass(frozen=True)
class SimilarityTables:
    """Directional (corrected -> input) confusability of initials and finals."""

    consonant_pairs: frozenset[tuple[str, str]]
    vowel_pairs: frozenset[tuple[str, str]]

    def consonant_targets(self, consonant: str) -> tuple[str, ...]:
        return tuple(sorted(t for c, t in self.consonant_pairs if c == consonant))

    def vowel_targets(self, vowel: str) -> tuple[str, ...]:
        return tuple(sorted(t for v, t in self.vowel_pairs if v == vowel))


# Confusability rules for initials, corrected -> input.  Alveolo-palatal /
# sibilant / retroflex block, then the liquid-dental-labial block, then the
# velar block; only the listed targets are reachable.
_DEFAULT_CONSONANT_RULES = {
    "j": ("q", "x", "z"),
    "q": ("j", "x", "c"),
    "x": ("j", "q", "s"),
    "z": ("j", "c", "s", "zh"),
    "c": ("q", "z", "s", "ch"),
    "s": ("z", "c", "sh"),
    "zh": ("z", "ch", "sh"),
    "ch": ("c", "zh", "sh"),
    "sh": ("s", "zh", "ch"),
    "r": ("l",),
    "l": ("r", "n", "d", "t"),
    "n": ("l", "d", "t"),
    "d": ("l", "n", "t", "b"),
    "t": ("l", "n", "d", "p"),
    "b": ("d", "p", "m"),
    "p": ("t", "b"),
    "m": ("b", "p"),
    "g": ("k", "h"),
    "k": ("g", "h"),
    "h": ("g", "k", "f"),
    "f": ("h",),
}

# Confusability rules for finals, corrected -> input (nasal-coda confusions,
# o/uo, and the v(ü)/u pair).
_DEFAULT_VOWEL_RULES = {
    "an": ("ang", "uan", "uang", "ian"),
    "ang": ("an", "uan", "uang", "iang"),
    "uan": ("an", "ang", "uang", "ian"),
    "uang": ("an", "ang", "uan", "iang"),
    "ian": ("an", "uan", "iang"),
    "iang": ("ang", "uang", "ian"),
    "en": ("eng", "un"),
    "eng": ("en",),
    "un": ("en", "ong"),
    "ong": ("un",),
    "in": ("ing",),
    "ing": ("in",),
    "o": ("uo",),
    "uo": ("o",),
    "v": ("u",),
    "u": ("v",),
}


def default_similarity_tables() -> SimilarityTables:
    """The tables above, also shipped verbatim as data/similarity.tsv."""
    return SimilarityTables(
        consonant_pairs=frozenset(
            (c, t) for c, targets in _DEFAULT_CONSONANT_RULES.items() for t in targets
        ),
        vowel_pairs=frozenset(
            (v, t) for v, targets in _DEFAULT_VOWEL_RULES.items() for t in targets
        ),
    )


def load_similarity_tables(path) -> SimilarityTables:
    """Parse a tables file with `[consonants]` / `[vowels]` sections of
    `corrected<TAB>input` lines.  "ü" normalizes to "v" on both sides."""
    sections: dict[str, set[tuple[str, str]]] = {"consonants": set(), "vowels": set()}
    current: str | None = None
    for no, line in _read_lines(path):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1]
            if name not in sections:
                raise KnowledgeBaseError(f"{path}:{no}: unknown section {name!r}")
            current = name
            continue
        if current is None:
            raise KnowledgeBaseError(f"{path}:{no}: pair line before any section header")
        parts = stripped.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise KnowledgeBaseError(f"{path}:{no}: expected `corrected<TAB>input`")
        a, b = (p.replace("ü", "v") for p in parts)
        sections[current].add((a, b))
    return SimilarityTables(
        consonant_pairs=frozenset(sections["consonants"]),
        vowel_pairs=frozenset(sections["vowels"]),
    )


def pinyin_similar(
    tables: SimilarityTables, corrected: PinyinSyllable, input: PinyinSyllable
) -> bool:
    """True when the two syllables are confusable but not identical.

    Each side must match either exactly or through the directional tables;
    full equality is same-pinyin territory, not similarity.
    """
    if corrected == input:
        return False
    consonant_ok = (
        corrected.consonant == input.consonant
        or (corrected.consonant, input.consonant) in tables.consonant_pairs
    )
    vowel_ok = (
        corrected.vowel == input.vowel
        or (corrected.vowel, input.vowel) in tables.vowel_pairs
    )
    return consonant_ok and vowel_ok


def shape_similarity(kb: KnowledgeBase, a: str, b: str) -> float:
    """Mean of the four-corner sub-score and the radical/component sub-score.

    Four-corner: positional matches among the first 4 digits, x 0.25 (the
    5th digit only disambiguates otherwise-identical codes).  Radical /
    component: the radical slot compares positionally, components compare
    as a bag; the sum is normalized by the larger slot count.  Missing data
    zeroes the affected sub-score.
    """
    ra = kb.lookup(a)
    rb = kb.lookup(b)
    if ra is None or rb is None:
        raise KnowledgeBaseError(f"shape_similarity needs records for both {a!r} and {b!r}")

    if ra.four_corner and rb.four_corner:
        matches = sum(1 for x, y in zip(ra.four_corner[:4], rb.four_corner[:4]) if x == y)
        corner_score = matches * 0.25
    else:
        corner_score = 0.0

    slots_a = (1 if ra.radical else 0) + len(ra.components)
    slots_b = (1 if rb.radical else 0) + len(rb.components)
    if slots_a and slots_b:
        radical_match = 1 if (ra.radical and ra.radical == rb.radical) else 0
        remaining = list(rb.components)
        shared = 0
        for comp in ra.components:
            if comp in remaining:
                remaining.remove(comp)
                shared += 1
        part_score = (radical_match + shared) / max(slots_a, slots_b)
    else:
        part_score = 0.0

    return (corner_score + part_score) / 2.0


def _radical_or_component_of(kb: KnowledgeBase, a: str, b: str) -> bool:
    ra, rb = kb.lookup(a), kb.lookup(b)
    in_b = rb is not None and (a == rb.radical or a in rb.components)
    in_a = ra is not None and (b == ra.radical or b in ra.components)
    return in_a or in_b


def classify(
    kb: KnowledgeBase, tables: SimilarityTables, corrected: str, input: str
) -> DistortionType:
    """Distortion type of replacing ``corrected`` with ``input``.

    Total over all char pairs; characters without a knowledge-base record
    only ever match themselves.
    """
    if kb.interchangeable(corrected, input):
        return DistortionType.IDENTICAL
    if corrected == input:
        return DistortionType.IDENTICAL
    rec_c = kb.lookup(corrected)
    rec_i = kb.lookup(input)
    if rec_c is None or rec_i is None:
        return DistortionType.UNRELATED
    if rec_c.pinyins & rec_i.pinyins:
        return DistortionType.SAME_PINYIN
    for pc in rec_c.pinyins:
        for pi in rec_i.pinyins:
            if pinyin_similar(tables, pc, pi):
                return DistortionType.SIMILAR_PINYIN
    if (
        shape_similarity(kb, corrected, input) >= SHAPE_SIMILARITY_THRESHOLD
        or _radical_or_component_of(kb, corrected, input)
    ):
        return DistortionType.SIMILAR_SHAPE
    if kb.other_similar(corrected, input):
        return DistortionType.OTHER_SIMILAR
    return DistortionType.UNRELATED


@dataclass(frozen=True)
class DistortionParams:
    """Natural-log probability per distortion type plus the trick constant.

    require_literal_identity turns the channel degenerate: only the exact
    input character is admissible, which also bars the interchangeable-pair
    rewrites that normally count as Identical.
    """

    log_prob: dict[DistortionType, float]
    unrelated_trick_logprob: float = UNRELATED_TRICK_LOGPROB
    require_literal_identity: bool = False

    @classmethod
    def defaults(cls) -> "DistortionParams":
        logp = {t: math.log(p) for t, p in DEFAULT_PROPORTIONS.items()}
        logp[DistortionType.OTHER_SIMILAR] = logp[DistortionType.SIMILAR_SHAPE]
        return cls(log_prob=logp)

    @classmethod
    def identity_only(cls) -> "DistortionParams":
        """Channel that can only copy: everything but literal identity is -inf."""
        logp = {t: float("-inf") for t in DistortionType}
        logp[DistortionType.IDENTICAL] = 0.0
        return cls(
            log_prob=logp,
            unrelated_trick_logprob=float("-inf"),
            require_literal_identity=True,
        )


def distortion_logprob(params: DistortionParams, dtype: DistortionType) -> float:
    """Log-probability charged for one character pair of the given type.

    Unrelated resolves to the per-token trick constant (the decoder only
    ever scores an unrelated pair through that allowance); OtherSimilar
    falls back to the SimilarShape value when not explicitly configured.
    """
    if dtype is DistortionType.UNRELATED:
        return params.unrelated_trick_logprob
    if dtype is DistortionType.OTHER_SIMILAR and dtype not in params.log_prob:
        return params.log_prob[DistortionType.SIMILAR_SHAPE]
    return params.log_prob[dtype]


def estimate_params(
    kb: KnowledgeBase,
    tables: SimilarityTables,
    corpus,
    floor: float = ZERO_COUNT_FLOOR,
) -> DistortionParams:
    """Estimate type log-probabilities from aligned (input, corrected) pairs.

    Each aligned position is classified as (corrected_i, input_i); the
    parameters are log empirical frequencies.  OtherSimilar counts merge
    into SimilarShape, zero-count types get the configured floor.
    """
    counts = {t: 0 for t in CORE_TYPES}
    total = 0
    for idx, (input_sent, corrected_sent) in enumerate(corpus):
        if len(input_sent) != len(corrected_sent):
            raise ValueError(
                f"pair {idx}: length mismatch ({len(input_sent)} vs {len(corrected_sent)})"
            )
        for input_char, corrected_char in zip(input_sent, corrected_sent):
            dtype = classify(kb, tables, corrected_char, input_char)
            if dtype is DistortionType.OTHER_SIMILAR:
                dtype = DistortionType.SIMILAR_SHAPE
            counts[dtype] += 1
            total += 1
    if total == 0:
        raise ValueError("empty corpus")
    log_prob = {
        t: (math.log(c / total) if c > 0 else floor) for t, c in counts.items()
    }
    log_prob[DistortionType.OTHER_SIMILAR] = log_prob[DistortionType.SIMILAR_SHAPE]
    return DistortionParams(log_prob=log_prob)


_TYPE_BY_NAME = {t.value: t for t in DistortionType}


def load_params(path) -> DistortionParams:
    """Load a `type<TAB>probability` TSV; types not listed keep defaults."""
    params = DistortionParams.defaults()
    logp = dict(params.log_prob)
    trick = params.unrelated_trick_logprob
    explicit_other = False
    for no, line in _read_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise KnowledgeBaseError(f"{path}:{no}: expected `type<TAB>probability`")
        name, value = parts
        try:
            prob = float(value)
        except ValueError as exc:
            raise KnowledgeBaseError(f"{path}:{no}: bad probability {value!r}") from exc
        if name == "UnrelatedTrick":
            trick = prob  # already a log-probability
            continue
        if name not in _TYPE_BY_NAME:
            raise KnowledgeBaseError(f"{path}:{no}: unknown distortion type {name!r}")
        if not 0.0 < prob <= 1.0:
            raise KnowledgeBaseError(f"{path}:{no}: probability out of (0, 1]: {prob}")
        dtype = _TYPE_BY_NAME[name]
        logp[dtype] = math.log(prob)
        if dtype is DistortionType.OTHER_SIMILAR:
            explicit_other = True
    if not explicit_other:
        logp[DistortionType.OTHER_SIMILAR] = logp[DistortionType.SIMILAR_SHAPE]
    return DistortionParams(log_prob=logp, unrelated_trick_logprob=trick)


def save_params(params: DistortionParams, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for dtype in CORE_TYPES:
            fh.write(f"{dtype.value}\t{math.exp(params.log_prob[dtype]):.10g}\n")
        fh.write(f"UnrelatedTrick\t{params.unrelated_trick_logprob:.10g}\n")
