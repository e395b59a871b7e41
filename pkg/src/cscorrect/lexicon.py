"""Vocabulary plus a positional inverted index for candidate retrieval.

Every token is indexed per character position under three key kinds: the
exact character, its toneless syllables (plus the syllables those are
confusable with), and the characters it is shape- or confusion-related to.
Retrieval intersects per-position hits, so only tokens whose every
character is related to the corresponding input character survive; with
trick mode on, tokens missing at exactly one (Chinese-to-Chinese) position
are kept as well and pay the trick constant.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum

from .chardata import KnowledgeBase, PinyinSyllable
from .distortion import (
    DistortionParams,
    DistortionType,
    SHAPE_SIMILARITY_THRESHOLD,
    SimilarityTables,
    classify,
    distortion_logprob,
    shape_similarity,
)

log = logging.getLogger(__name__)

NEG_INF = float("-inf")


@dataclass(frozen=True)
class Token:
    id: int
    text: str

    def __len__(self) -> int:
        return len(self.text)


class Vocabulary:
    """Dense-id token set; immutable once handed to build_index."""

    def __init__(self, texts):
        self.tokens: list[Token] = []
        self._by_text: dict[str, int] = {}
        for text in texts:
            if not text:
                raise ValueError("empty token text")
            if text in self._by_text:
                log.warning("duplicate vocabulary token %r dropped", text)
                continue
            self._by_text[text] = len(self.tokens)
            self.tokens.append(Token(len(self.tokens), text))
        self.max_token_len = max((len(t.text) for t in self.tokens), default=0)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def text(self, token_id: int) -> str:
        return self.tokens[token_id].text

    def id_of(self, text: str) -> int | None:
        return self._by_text.get(text)

    @classmethod
    def from_file(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls(line.strip() for line in fh if line.strip())


class KeyKind(Enum):
    CHAR = "char"
    PINYIN = "pinyin"


@dataclass(frozen=True)
class IndexEntry:
    position_in_token: int
    key: str
    dtype: DistortionType


class InvertedIndex:
    """(position, key-kind, key) -> token ids."""

    def __init__(self):
        self._map: dict[tuple[int, KeyKind, str], set[int]] = defaultdict(set)

    def add(self, position: int, kind: KeyKind, key: str, token_id: int) -> None:
        self._map[(position, kind, key)].add(token_id)

    def get(self, position: int, kind: KeyKind, key: str) -> set[int]:
        return self._map.get((position, kind, key), set())

    def __len__(self) -> int:
        return len(self._map)


def _similar_syllables(tables: SimilarityTables, syllable: PinyinSyllable):
    """Input-side syllables a corrected-side syllable is confusable with."""
    consonants = (syllable.consonant,) + tables.consonant_targets(syllable.consonant)
    vowels = (syllable.vowel,) + tables.vowel_targets(syllable.vowel)
    for c in consonants:
        for v in vowels:
            if c == syllable.consonant and v == syllable.vowel:
                continue
            yield PinyinSyllable(c, v)


def related_chars(kb: KnowledgeBase) -> dict[str, set[str]]:
    """Per character: the other KB chars it relates to by shape or tricks.

    Candidate pairs are generated from shared positional four-corner
    digits, shared radicals/components, radical-or-component containment,
    and the confusion-set pairs; the 0.45-threshold comparison then runs
    only on those, which keeps the scan tractable on large databases.
    """
    buckets: dict[object, list[str]] = defaultdict(list)
    for char, rec in kb.records.items():
        if rec.four_corner:
            for pos, digit in enumerate(rec.four_corner[:4]):
                buckets[("fc", pos, digit)].append(char)
        if rec.radical:
            buckets[("rad", rec.radical)].append(char)
        for comp in set(rec.components):
            buckets[("comp", comp)].append(char)

    candidates: set[tuple[str, str]] = set()
    for chars in buckets.values():
        for i, a in enumerate(chars):
            for b in chars[i + 1:]:
                candidates.add((a, b) if a < b else (b, a))
    for char, rec in kb.records.items():
        for part in ((rec.radical,) if rec.radical else ()) + tuple(rec.components):
            if part != char and part in kb.records:
                candidates.add((char, part) if char < part else (part, char))
    for pair_set in (kb.structure_confusion, kb.similarity_matrix_pairs):
        for pair in pair_set:
            a, b = sorted(pair)
            candidates.add((a, b))

    related: dict[str, set[str]] = defaultdict(set)
    for a, b in candidates:
        ra, rb = kb.records[a], kb.records[b]
        linked = (
            shape_similarity(kb, a, b) >= SHAPE_SIMILARITY_THRESHOLD
            or a == rb.radical or a in rb.components
            or b == ra.radical or b in ra.components
            or kb.other_similar(a, b)
        )
        if linked:
            related[a].add(b)
            related[b].add(a)
    return related


def build_index(vocab: Vocabulary, kb: KnowledgeBase, tables: SimilarityTables) -> InvertedIndex:
    """Index every token position under exact, pinyin, and shape keys.

    Token characters without a knowledge-base record only get the exact
    key, so they can never be reached from a different input character.
    """
    shape_partners = related_chars(kb)
    interchangeable: dict[str, set[str]] = defaultdict(set)
    for pair in kb.interchangeable_pairs:
        a, b = sorted(pair)
        interchangeable[a].add(b)
        interchangeable[b].add(a)
    index = InvertedIndex()
    for token in vocab:
        for r, char in enumerate(token.text):
            index.add(r, KeyKind.CHAR, char, token.id)
            rec = kb.lookup(char)
            if rec is None:
                continue
            for partner in interchangeable.get(char, ()):
                index.add(r, KeyKind.CHAR, partner, token.id)
            for syllable in rec.pinyins:
                index.add(r, KeyKind.PINYIN, syllable.text(), token.id)
                for similar in _similar_syllables(tables, syllable):
                    index.add(r, KeyKind.PINYIN, similar.text(), token.id)
            for partner in shape_partners.get(char, ()):
                index.add(r, KeyKind.CHAR, partner, token.id)
    return index


def entries_for_token(
    kb: KnowledgeBase, tables: SimilarityTables, token_text: str
) -> list[IndexEntry]:
    """The per-position index entries a token contributes (for inspection)."""
    shape_partners = related_chars(kb)
    entries = []
    for r, char in enumerate(token_text):
        entries.append(IndexEntry(r, char, DistortionType.IDENTICAL))
        rec = kb.lookup(char)
        if rec is None:
            continue
        for syllable in sorted(rec.pinyins):
            entries.append(IndexEntry(r, syllable.text(), DistortionType.SAME_PINYIN))
            for similar in _similar_syllables(tables, syllable):
                entries.append(IndexEntry(r, similar.text(), DistortionType.SIMILAR_PINYIN))
        for partner in sorted(shape_partners.get(char, ())):
            dtype = (
                DistortionType.OTHER_SIMILAR
                if kb.other_similar(char, partner)
                else DistortionType.SIMILAR_SHAPE
            )
            entries.append(IndexEntry(r, partner, dtype))
    return entries


def _position_hits(
    index: InvertedIndex, kb: KnowledgeBase, r: int, input_char: str
) -> set[int]:
    hits = set(index.get(r, KeyKind.CHAR, input_char))
    rec = kb.lookup(input_char)
    if rec is not None:
        for syllable in rec.pinyins:
            hits |= index.get(r, KeyKind.PINYIN, syllable.text())
    return hits


def retrieve_candidates(
    index: InvertedIndex,
    vocab: Vocabulary,
    kb: KnowledgeBase,
    tables: SimilarityTables,
    x: str,
    pos: int,
    trick_mode: bool = True,
) -> set[int]:
    """Token ids usable at ``x[pos:]``.

    A token qualifies when it fits in the remaining input and every
    character is related to its aligned input character; under trick mode
    a single unrelated (record-bearing on both sides) position is allowed.
    """
    if not 0 <= pos < len(x):
        raise IndexError(f"position {pos} out of range for input of length {len(x)}")
    remaining = len(x) - pos
    span = min(vocab.max_token_len, remaining)
    hit_sets = [_position_hits(index, kb, r, x[pos + r]) for r in range(span)]

    hit_counts: dict[int, int] = defaultdict(int)
    for hits in hit_sets:
        for token_id in hits:
            hit_counts[token_id] += 1

    result: set[int] = set()
    check_trick: list[int] = []
    if trick_mode:
        # Full misses never enter hit_counts; sweep single-char tokens explicitly.
        for token in vocab:
            if len(token.text) == 1 and token.id not in hit_counts:
                check_trick.append(token.id)
    for token_id, count in hit_counts.items():
        length = len(vocab.text(token_id))
        if length > remaining:
            continue
        full = sum(1 for r in range(length) if token_id in hit_sets[r])
        if full == length:
            result.add(token_id)
        elif trick_mode and full == length - 1:
            check_trick.append(token_id)
    for token_id in check_trick:
        text = vocab.text(token_id)
        if len(text) > remaining:
            continue
        missed = [r for r in range(len(text)) if token_id not in hit_sets[r]]
        if len(missed) != 1:
            continue
        r = missed[0]
        if kb.lookup(text[r]) is not None and kb.lookup(x[pos + r]) is not None:
            result.add(token_id)
    return result


def brute_force_candidates(
    vocab: Vocabulary,
    kb: KnowledgeBase,
    tables: SimilarityTables,
    x: str,
    pos: int,
    trick_mode: bool = True,
) -> set[int]:
    """Reference filter: classify every vocabulary token at every position."""
    if not 0 <= pos < len(x):
        raise IndexError(f"position {pos} out of range for input of length {len(x)}")
    remaining = len(x) - pos
    result = set()
    for token in vocab:
        if len(token.text) > remaining:
            continue
        unrelated = [
            r
            for r, char in enumerate(token.text)
            if classify(kb, tables, char, x[pos + r]) is DistortionType.UNRELATED
        ]
        if not unrelated:
            result.add(token.id)
        elif trick_mode and len(unrelated) == 1:
            r = unrelated[0]
            if kb.lookup(token.text[r]) is not None and kb.lookup(x[pos + r]) is not None:
                result.add(token.id)
    return result


def token_distortion_score(
    kb: KnowledgeBase,
    tables: SimilarityTables,
    params: DistortionParams,
    x: str,
    pos: int,
    token_text: str,
) -> float:
    """Sum of per-character distortion log-probabilities for one token.

    One unrelated position costs the trick constant; a second makes the
    token unusable (-inf), as does an unrelated position touching a
    character without a knowledge-base record.
    """
    if pos + len(token_text) > len(x):
        raise IndexError(
            f"token {token_text!r} at {pos} overflows input of length {len(x)}"
        )
    score = 0.0
    unrelated_seen = 0
    for r, char in enumerate(token_text):
        if params.require_literal_identity and char != x[pos + r]:
            return NEG_INF
        dtype = classify(kb, tables, char, x[pos + r])
        if dtype is DistortionType.UNRELATED:
            unrelated_seen += 1
            if unrelated_seen > 1:
                return NEG_INF
            if kb.lookup(char) is None or kb.lookup(x[pos + r]) is None:
                return NEG_INF
        score += distortion_logprob(params, dtype)
    return score
