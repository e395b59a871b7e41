"""Static character knowledge base: pronunciations, glyph structure, confusion sets.

Data lives in three plain UTF-8 TSV files so the knowledge base can be rebuilt
from any public character database without code changes:

* pinyin file:  ``char<TAB>syll1,syll2,...``  (toneless syllables)
* shape file:   ``char<TAB>four_corner<TAB>radical<TAB>comp1,comp2,...``
  (empty fields allowed; four_corner, when present, is exactly 5 digits)
* tricks file:  sections ``[interchangeable]``, ``[structure_confusion]``,
  ``[similarity_matrix]``, each line ``charA<TAB>charB``
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

# Standard Mandarin initials, longest first so zh/ch/sh win over z/c/s.
INITIALS = (
    "zh", "ch", "sh",
    "b", "p", "m", "f", "d", "t", "n", "l",
    "g", "k", "h", "j", "q", "x", "r", "z", "c", "s", "y", "w",
)

_INITIAL_SET = frozenset(INITIALS)


class KnowledgeBaseError(Exception):
    """Missing or malformed knowledge-base data."""


class PinyinError(ValueError):
    """A syllable that does not split into initial + final."""


# Toned vowels fold to their toneless base; ǖǘǚǜ and ü all land on "v".
_TONE_FOLD = str.maketrans(
    "āáǎàēéěèīíǐìōóǒòūúǔùǖǘǚǜü",
    "aaaaeeeeiiiioooouuuuvvvvv",
)


@dataclass(frozen=True, order=True)
class PinyinSyllable:
    """A toneless syllable split into consonant (initial) and vowel (final).

    The consonant may be empty (zero-initial syllables such as "an"); the
    vowel never is.  "ü" is stored in its canonical "v" spelling.
    """

    consonant: str
    vowel: str

    def text(self) -> str:
        return self.consonant + self.vowel


def decompose_pinyin(syllable_text: str) -> PinyinSyllable:
    """Split a pinyin string into (consonant, vowel), stripping any tones.

    Longest-match over the standard initials; tone marks fold away and both
    "ü" and "v" spellings normalize to "v" so the vowel-similarity table has
    a single key.  Raises PinyinError for text that leaves an empty final.
    """
    text = syllable_text.strip().lower().translate(_TONE_FOLD)
    if not text:
        raise PinyinError(f"empty pinyin syllable: {syllable_text!r}")
    consonant = ""
    for initial in INITIALS:
        if text.startswith(initial):
            consonant = initial
            break
    vowel = text[len(consonant):]
    if not vowel:
        raise PinyinError(f"cannot split pinyin syllable: {syllable_text!r}")
    return PinyinSyllable(consonant, vowel)


@dataclass(frozen=True)
class CharacterRecord:
    """Everything the channel model knows about one character."""

    char: str
    pinyins: frozenset[PinyinSyllable]
    four_corner: str | None = None
    radical: str | None = None
    components: tuple[str, ...] = ()


def _pair(a: str, b: str) -> frozenset[str]:
    return frozenset((a, b))


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable char-level knowledge; safe to share across decoders."""

    records: dict[str, CharacterRecord]
    interchangeable_pairs: frozenset[frozenset[str]] = frozenset()
    structure_confusion: frozenset[frozenset[str]] = frozenset()
    similarity_matrix_pairs: frozenset[frozenset[str]] = frozenset()

    def lookup(self, c: str) -> CharacterRecord | None:
        return self.records.get(c)

    def interchangeable(self, a: str, b: str) -> bool:
        return _pair(a, b) in self.interchangeable_pairs

    def other_similar(self, a: str, b: str) -> bool:
        p = _pair(a, b)
        return p in self.structure_confusion or p in self.similarity_matrix_pairs


def lookup(kb: KnowledgeBase, c: str) -> CharacterRecord | None:
    """Record for ``c``, or None for unknown / non-Chinese characters."""
    return kb.lookup(c)


def _read_lines(path) -> list[tuple[int, str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise KnowledgeBaseError(f"cannot read {path}: {exc}") from exc
    out = []
    for no, line in enumerate(raw.splitlines(), start=1):
        line = line.strip("\n\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        out.append((no, line))
    return out


def _parse_pinyin_file(path) -> dict[str, frozenset[PinyinSyllable]]:
    result: dict[str, frozenset[PinyinSyllable]] = {}
    for no, line in _read_lines(path):
        parts = line.split("\t")
        if len(parts) != 2 or len(parts[0]) != 1 or not parts[1]:
            raise KnowledgeBaseError(f"{path}:{no}: expected `char<TAB>syll1,syll2,...`")
        char, sylls = parts
        try:
            decomposed = frozenset(decompose_pinyin(s) for s in sylls.split(",") if s.strip())
        except PinyinError as exc:
            raise KnowledgeBaseError(f"{path}:{no}: {exc}") from exc
        if not decomposed:
            raise KnowledgeBaseError(f"{path}:{no}: no syllables for {char!r}")
        if char in result:
            log.warning("%s:%d: duplicate pinyin entry for %r, last wins", path, no, char)
        result[char] = decomposed
    return result


def _parse_shape_file(path) -> dict[str, tuple[str | None, str | None, tuple[str, ...]]]:
    result: dict[str, tuple[str | None, str | None, tuple[str, ...]]] = {}
    for no, line in _read_lines(path):
        parts = line.split("\t")
        if len(parts) != 4 or len(parts[0]) != 1:
            raise KnowledgeBaseError(
                f"{path}:{no}: expected `char<TAB>four_corner<TAB>radical<TAB>comps`"
            )
        char, code, radical, comps = parts
        code = code.strip() or None
        if code is not None and not (len(code) == 5 and code.isdigit()):
            raise KnowledgeBaseError(f"{path}:{no}: four-corner code must be 5 digits, got {code!r}")
        radical = radical.strip() or None
        if radical is not None and len(radical) != 1:
            raise KnowledgeBaseError(f"{path}:{no}: radical must be a single char, got {radical!r}")
        components = tuple(c for c in comps.split(",") if c.strip())
        if any(len(c) != 1 for c in components):
            raise KnowledgeBaseError(f"{path}:{no}: components must be single chars")
        if char in result:
            log.warning("%s:%d: duplicate shape entry for %r, last wins", path, no, char)
        result[char] = (code, radical, components)
    return result


_TRICK_SECTIONS = ("interchangeable", "structure_confusion", "similarity_matrix")


def _parse_tricks_file(path) -> dict[str, set[tuple[str, str]]]:
    sections: dict[str, set[tuple[str, str]]] = {name: set() for name in _TRICK_SECTIONS}
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
        if len(parts) != 2 or len(parts[0]) != 1 or len(parts[1]) != 1:
            raise KnowledgeBaseError(f"{path}:{no}: expected `charA<TAB>charB`")
        sections[current].add((parts[0], parts[1]))
    return sections


def load_knowledge_base(pinyin_path, shape_path, tricks_path) -> KnowledgeBase:
    """Build an immutable KnowledgeBase from the three TSV files.

    Duplicate char entries: last definition wins (logged).  Confusion-set
    pairs naming a char without a pinyin record are dropped with a warning.
    Every shipped syllable must decompose, so the split rules are validated
    exhaustively at load time.
    """
    pinyins = _parse_pinyin_file(pinyin_path)
    shapes = _parse_shape_file(shape_path)
    tricks = _parse_tricks_file(tricks_path)

    records: dict[str, CharacterRecord] = {}
    for char, sylls in pinyins.items():
        code, radical, components = shapes.get(char, (None, None, ()))
        records[char] = CharacterRecord(char, sylls, code, radical, components)
    for char in shapes:
        if char not in records:
            log.warning("shape entry for %r has no pinyin entry, dropped", char)

    def checked(pairs: set[tuple[str, str]], section: str) -> frozenset[frozenset[str]]:
        kept = set()
        for a, b in sorted(pairs):
            if a not in records or b not in records:
                log.warning("[%s] pair %r/%r references unknown char, dropped", section, a, b)
                continue
            kept.add(_pair(a, b))
        return frozenset(kept)

    return KnowledgeBase(
        records=records,
        interchangeable_pairs=checked(tricks["interchangeable"], "interchangeable"),
        structure_confusion=checked(tricks["structure_confusion"], "structure_confusion"),
        similarity_matrix_pairs=checked(tricks["similarity_matrix"], "similarity_matrix"),
    )
