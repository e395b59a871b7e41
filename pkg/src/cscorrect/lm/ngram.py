"""Character n-gram language model with interpolated absolute discounting.

The model is char-level; multi-character candidates are scored by the chain
rule over their characters.  Every line of the training corpus is padded
with begin sentinels, and an unknown symbol catches characters outside the
training alphabet, so any candidate text gets a finite score.  A word
lexicon may ride along in the model file: those words become the
multi-character tokens of the decoding vocabulary.
"""

from __future__ import annotations

import io
import math
from collections import defaultdict
from functools import lru_cache

import numpy as np

from . import LMQuery, LMResponse, flatten_prefix

BOS = "\x02"
UNK = "\x01"
DISCOUNT = 0.75
_FORMAT_HEADER = "#cscorrect-ngram v1"


class NGramModel:
    """Count tables for grams of order 1..n plus the adopted lexicon."""

    def __init__(self, n: int, counts: dict[str, int], lexicon: tuple[str, ...] = ()):
        if n < 2:
            raise ValueError("n-gram order must be >= 2")
        self.n = n
        self.counts = counts
        self.lexicon = tuple(lexicon)
        self.alphabet = tuple(sorted(g for g in counts if len(g) == 1))
        self._char_index = {c: i for i, c in enumerate(self.alphabet)}
        self.unk_index = len(self.alphabet)
        # Continuation totals and distinct-continuation counts per history.
        self._cont_total: dict[str, int] = defaultdict(int)
        self._cont_kinds: dict[str, int] = defaultdict(int)
        self._cont: dict[str, list[tuple[int, int]]] = defaultdict(list)
        for gram, count in counts.items():
            if len(gram) < 2:
                continue
            history, char = gram[:-1], gram[-1]
            self._cont_total[history] += count
            self._cont_kinds[history] += 1
            self._cont[history].append((self._char_index[char], count))
        self._total_chars = sum(c for g, c in counts.items() if len(g) == 1)
        self._dist = lru_cache(maxsize=65536)(self._dist_uncached)

    # -- distributions -----------------------------------------------------

    def _base_dist(self) -> np.ndarray:
        size = len(self.alphabet) + 1
        dist = np.zeros(size, dtype=np.float64)
        if self._total_chars == 0:
            dist[:] = 1.0 / size
            return dist
        for char, i in self._char_index.items():
            dist[i] = max(self.counts[char] - DISCOUNT, 0.0) / self._total_chars
        reserved = DISCOUNT * len(self.alphabet) / self._total_chars
        dist += reserved / size
        return dist

    def _dist_uncached(self, history: str) -> np.ndarray:
        """p(next char | history) over alphabet + unknown; sums to 1."""
        if not history:
            return self._base_dist()
        total = self._cont_total.get(history, 0)
        lower = self._dist(history[1:])
        if total == 0:
            return lower
        dist = np.zeros(len(self.alphabet) + 1, dtype=np.float64)
        for idx, count in self._cont[history]:
            dist[idx] = max(count - DISCOUNT, 0.0) / total
        backoff = DISCOUNT * self._cont_kinds[history] / total
        return dist + backoff * lower

    def _history(self, context: str) -> str:
        padded = BOS * (self.n - 1) + self._map_chars(context)
        return padded[len(padded) - (self.n - 1):]

    def _map_chars(self, text: str) -> str:
        return "".join(c if c in self._char_index or c == BOS else UNK for c in text)

    def char_logprob(self, context: str, char: str) -> float:
        dist = self._dist(self._history(context))
        idx = self._char_index.get(char, self.unk_index)
        return math.log(dist[idx])

    def sequence_logprob(self, context: str, text: str) -> float:
        score = 0.0
        for i, char in enumerate(text):
            score += self.char_logprob(context + text[:i], char)
        return score

    def next_char_entropy(self, context: str) -> float:
        dist = self._dist(self._history(context))
        if dist.size <= 1:
            return 0.0
        positive = dist[dist > 0.0]
        h = float(-(positive * np.log(positive)).sum())
        return min(1.0, max(0.0, h / math.log(dist.size)))

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            self.dump(fh)

    def dump(self, fh: io.TextIOBase) -> None:
        fh.write(f"{_FORMAT_HEADER}\n")
        fh.write(f"n={self.n}\td={DISCOUNT}\n")
        fh.write("#lexicon\n")
        for word in self.lexicon:
            fh.write(word + "\n")
        fh.write("#counts\n")
        for gram in sorted(self.counts, key=lambda g: (len(g), g)):
            fh.write(f"{len(gram)}\t{_escape(gram)}\t{self.counts[gram]}\n")

    @classmethod
    def load(cls, path) -> "NGramModel":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def loads(cls, text: str) -> "NGramModel":
        lines = text.splitlines()
        if not lines or lines[0] != _FORMAT_HEADER:
            raise ValueError("not a cscorrect n-gram model file")
        header = dict(kv.split("=", 1) for kv in lines[1].split("\t"))
        n = int(header["n"])
        if float(header["d"]) != DISCOUNT:
            raise ValueError(f"unsupported discount {header['d']}")
        if lines[2] != "#lexicon":
            raise ValueError("missing #lexicon section")
        lexicon = []
        i = 3
        while i < len(lines) and lines[i] != "#counts":
            lexicon.append(lines[i])
            i += 1
        if i == len(lines):
            raise ValueError("missing #counts section")
        counts: dict[str, int] = {}
        for line in lines[i + 1:]:
            if not line:
                continue
            length, gram, count = line.split("\t")
            gram = _unescape(gram)
            if len(gram) != int(length):
                raise ValueError(f"corrupt gram line: {line!r}")
            counts[gram] = int(count)
        return cls(n=n, counts=counts, lexicon=tuple(lexicon))


def _escape(gram: str) -> str:
    return gram.replace("\\", "\\\\").replace("\x02", "\\b").replace("\x01", "\\u")


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        if text[i] == "\\" and i + 1 < len(text):
            out.append({"\\": "\\", "b": "\x02", "u": "\x01"}[text[i + 1]])
            i += 2
        else:
            out.append(text[i])
            i += 1
    return "".join(out)


def train_ngram(corpus_path, n: int, lexicon_path=None) -> NGramModel:
    """Count grams of order 1..n over each line of the corpus.

    Lines are padded with n-1 begin sentinels; tabs and control characters
    are squeezed out so the model file stays line-oriented.  Deterministic
    given identical inputs.
    """
    if n < 2:
        raise ValueError("n-gram order must be >= 2")
    counts: dict[str, int] = defaultdict(int)
    saw_text = False
    with open(corpus_path, encoding="utf-8") as fh:
        for raw in fh:
            line = "".join(c for c in raw.strip() if c.isprintable() and c != "\t")
            if not line:
                continue
            saw_text = True
            padded = BOS * (n - 1) + line
            for k in range(1, n + 1):
                for i in range(len(padded) - k + 1):
                    gram = padded[i:i + k]
                    if gram[-1] == BOS:
                        continue
                    counts[gram] += 1
    if not saw_text:
        raise ValueError(f"empty training corpus: {corpus_path}")
    lexicon: tuple[str, ...] = ()
    if lexicon_path is not None:
        with open(lexicon_path, encoding="utf-8") as fh:
            seen = dict.fromkeys(w.strip() for w in fh if len(w.strip()) >= 2)
        lexicon = tuple(seen)
    return NGramModel(n=n, counts=dict(counts), lexicon=lexicon)


class NGramBackend:
    """Backend adapter over NGramModel; immutable after training."""

    concurrency_safe = True

    def __init__(self, model: NGramModel):
        self.model = model

    def next_token_logprobs(self, query: LMQuery) -> LMResponse:
        context = flatten_prefix(query.knowledge_prefix, query.token_prefix)
        logprobs = {
            text: self.model.sequence_logprob(context, text) for text in query.candidates
        }
        return LMResponse(logprobs=logprobs, entropy=self.model.next_char_entropy(context))
