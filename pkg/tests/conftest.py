import math
from pathlib import Path

import pytest

from cscorrect.chardata import load_knowledge_base
from cscorrect.decoder import Engine
from cscorrect.distortion import DistortionParams, default_similarity_tables
from cscorrect.lexicon import Vocabulary, build_index
from cscorrect.lm import LMResponse

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def kb():
    return load_knowledge_base(DATA / "pinyin.tsv", DATA / "shape.tsv", DATA / "tricks.tsv")


@pytest.fixture(scope="session")
def tables():
    return default_similarity_tables()


@pytest.fixture(scope="session")
def params():
    return DistortionParams.defaults()


class StubBackend:
    """Deterministic backend: fixed per-char log-prob, fixed entropy."""

    concurrency_safe = True

    def __init__(self, char_logprob=-0.5, entropy=0.0, overrides=None):
        self.char_logprob = char_logprob
        self.entropy = entropy
        self.overrides = overrides or {}
        self.queries = []

    def next_token_logprobs(self, query):
        self.queries.append(query)
        logprobs = {}
        for cand in query.candidates:
            if cand in self.overrides:
                logprobs[cand] = self.overrides[cand]
            else:
                logprobs[cand] = self.char_logprob * len(cand)
        return LMResponse(logprobs=logprobs, entropy=self.entropy)


@pytest.fixture
def stub_backend():
    return StubBackend()


def make_engine(kb, tables, params, vocab_texts, backend):
    vocab = Vocabulary(vocab_texts)
    index = build_index(vocab, kb, tables)
    return Engine(
        kb=kb, tables=tables, params=params, vocab=vocab, index=index, backend=backend
    )


@pytest.fixture
def toy_engine(kb, tables, params, stub_backend):
    texts = [
        "机", "基", "七", "器", "汽", "师", "施", "工", "公", "单", "位", "要", "求",
        "机器", "施工", "单位", "要求", "施工单位",
    ]
    return make_engine(kb, tables, params, texts, stub_backend)
