"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; a failed assert marks the criterion failed.
"""

import math
import random
import string

import pytest

import corpusgen
from cscorrect import evaluate as ev
from cscorrect.decoder import DecoderConfig, correct, score_path, step_score
from cscorrect.defaults import load_default_kb, load_default_tables
from cscorrect.distortion import (
    CORE_TYPES,
    DistortionParams,
    DistortionType,
    classify,
    shape_similarity,
)
from cscorrect.lexicon import (
    Vocabulary,
    brute_force_candidates,
    build_index,
    retrieve_candidates,
)
from cscorrect.lm import NGramBackend, train_ngram

from conftest import StubBackend, make_engine
from test_decoder import exhaustive_decode
from test_eval import FOUR

T = DistortionType


@pytest.fixture(scope="module")
def shipped_kb():
    return load_default_kb()


@pytest.fixture(scope="module")
def shipped_tables():
    return load_default_tables()


@pytest.fixture(scope="module")
def e2e(tmp_path_factory, shipped_kb, shipped_tables):
    """Train the desk-scale 5-gram engine once; several criteria reuse it."""
    d = tmp_path_factory.mktemp("e2e")
    train_path = d / "train.txt"
    corpusgen.generate_corpus(train_path, 24_000, seed=1)
    assert train_path.stat().st_size > 900_000  # ~1 MB of text
    lexicon_path = d / "lexicon.txt"
    lexicon_path.write_text("\n".join(corpusgen.all_words()) + "\n", encoding="utf-8")
    model = train_ngram(train_path, 5, lexicon_path)
    engine = make_engine(
        shipped_kb,
        shipped_tables,
        DistortionParams.defaults(),
        list(model.alphabet) + list(model.lexicon),
        NGramBackend(model),
    )
    held_out = corpusgen.generate_sentences(500, seed=999)
    rng = random.Random(77)
    pairs = []
    planted = 0
    for sentence in held_out:
        corrupted, changed = corpusgen.corrupt(sentence, shipped_kb, rng, rate=0.05)
        pairs.append((corrupted, sentence))
        planted += changed
    assert planted > 200  # the corruption really happened
    return engine, pairs, planted


def _decode_pairs(engine, pairs, cfg):
    triples = [
        ev.EvalTriple(source, correct(engine, source, cfg).output, target)
        for source, target in pairs
    ]
    return ev.compute_report(ev.normalize_triples(triples))


def test_criterion_01_worked_shape_example(shipped_kb, shipped_tables):
    assert shipped_kb.records["机"].four_corner == "47910"
    assert shipped_kb.records["仉"].four_corner == "27210"
    similarity = shape_similarity(shipped_kb, "机", "仉")
    assert similarity == 0.5
    assert classify(shipped_kb, shipped_tables, "机", "仉") is T.SIMILAR_SHAPE
    print("criterion 1 PASS: shape_similarity(机,仉) == 0.5 and classifies SimilarShape at 0.45")


def test_criterion_02_reference_type_table(shipped_kb, shipped_tables):
    params = DistortionParams.defaults()
    probs = [math.exp(params.log_prob[t]) for t in CORE_TYPES]
    assert probs == pytest.approx([0.962, 0.023, 0.008, 0.004, 0.003], abs=1e-12)
    assert abs(sum(probs) - 1.0) <= 1e-9
    assert all(a > b for a, b in zip(probs, probs[1:]))
    expected_rows = {
        "机": T.IDENTICAL,
        "基": T.SAME_PINYIN,
        "七": T.SIMILAR_PINYIN,
        "仉": T.SIMILAR_SHAPE,
        "能": T.UNRELATED,
    }
    for input_char, expected in expected_rows.items():
        assert classify(shipped_kb, shipped_tables, "机", input_char) is expected, input_char
    print("criterion 2 PASS: default proportions sum to 1, strictly ordered, all rows classify")


def test_criterion_03_exhaustive_oracle_equivalence(kb, tables, params, tmp_path):
    singles = list("机基七器汽师施工公单位要求对")
    multis = [
        "机器", "单位", "要求", "施工", "师公", "施工单位", "要求施工",
        "机器单位", "七器", "汽器", "工位", "公位", "对机", "器单", "位要", "求师",
    ]
    vocab_texts = singles + multis
    assert len(vocab_texts) == 30
    rng = random.Random(42)
    corpus = tmp_path / "toy.txt"
    with open(corpus, "w", encoding="utf-8") as fh:
        for _ in range(400):
            fh.write("".join(rng.choice(vocab_texts) for _ in range(rng.randint(3, 6))) + "\n")
    engine = make_engine(kb, tables, params, vocab_texts, NGramBackend(train_ngram(corpus, 5)))
    # trick mode off on both sides: the same configuration feeds the beam
    # and the enumeration, keeping the oracle within the runtime budget
    cfg = DecoderConfig(beam_size=64, trick_mode=False)
    chars = singles + ["A"]
    for _ in range(200):
        x = "".join(rng.choice(chars) for _ in range(rng.randint(1, 6)))
        expected_output, expected_score = exhaustive_decode(engine, x, cfg)
        result = correct(engine, x, cfg)
        assert result.output == expected_output, x
        assert result.score == pytest.approx(expected_score, abs=1e-9), x
    print("criterion 3 PASS: beam K=64 equals exhaustive enumeration on 200 inputs (<=6 chars)")


def test_criterion_04_retrieval_equivalence(shipped_kb, shipped_tables):
    rng = random.Random(2024)
    chars = sorted(shipped_kb.records)
    texts = set()
    while len(texts) < 497:
        length = rng.choice([1, 1, 2, 2, 2, 3, 4])
        texts.add("".join(rng.choice(chars) for _ in range(length)))
    texts |= {"A", "A机", "机A"}
    vocab = Vocabulary(sorted(texts))
    assert len(vocab) == 500
    index = build_index(vocab, shipped_kb, shipped_tables)
    sentences = corpusgen.generate_sentences(50, seed=4)
    sentences = [
        s if i % 3 else s[:4] + "x" + s[4:] for i, s in enumerate(sentences)
    ]
    checked = 0
    for x in sentences:
        for pos in range(len(x)):
            fast = retrieve_candidates(
                index, vocab, shipped_kb, shipped_tables, x, pos, trick_mode=True
            )
            slow = brute_force_candidates(
                vocab, shipped_kb, shipped_tables, x, pos, trick_mode=True
            )
            assert fast == slow, (x, pos)
            checked += 1
    print(f"criterion 4 PASS: index == brute force at {checked} positions, 500-token vocab")


def test_criterion_05_reduction_identities(kb, tables, params, tmp_path):
    corpus = tmp_path / "c.txt"
    corpus.write_text("要求施工单位对机器\n机器要求\n师公单位\n" * 10, encoding="utf-8")
    model = train_ngram(corpus, 5)
    engine = make_engine(
        kb, tables, params,
        list(model.alphabet) + ["机器", "施工", "单位", "要求", "施工单位"],
        NGramBackend(model),
    )
    plain_cfg = DecoderConfig(length_reward_enabled=False, faithfulness_reward_enabled=False)
    for x in ["师公单位", "要求师公单位对机器", "机器"]:
        result = correct(engine, x, plain_cfg)
        assert result.score == pytest.approx(result.lm_sum + result.dm_sum, abs=1e-9)
        recomputed = sum(s.lm_logprob + s.dm_score for s in result.breakdown)
        assert result.score == pytest.approx(recomputed, abs=1e-9)

    from cscorrect.decoder import BeamCandidate

    prev = BeamCandidate(tokens=(), char_pos=0, score=-3.0, finished=False)
    on = DecoderConfig(alpha=2.5, faithfulness_reward_enabled=False)
    off = DecoderConfig(alpha=2.5, length_reward_enabled=False, faithfulness_reward_enabled=False)
    for token in ["机", "机器", "施工单位"]:
        delta = step_score(prev, token, -1.0, 0.0, -0.2, on) - step_score(
            prev, token, -1.0, 0.0, -0.2, off
        )
        assert delta == pytest.approx(2.5 * (len(token) - 1), abs=1e-12)

    for x in ["师公单位", "要求师公单位对机器"]:
        result = correct(engine, x, DecoderConfig())
        assert result.breakdown
        for step in result.breakdown:
            assert 1.0 <= step.multiplier <= 2.0
    print("criterion 5 PASS: plain-sum reduction, alpha*(k-1) delta, multiplier in [1,2]")


def test_criterion_06_identity_channel(shipped_kb, shipped_tables):
    engine = make_engine(
        shipped_kb, shipped_tables, DistortionParams.identity_only(),
        sorted(shipped_kb.records)[:200] + ["机器", "施工单位", "要求"],
        StubBackend(entropy=0.5),
    )
    rng = random.Random(6)
    chars = sorted(shipped_kb.records) + list(string.ascii_letters) + list("，。！？ 123")
    for i in range(1000):
        n = rng.randint(1, 30)
        x = "".join(rng.choice(chars) for _ in range(n))
        assert correct(engine, x).output == x, x
    print("criterion 6 PASS: identity-forcing params copy 1000/1000 arbitrary lines")


def test_criterion_07_desk_scale_end_to_end(e2e):
    engine, pairs, planted = e2e
    cfg_on = DecoderConfig(trick_mode=False)
    cfg_off = DecoderConfig(trick_mode=False, length_reward_enabled=False)
    report_on = _decode_pairs(engine, pairs, cfg_on)
    report_off = _decode_pairs(engine, pairs, cfg_off)
    baseline_cer = report_on.counts["no_correction_cer"]
    assert baseline_cer > 0  # the corruption planted real errors
    assert report_on.cerr > 0, report_on
    assert report_on.fpr < 0.30, report_on
    assert report_on.s_f >= report_off.s_f - 0.01, (report_on.s_f, report_off.s_f)
    print(
        "criterion 7 PASS: {} planted errors, CERR={:.3f} FPR={:.3f} "
        "S-F(LR on/off)={:.3f}/{:.3f}".format(
            planted, report_on.cerr, report_on.fpr, report_on.s_f, report_off.s_f
        )
    )


def test_criterion_08_metrics_fixtures():
    s_p, s_r, s_f = ev.sentence_metrics(FOUR)
    assert (s_p, s_r, s_f) == (0.5, 0.5, 0.5)
    c_p, c_r, c_f = ev.char_metrics(FOUR)
    assert (c_p, c_r, c_f) == (2 / 3, 2 / 3, 2 / 3)
    assert ev.fpr(FOUR) == 0.5
    assert ev.cer(FOUR) == 2 / 16
    assert ev.cerr(4.83, 3.29) == pytest.approx(0.319, abs=1e-3)
    print("criterion 8 PASS: 4-triple fixture matches hand computation; CERR(4.83,3.29)=0.319")


def test_criterion_09_knowledge_prefix_isolation(e2e):
    engine, _, _ = e2e
    x = "我们需要检查设备。"
    base = correct(engine, x, DecoderConfig(trick_mode=False))
    path = tuple(s.token for s in base.breakdown)
    for cfg_kwargs in ({}, {"faithfulness_reward_enabled": False}):
        plain = score_path(engine, x, path, DecoderConfig(**cfg_kwargs))
        primed = score_path(
            engine, x, path, DecoderConfig(knowledge_prefix="患者提问：", **cfg_kwargs)
        )
        assert primed.lm_sum != plain.lm_sum
        assert primed.dm_sum == plain.dm_sum
        assert primed.length_reward_sum == plain.length_reward_sum
    print("criterion 9 PASS: knowledge prefix moves lm_sum only on a fixed replayed path")


def test_criterion_10_recall_upper_bound(shipped_kb, shipped_tables):
    pairs = [
        ("师公单位", "施工单位"),
        ("机器要求", "机器要求"),
        ("七器单位", "机器单位"),
        ("能器单位", "机器单位"),  # 能 -> 机 is unreachable
    ]
    bound = ev.recall_upper_bound(shipped_kb, shipped_tables, pairs)
    assert bound == 0.75
    print("criterion 10 PASS: recall upper bound == 0.75 on the 4-sentence fixture")
