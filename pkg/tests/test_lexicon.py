import math
import random

import pytest

from cscorrect.distortion import DistortionParams, DistortionType
from cscorrect.lexicon import (
    NEG_INF,
    Vocabulary,
    brute_force_candidates,
    build_index,
    entries_for_token,
    retrieve_candidates,
    token_distortion_score,
)


def ids_to_texts(vocab, ids):
    return {vocab.text(i) for i in ids}


class TestVocabulary:
    def test_dense_ids(self):
        vocab = Vocabulary(["机", "机器", "器"])
        assert [t.id for t in vocab.tokens] == [0, 1, 2]
        assert vocab.max_token_len == 2
        assert vocab.id_of("机器") == 1

    def test_duplicates_dropped(self):
        vocab = Vocabulary(["机", "机"])
        assert len(vocab) == 1

    def test_empty_token_rejected(self):
        with pytest.raises(ValueError):
            Vocabulary(["机", ""])

    def test_from_file(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("机\n机器\n\n器\n", encoding="utf-8")
        assert len(Vocabulary.from_file(path)) == 3


class TestIndexEntries:
    def test_entry_shapes(self, kb, tables):
        entries = entries_for_token(kb, tables, "机器")
        keys = {(e.position_in_token, e.key, e.dtype) for e in entries}
        assert (0, "ji", DistortionType.SAME_PINYIN) in keys
        assert (1, "qi", DistortionType.SAME_PINYIN) in keys
        assert (0, "仉", DistortionType.SIMILAR_SHAPE) in keys
        # j expands to q/x/z with the same final
        assert (0, "qi", DistortionType.SIMILAR_PINYIN) in keys

    def test_non_chinese_position_only_exact(self, kb, tables):
        entries = entries_for_token(kb, tables, "A机")
        position0 = [e for e in entries if e.position_in_token == 0]
        assert position0 == [e for e in position0 if e.key == "A"]
        assert len(position0) == 1

    def test_empty_vocab_empty_index(self, kb, tables):
        index = build_index(Vocabulary([]), kb, tables)
        assert len(index) == 0


class TestRetrieval:
    def test_identity_retrieval(self, kb, tables):
        vocab = Vocabulary(["机"])
        index = build_index(vocab, kb, tables)
        ids = retrieve_candidates(index, vocab, kb, tables, "机", 0)
        assert ids_to_texts(vocab, ids) == {"机"}

    def test_figure_example(self, kb, tables):
        vocab = Vocabulary(["施工单位", "施", "工", "单", "位"])
        index = build_index(vocab, kb, tables)
        ids = retrieve_candidates(index, vocab, kb, tables, "师公单位", 0, trick_mode=False)
        assert "施工单位" in ids_to_texts(vocab, ids)

    def test_out_of_range(self, kb, tables):
        vocab = Vocabulary(["机"])
        index = build_index(vocab, kb, tables)
        with pytest.raises(IndexError):
            retrieve_candidates(index, vocab, kb, tables, "机", 1)

    def test_tokens_fit_remaining_length(self, kb, tables):
        vocab = Vocabulary(["机", "机器", "施工单位"])
        index = build_index(vocab, kb, tables)
        ids = retrieve_candidates(index, vocab, kb, tables, "机器", 1)
        assert all(len(vocab.text(i)) <= 1 for i in ids)

    def test_trick_retrieves_one_unrelated(self, kb, tables):
        # 能 is unrelated to 器 at position 1, related (identical) at 0
        vocab = Vocabulary(["机能"])
        index = build_index(vocab, kb, tables)
        with_trick = retrieve_candidates(index, vocab, kb, tables, "机器", 0, trick_mode=True)
        without = retrieve_candidates(index, vocab, kb, tables, "机器", 0, trick_mode=False)
        assert ids_to_texts(vocab, with_trick) == {"机能"}
        assert without == set()

    def test_trick_never_crosses_non_chinese(self, kb, tables):
        vocab = Vocabulary(["机器"])
        index = build_index(vocab, kb, tables)
        # input has a recordless char where the token has 器
        ids = retrieve_candidates(index, vocab, kb, tables, "机A", 0, trick_mode=True)
        assert ids == set()
        oracle = brute_force_candidates(vocab, kb, tables, "机A", 0, trick_mode=True)
        assert oracle == set()

    @pytest.mark.parametrize("trick", [True, False])
    def test_equivalence_with_brute_force(self, kb, tables, trick):
        rng = random.Random(7)
        chars = list(kb.records)
        texts = set()
        while len(texts) < 60:
            length = rng.choice([1, 1, 1, 2, 2, 3, 4])
            texts.add("".join(rng.choice(chars) for _ in range(length)))
        texts |= {"A", "A机"}
        vocab = Vocabulary(sorted(texts))
        index = build_index(vocab, kb, tables)
        for _ in range(25):
            n = rng.randint(1, 8)
            x = "".join(rng.choice(chars + ["A", ",", "B"]) for _ in range(n))
            for pos in range(len(x)):
                fast = retrieve_candidates(index, vocab, kb, tables, x, pos, trick_mode=trick)
                slow = brute_force_candidates(vocab, kb, tables, x, pos, trick_mode=trick)
                assert fast == slow, (x, pos)

    def test_build_deterministic_and_idempotent(self, kb, tables):
        vocab = Vocabulary(["机", "机器", "施工单位"])
        a = build_index(vocab, kb, tables)
        b = build_index(vocab, kb, tables)
        assert a._map == b._map


class TestTokenDistortionScore:
    def test_all_identical(self, kb, tables, params):
        score = token_distortion_score(kb, tables, params, "机器", 0, "机器")
        assert score == pytest.approx(2 * math.log(0.962))

    def test_same_pinyin_pair(self, kb, tables, params):
        score = token_distortion_score(kb, tables, params, "师公", 0, "施工")
        assert score == pytest.approx(2 * math.log(0.023))

    def test_matches_scalar_oracle(self, kb, tables, params):
        from cscorrect.distortion import classify, distortion_logprob

        rng = random.Random(3)
        chars = list(kb.records)
        for _ in range(50):
            x = "".join(rng.choice(chars) for _ in range(4))
            token = "".join(rng.choice(chars) for _ in range(rng.randint(1, 3)))
            pos = rng.randint(0, 4 - len(token))
            expected = 0.0
            unrelated = 0
            dead = False
            for r, c in enumerate(token):
                dtype = classify(kb, tables, c, x[pos + r])
                if dtype is DistortionType.UNRELATED:
                    unrelated += 1
                expected += distortion_logprob(params, dtype)
            if unrelated > 1:
                dead = True
            got = token_distortion_score(kb, tables, params, x, pos, token)
            if dead:
                assert got == NEG_INF
            else:
                assert got == pytest.approx(expected)

    def test_single_unrelated_pays_trick(self, kb, tables, params):
        score = token_distortion_score(kb, tables, params, "机器", 0, "机能")
        assert score == pytest.approx(math.log(0.962) - 15.0)

    def test_two_unrelated_is_dead(self, kb, tables, params):
        score = token_distortion_score(kb, tables, params, "机器", 0, "能能")
        assert score == NEG_INF

    def test_retrieved_tokens_score_finite(self, kb, tables, params):
        rng = random.Random(11)
        chars = list(kb.records)
        texts = {"".join(rng.choice(chars) for _ in range(rng.choice([1, 2]))) for _ in range(40)}
        vocab = Vocabulary(sorted(texts))
        index = build_index(vocab, kb, tables)
        x = "".join(rng.choice(chars) for _ in range(6))
        for pos in range(len(x)):
            for token_id in retrieve_candidates(index, vocab, kb, tables, x, pos, trick_mode=False):
                score = token_distortion_score(kb, tables, params, x, pos, vocab.text(token_id))
                assert score > NEG_INF

    def test_overflow_raises(self, kb, tables, params):
        with pytest.raises(IndexError):
            token_distortion_score(kb, tables, params, "机", 0, "机器")


def test_index_example_on_shipped_kb():
    # token 机构: pinyin keys at both positions, a confusable-syllable key
    # from the velar rule, and the shape partner of 机
    from cscorrect.defaults import load_default_kb, load_default_tables

    kb = load_default_kb()
    tables = load_default_tables()
    entries = entries_for_token(kb, tables, "机构")
    keys = {(e.position_in_token, e.key, e.dtype) for e in entries}
    assert (0, "ji", DistortionType.SAME_PINYIN) in keys
    assert (1, "gou", DistortionType.SAME_PINYIN) in keys
    assert (1, "kou", DistortionType.SIMILAR_PINYIN) in keys
    assert (0, "仉", DistortionType.SIMILAR_SHAPE) in keys
