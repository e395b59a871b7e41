"""Token-lattice beam search over the language model and the channel model.

Each step extends a partial output with one vocabulary token whose
characters are related to the aligned input span.  The step score is

    score += lm_logprob + m * (distortion_sum + alpha * (len(token) - 1))

where m = 1 + normalized next-token entropy when the faithfulness reward
is on (else 1), and the alpha term is the length reward keeping
multi-character tokens competitive.  Candidates of different character
lengths share one beam and compete on raw score; decoding finishes when
every beam slot has consumed the whole input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .chardata import KnowledgeBase
from .distortion import DistortionParams, SimilarityTables
from .lexicon import (
    InvertedIndex,
    NEG_INF,
    Vocabulary,
    retrieve_candidates,
    token_distortion_score,
)
from .lm import LMBackend, LMQuery, next_token_logprobs

log = logging.getLogger(__name__)


class DecodeError(Exception):
    pass


@dataclass(frozen=True)
class DecoderConfig:
    beam_size: int = 8
    alpha: float = 2.5
    length_reward_enabled: bool = True
    faithfulness_reward_enabled: bool = True
    trick_mode: bool = True
    candidate_cap: int | None = None
    knowledge_prefix: str = ""
    early_exit: bool = False

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.candidate_cap is not None and self.candidate_cap < 1:
            raise ValueError("candidate_cap must be >= 1")


@dataclass(frozen=True)
class StepTrace:
    token: str
    lm_logprob: float
    dm_score: float
    length_reward: float
    entropy: float
    multiplier: float
    step_delta: float


@dataclass(frozen=True)
class BeamCandidate:
    tokens: tuple[str, ...]
    char_pos: int
    score: float
    finished: bool
    lm_sum: float = 0.0
    dm_sum: float = 0.0
    length_reward_sum: float = 0.0
    trace: tuple[StepTrace, ...] = ()

    def output(self) -> str:
        return "".join(self.tokens)

    def sort_key(self):
        # Higher score first, then fewer tokens, then lexicographic output.
        return (-self.score, len(self.tokens), self.output())


@dataclass(frozen=True)
class CorrectionResult:
    output: str
    score: float
    lm_sum: float
    dm_sum: float
    length_reward_sum: float
    breakdown: tuple[StepTrace, ...]


@dataclass
class Engine:
    """Everything one decode needs; shareable across concurrent calls."""

    kb: KnowledgeBase
    tables: SimilarityTables
    params: DistortionParams
    vocab: Vocabulary
    index: InvertedIndex
    backend: LMBackend
    config: DecoderConfig = field(default_factory=DecoderConfig)

    def correct(self, x: str, cfg: DecoderConfig | None = None) -> CorrectionResult:
        return correct(self, x, cfg or self.config)

    def correct_batch(self, sentences, cfg: DecoderConfig | None = None, **kw):
        return correct_batch(self, sentences, cfg or self.config, **kw)


def step_score(
    prev: BeamCandidate,
    token: str,
    lm_logprob: float,
    entropy: float,
    dm_score: float,
    cfg: DecoderConfig,
) -> float:
    """Score of prev extended by the token, per the reward configuration."""
    length_reward = cfg.alpha * (len(token) - 1) if cfg.length_reward_enabled else 0.0
    multiplier = (1.0 + entropy) if cfg.faithfulness_reward_enabled else 1.0
    return prev.score + lm_logprob + multiplier * (dm_score + length_reward)


def _extend(
    prev: BeamCandidate,
    token: str,
    lm_logprob: float,
    entropy: float,
    dm_score: float,
    input_len: int,
    cfg: DecoderConfig,
) -> BeamCandidate:
    length_reward = cfg.alpha * (len(token) - 1) if cfg.length_reward_enabled else 0.0
    multiplier = (1.0 + entropy) if cfg.faithfulness_reward_enabled else 1.0
    new_score = prev.score + lm_logprob + multiplier * (dm_score + length_reward)
    char_pos = prev.char_pos + len(token)
    trace = prev.trace + (
        StepTrace(
            token=token,
            lm_logprob=lm_logprob,
            dm_score=dm_score,
            length_reward=length_reward,
            entropy=entropy,
            multiplier=multiplier,
            step_delta=new_score - prev.score,
        ),
    )
    return BeamCandidate(
        tokens=prev.tokens + (token,),
        char_pos=char_pos,
        score=new_score,
        finished=char_pos == input_len,
        lm_sum=prev.lm_sum + lm_logprob,
        dm_sum=prev.dm_sum + dm_score,
        length_reward_sum=prev.length_reward_sum + length_reward,
        trace=trace,
    )


def _scored_candidates(
    engine: Engine, x: str, pos: int, cfg: DecoderConfig
) -> list[tuple[str, float]]:
    """(token text, distortion score) usable at pos, deterministic order.

    The identity character is always present even when the vocabulary or
    the candidate cap would drop it, so the output can copy the input.
    """
    ids = retrieve_candidates(
        engine.index, engine.vocab, engine.kb, engine.tables, x, pos,
        trick_mode=cfg.trick_mode,
    )
    texts = {engine.vocab.text(i) for i in ids}
    texts.add(x[pos])
    scored = []
    for text in texts:
        dm = token_distortion_score(engine.kb, engine.tables, engine.params, x, pos, text)
        if dm == NEG_INF and text != x[pos]:
            continue
        scored.append((text, dm))
    scored.sort(key=lambda item: (-item[1], item[0]))
    if cfg.candidate_cap is not None:
        kept = scored[: cfg.candidate_cap]
        if not any(t == x[pos] for t, _ in kept):
            kept.append(next(item for item in scored if item[0] == x[pos]))
        scored = kept
    return scored


def correct(engine: Engine, x: str, cfg: DecoderConfig | None = None) -> CorrectionResult:
    """Beam-decode one sentence into its best same-length correction."""
    if cfg is None:
        cfg = engine.config
    if not x:
        raise DecodeError("empty input")

    # Candidates depend only on the input position; compute once per call.
    position_candidates: dict[int, list[tuple[str, float]]] = {}

    def candidates_at(pos: int) -> list[tuple[str, float]]:
        if pos not in position_candidates:
            position_candidates[pos] = _scored_candidates(engine, x, pos, cfg)
        return position_candidates[pos]

    beam = [BeamCandidate(tokens=(), char_pos=0, score=0.0, finished=False)]
    while not all(c.finished for c in beam):
        pool: list[BeamCandidate] = [c for c in beam if c.finished]
        for cand in beam:
            if cand.finished:
                continue
            step = candidates_at(cand.char_pos)
            if not step:
                raise DecodeError(f"no candidates at position {cand.char_pos}")
            query = LMQuery(
                knowledge_prefix=cfg.knowledge_prefix,
                token_prefix=cand.tokens,
                candidates=tuple(text for text, _ in step),
            )
            response = next_token_logprobs(engine.backend, query)
            for text, dm_score in step:
                pool.append(
                    _extend(
                        cand,
                        text,
                        response.logprobs[text],
                        response.entropy,
                        dm_score,
                        len(x),
                        cfg,
                    )
                )
        pool.sort(key=BeamCandidate.sort_key)
        beam = pool[: cfg.beam_size]
        if cfg.early_exit:
            finished = [c for c in beam if c.finished]
            if finished:
                best = min(finished, key=BeamCandidate.sort_key)
                bound = 2.0 * cfg.alpha if cfg.length_reward_enabled else 0.0
                if all(
                    c.finished
                    or c.score + bound * max(len(x) - c.char_pos - 1, 0) < best.score
                    for c in beam
                ):
                    beam = [best]
                    break

    best = min(beam, key=BeamCandidate.sort_key)
    return CorrectionResult(
        output=best.output(),
        score=best.score,
        lm_sum=best.lm_sum,
        dm_sum=best.dm_sum,
        length_reward_sum=best.length_reward_sum,
        breakdown=best.trace,
    )


def correct_batch(
    engine: Engine,
    sentences,
    cfg: DecoderConfig | None = None,
    strict: bool = False,
) -> list[CorrectionResult | None]:
    """Order-preserving map of correct() over the sentences.

    Item failures are independent, not fatal: a failing sentence yields
    None in its slot and a logged warning.  strict=True raises instead.
    """
    results: list[CorrectionResult | None] = []
    for i, sentence in enumerate(sentences):
        try:
            results.append(correct(engine, sentence, cfg))
        except DecodeError as exc:
            if strict:
                raise
            log.warning("item %d failed: %s", i, exc)
            results.append(None)
    return results


def score_path(
    engine: Engine, x: str, tokens, cfg: DecoderConfig | None = None
) -> CorrectionResult:
    """Replay a fixed token segmentation through the scorer.

    Useful for instrumentation: the raw lm/dm/length-reward sums of the
    same path can be compared across configurations (e.g. with and without
    a knowledge prefix).
    """
    if cfg is None:
        cfg = engine.config
    cand = BeamCandidate(tokens=(), char_pos=0, score=0.0, finished=False)
    for token in tokens:
        if cand.char_pos + len(token) > len(x):
            raise DecodeError(f"path overflows input at {token!r}")
        dm = token_distortion_score(
            engine.kb, engine.tables, engine.params, x, cand.char_pos, token
        )
        response = next_token_logprobs(
            engine.backend,
            LMQuery(
                knowledge_prefix=cfg.knowledge_prefix,
                token_prefix=cand.tokens,
                candidates=(token,),
            ),
        )
        cand = _extend(
            cand, token, response.logprobs[token], response.entropy, dm, len(x), cfg
        )
    if not cand.finished:
        raise DecodeError("path does not cover the whole input")
    return CorrectionResult(
        output=cand.output(),
        score=cand.score,
        lm_sum=cand.lm_sum,
        dm_sum=cand.dm_sum,
        length_reward_sum=cand.length_reward_sum,
        breakdown=cand.trace,
    )
