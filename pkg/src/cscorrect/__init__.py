"""Chinese spelling correction by language-model-times-channel scoring."""

from .chardata import (
    CharacterRecord,
    KnowledgeBase,
    KnowledgeBaseError,
    PinyinSyllable,
    decompose_pinyin,
    load_knowledge_base,
    lookup,
)
from .decoder import (
    BeamCandidate,
    CorrectionResult,
    DecodeError,
    DecoderConfig,
    Engine,
    correct,
    correct_batch,
    score_path,
    step_score,
)
from .distortion import (
    DistortionParams,
    DistortionType,
    SimilarityTables,
    classify,
    default_similarity_tables,
    distortion_logprob,
    estimate_params,
    pinyin_similar,
    shape_similarity,
)
from .lexicon import (
    InvertedIndex,
    Token,
    Vocabulary,
    build_index,
    retrieve_candidates,
    token_distortion_score,
)
from .lm import (
    LMQuery,
    LMResponse,
    NGramBackend,
    NGramModel,
    RemoteBackend,
    flatten_prefix,
    next_token_logprobs,
    train_ngram,
)

__version__ = "0.1.0"
