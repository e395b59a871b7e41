"""Engine configuration: a flat key=value file with flag overrides.

Recognized keys mirror the CLI flags:

    kb_dir = /path/to/kb          # pinyin.tsv / shape.tsv / tricks.tsv
    tables = /path/to/tables.tsv  # similarity tables, packaged default if unset
    params = /path/to/params.tsv  # distortion params, Table defaults if unset
    lm = ngram:/path/model.txt    # or remote:host:port
    lexicon = /path/words.txt     # extra vocabulary tokens
    beam = 8
    alpha = 2.5
    length_reward = true
    faithfulness = true
    trick_mode = true
    cap = 0                       # 0 = uncapped
    knowledge =                   # LM-only context prefix
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .chardata import KnowledgeBase
from .decoder import DecoderConfig, Engine
from .defaults import load_default_kb, load_default_tables, load_kb_dir
from .distortion import DistortionParams, load_params, load_similarity_tables
from .lexicon import Vocabulary, build_index
from .lm import LMBackend, NGramBackend, NGramModel, RemoteBackend


class ConfigError(Exception):
    pass


@dataclass
class EngineConfig:
    kb_dir: str | None = None
    tables: str | None = None
    params: str | None = None
    lm: str | None = None
    lexicon: str | None = None
    beam: int = 8
    alpha: float = 2.5
    length_reward: bool = True
    faithfulness: bool = True
    trick_mode: bool = True
    cap: int = 0
    knowledge: str = ""

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(
            beam_size=self.beam,
            alpha=self.alpha,
            length_reward_enabled=self.length_reward,
            faithfulness_reward_enabled=self.faithfulness,
            trick_mode=self.trick_mode,
            candidate_cap=self.cap or None,
            knowledge_prefix=self.knowledge,
        )


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def parse_config_file(path) -> EngineConfig:
    cfg = EngineConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected `key = value`")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip('"')
        if not hasattr(cfg, key):
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        current = getattr(cfg, key)
        try:
            if isinstance(current, bool):
                setattr(cfg, key, _BOOL[value.lower()])
            elif isinstance(current, int):
                setattr(cfg, key, int(value))
            elif isinstance(current, float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}:{no}: bad value for {key}: {value!r}") from exc
    return cfg


def apply_overrides(cfg: EngineConfig, **overrides) -> EngineConfig:
    """Flags win over file values; None/missing overrides keep the file value."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **updates)


def _make_backend(spec: str) -> tuple[LMBackend, NGramModel | None]:
    kind, _, rest = spec.partition(":")
    if kind == "ngram":
        if not rest:
            raise ConfigError("ngram backend needs a model path: ngram:/path")
        model = NGramModel.load(rest)
        return NGramBackend(model), model
    if kind == "remote":
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError("remote backend spec must be remote:host:port")
        return RemoteBackend(host, int(port)), None
    raise ConfigError(f"unknown LM backend kind {kind!r} (expected ngram: or remote:)")


def build_engine(cfg: EngineConfig) -> Engine:
    """Assemble a decoding engine from the configuration."""
    if not cfg.lm:
        raise ConfigError("exactly one LM backend must be configured (lm = ...)")
    kb: KnowledgeBase = load_kb_dir(cfg.kb_dir) if cfg.kb_dir else load_default_kb()
    tables = load_similarity_tables(cfg.tables) if cfg.tables else load_default_tables()
    params = load_params(cfg.params) if cfg.params else DistortionParams.defaults()
    backend, model = _make_backend(cfg.lm)

    texts: list[str] = []
    seen: set[str] = set()

    def push(token: str):
        if token and token not in seen:
            seen.add(token)
            texts.append(token)

    if model is not None:
        for char in model.alphabet:
            push(char)
        for word in model.lexicon:
            push(word)
    if cfg.lexicon:
        with open(cfg.lexicon, encoding="utf-8") as fh:
            for line in fh:
                push(line.strip())
    if not texts:
        raise ConfigError("empty vocabulary: provide a lexicon or an n-gram model")
    vocab = Vocabulary(texts)
    index = build_index(vocab, kb, tables)
    return Engine(
        kb=kb,
        tables=tables,
        params=params,
        vocab=vocab,
        index=index,
        backend=backend,
        config=cfg.decoder_config(),
    )
