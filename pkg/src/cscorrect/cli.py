"""Command-line surface: correct, train-lm, estimate-distortion, evaluate, serve.

Standard output carries data only; diagnostics go to standard error.  Exit
status is 0 on success, 2 for configuration/input errors (click's usage
convention), 1 for runtime failures, with a single-line `error-class:
message` on stderr.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import evaluate as ev
from .chardata import KnowledgeBaseError
from .config import (
    ConfigError,
    EngineConfig,
    apply_overrides,
    build_engine,
    parse_config_file,
)
from .decoder import DecodeError
from .defaults import load_default_kb, load_default_tables, load_kb_dir
from .distortion import estimate_params, save_params
from .lm import train_ngram

log = logging.getLogger("cscorrect")

_ENGINE_OPTIONS = (
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="Key=value config file; flags below override it."),
    click.option("--kb-dir", default=None, help="Directory with pinyin/shape/tricks TSVs."),
    click.option("--lm", default=None, help="LM backend: ngram:<path> or remote:<host>:<port>."),
    click.option("--lexicon", default=None, help="Extra vocabulary tokens, one per line."),
    click.option("--params", default=None, help="Distortion params TSV."),
    click.option("--tables", default=None, help="Similarity tables TSV."),
    click.option("--beam", type=int, default=None, help="Beam size (default 8)."),
    click.option("--alpha", type=float, default=None, help="Length reward weight (default 2.5)."),
    click.option("--no-length-reward", "length_reward", flag_value=False, default=None,
                 help="Disable the length reward."),
    click.option("--no-faithfulness", "faithfulness", flag_value=False, default=None,
                 help="Disable the faithfulness reward."),
    click.option("--no-trick", "trick_mode", flag_value=False, default=None,
                 help="Disable the one-unrelated-char-per-token allowance."),
    click.option("--cap", type=int, default=None, help="Per-step candidate cap (0 = none)."),
    click.option("--knowledge", default=None, help="LM-only context prefix."),
)


def engine_options(fn):
    for option in reversed(_ENGINE_OPTIONS):
        fn = option(fn)
    return fn


def _load_engine(config_path, **flags):
    cfg = parse_config_file(config_path) if config_path else EngineConfig()
    cfg = apply_overrides(cfg, **flags)
    return build_engine(cfg)


def _fail(kind: str, exc: Exception):
    click.echo(f"{kind}: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log at INFO level to stderr.")
def main(verbose):
    """Chinese spelling correction engine."""
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@engine_options
@click.option("--trace", is_flag=True, help="Emit a JSON score breakdown per line.")
def correct(config_path, trace, **flags):
    """Correct stdin line by line onto stdout."""
    try:
        engine = _load_engine(config_path, **flags)
    except (ConfigError, KnowledgeBaseError, OSError, ValueError) as exc:
        _fail("config-error", exc)
    for raw in sys.stdin:
        line = raw.rstrip("\n")
        if not line:
            click.echo("")
            continue
        try:
            result = engine.correct(line)
        except DecodeError as exc:
            _fail("decode-error", exc)
        if trace:
            click.echo(json.dumps(
                {
                    "output": result.output,
                    "score": result.score,
                    "lm_sum": result.lm_sum,
                    "dm_sum": result.dm_sum,
                    "length_reward_sum": result.length_reward_sum,
                    "steps": [
                        {
                            "token": s.token,
                            "lm": s.lm_logprob,
                            "dm": s.dm_score,
                            "length_reward": s.length_reward,
                            "entropy": s.entropy,
                            "multiplier": s.multiplier,
                        }
                        for s in result.breakdown
                    ],
                },
                ensure_ascii=False,
            ))
        else:
            click.echo(result.output)


@main.command("train-lm")
@click.argument("corpus", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("-n", "--order", type=int, default=5, show_default=True)
@click.option("--lexicon", type=click.Path(exists=True), default=None,
              help="Word list adopted as multi-char tokens.")
def train_lm(corpus, out, order, lexicon):
    """Train a character n-gram model and write it to OUT."""
    try:
        model = train_ngram(corpus, order, lexicon)
        model.save(out)
    except (OSError, ValueError) as exc:
        _fail("train-error", exc)
    click.echo(
        f"model: order={order} alphabet={len(model.alphabet)} lexicon={len(model.lexicon)}",
        err=True,
    )


@main.command("estimate-distortion")
@click.argument("corpus", type=click.Path(exists=True))
@click.argument("out", type=click.Path())
@click.option("--kb-dir", default=None)
def estimate_distortion(corpus, out, kb_dir):
    """Estimate type probabilities from a `source<TAB>target` TSV corpus."""
    kb = load_kb_dir(kb_dir) if kb_dir else load_default_kb()
    tables = load_default_tables()
    pairs = []
    try:
        with open(corpus, encoding="utf-8") as fh:
            for no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise ValueError(f"{corpus}:{no}: expected `source<TAB>target`")
                pairs.append((parts[0], parts[1]))
        params = estimate_params(kb, tables, pairs)
        save_params(params, out)
    except ValueError as exc:
        _fail("estimate-error", exc)
    click.echo(f"estimated over {len(pairs)} sentence pairs", err=True)


@main.command()
@click.argument("dataset", type=click.Path(exists=True))
@click.option("--predictions", type=click.Path(exists=True), default=None,
              help="Predictions file (one per line) when DATASET is source/target only.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Write the metrics JSON here (default stdout).")
@click.option("--tsv", "tsv_path", type=click.Path(), default=None,
              help="Write per-sentence outcomes TSV here.")
@click.option("--figures", "figures_dir", type=click.Path(), default=None,
              help="Render PNG figures into this directory.")
@click.option("--kb-dir", default=None)
def evaluate(dataset, predictions, report_path, tsv_path, figures_dir, kb_dir):
    """Score a `source<TAB>prediction<TAB>target` TSV (or dataset+predictions)."""
    try:
        if predictions:
            raw = ev.load_triples(dataset, prediction_column=False)
            with open(predictions, encoding="utf-8") as fh:
                preds = [line.rstrip("\n") for line in fh]
            if len(preds) != len(raw):
                raise ValueError(
                    f"{len(raw)} dataset rows but {len(preds)} prediction lines"
                )
            raw = [ev.EvalTriple(t.source, p, t.target) for t, p in zip(raw, preds)]
        else:
            raw = ev.load_triples(dataset, prediction_column=True)
    except ValueError as exc:
        _fail("dataset-error", exc)

    kb = load_kb_dir(kb_dir) if kb_dir else load_default_kb()
    tables = load_default_tables()
    triples = ev.normalize_triples(raw)
    triples, dropped = ev.filter_length_mismatch(triples)
    if dropped:
        click.echo(f"dropped {dropped} length-mismatched sentences", err=True)
    report = ev.compute_report(triples, kb, tables)
    payload = report.to_json(indent=2)
    if report_path:
        Path(report_path).write_text(payload + "\n", encoding="utf-8")
    else:
        click.echo(payload)
    if tsv_path:
        with open(tsv_path, "w", encoding="utf-8") as fh:
            fh.write("source\tprediction\ttarget\tcorrected\tmodified\n")
            for t in triples:
                fh.write(
                    f"{t.source}\t{t.prediction}\t{t.target}\t"
                    f"{int(t.prediction == t.target != t.source)}\t"
                    f"{int(t.prediction != t.source)}\n"
                )
    if figures_dir:
        from .report import render_figures

        for path in render_figures(report, triples, figures_dir):
            click.echo(f"wrote {path}", err=True)


@main.command()
@engine_options
@click.option("--bind", default="127.0.0.1:8765", show_default=True,
              help="host:port to listen on.")
def serve(config_path, bind, **flags):
    """Run the line-protocol correction service."""
    try:
        engine = _load_engine(config_path, **flags)
        host, _, port = bind.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"bad bind address {bind!r}")
    except (ConfigError, KnowledgeBaseError, OSError, ValueError) as exc:
        _fail("config-error", exc)
    from .service import serve_forever

    serve_forever(engine, host, int(port))


if __name__ == "__main__":
    main()
