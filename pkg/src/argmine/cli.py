"""Command-line front end.

Subcommands: ingest (corpus -> cached bundle), run (one experiment),
sweep (a config matrix of experiments), evaluate (offline re-scoring of a
predictions file), serve (feedback service + UI).

Exit codes: 0 success, 1 partial failure (some variants/runs failed),
2 usage or input error.
"""

from __future__ import annotations

import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click
import yaml

from . import __version__
from .corpus import CorpusFormatError, get_split, load_bundle, load_corpus, save_bundle
from .inference import ModelConfig
from .pipeline import ExperimentConfig, ExperimentFailed, run_experiment
from .predictions import PredictionsFormatError, read_predictions
from .prompts import ConfigError, TaskKind
from .reporting import (
    aggregate_to_obj,
    config_hash,
    evaluate_run,
    flat_table_rows,
    render_aggregate_text,
    render_text_report,
    report_to_obj,
    save_json,
    TABLE_COLUMNS,
)
from .spelling import HttpNormalizer, identity_normalizer


def _fail(message: str, code: int = 2) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def resolve_task(task: str, setup: str) -> TaskKind:
    if task == "segmentation":
        return TaskKind.SEGMENTATION
    if setup == "joint" or task == "both":
        return TaskKind.TYPE_AND_QUALITY
    return TaskKind.TYPE_ONLY if task == "type" else TaskKind.QUALITY_ONLY


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Local argument-mining workbench."""


# --- ingest -----------------------------------------------------------------


@main.command()
@click.option("--essays", "essay_dir", required=True, type=click.Path(path_type=Path))
@click.option("--annotations", required=True, type=click.Path(path_type=Path))
@click.option("--split-manifest", type=click.Path(path_type=Path), default=None)
@click.option("--normalizer-url", default=None, help="Spelling-correction service URL (plain-text contract).")
@click.option("--out", "out_path", required=True, type=click.Path(path_type=Path))
def ingest(essay_dir: Path, annotations: Path, split_manifest: Path | None,
           normalizer_url: str | None, out_path: Path) -> None:
    """Load the corpus and write a cached bundle."""
    if not essay_dir.is_dir():
        _fail(f"essay directory not found: {essay_dir}")
    if not annotations.is_file():
        _fail(f"annotation table not found: {annotations}")
    if split_manifest is not None and not split_manifest.is_file():
        _fail(f"split manifest not found: {split_manifest}")
    normalizer = HttpNormalizer(normalizer_url) if normalizer_url else None
    try:
        splits, report = load_corpus(essay_dir, annotations, split_manifest, normalizer=normalizer)
    except CorpusFormatError as exc:
        _fail(str(exc))
    for split in splits:
        essays, spans = report.split_counts[split.name]
        click.echo(f"{split.name}: {essays:,} essays / {spans:,} arguments")
    if report.row_errors:
        click.echo(f"row errors: {len(report.row_errors)}")
        for discourse_id, reason in report.row_errors[:20]:
            click.echo(f"  {discourse_id}: {reason}")
    if report.orphaned_rows:
        click.echo(f"orphaned annotation rows (essay file missing): {len(report.orphaned_rows)}")
    if report.degenerate_spans:
        click.echo(f"spans dropped as degenerate after normalization: {len(report.degenerate_spans)}")
    for warning in report.warnings[:10]:
        click.echo(f"warning: {warning}")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(splits, out_path)
    click.echo(f"bundle written to {out_path}")
    if not report.ok:
        sys.exit(1)


# --- shared experiment plumbing ------------------------------------------------


def _load_config_file(path: Path) -> dict:
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        return yaml.safe_load(text) or {}
    return json.loads(text)


def _build_experiment(options: dict) -> ExperimentConfig:
    import os

    task = resolve_task(options.get("task", "both"), options.get("setup", "joint"))
    mode = str(options.get("mode", "few_shot")).replace("-", "_")
    model = ModelConfig(
        endpoint=ModelConfig.resolve_endpoint(options.get("endpoint")),
        model=options.get("model", ModelConfig().model),
        api=options.get("api", "ollama"),
        temperature=float(options.get("temperature", 0.0)),
        max_output_tokens=int(options.get("max_output_tokens", 4096)),
        timeout=float(options.get("timeout", 120.0)),
        auth_token=options.get("auth_token") or os.environ.get("ARGMINE_AUTH_TOKEN"),
    )
    return ExperimentConfig(
        task=task,
        model=model,
        segmentation=options.get("segmentation", "inferred"),
        mode=mode,
        shots=int(options.get("shots", 0)),
        runs=int(options.get("runs", 3)),
        parallelism=int(options.get("parallelism", 4)),
        seed=options.get("seed"),
    )


def _execute_experiment(
    cfg: ExperimentConfig,
    corpus_path: Path,
    split_name: str,
    shot_split_name: str,
    out_dir: Path,
) -> dict:
    splits = load_bundle(corpus_path)
    split = get_split(splits, split_name)
    shot_split = None
    if cfg.shots > 0:
        shot_split = get_split(splits, shot_split_name)
    out_dir.mkdir(parents=True, exist_ok=True)

    artifacts: list[str] = []

    def on_run_done(result) -> None:
        i = result.predictions.run_index
        predictions_path = out_dir / f"predictions_run{i}.jsonl"
        from .predictions import write_predictions

        write_predictions(result.predictions, predictions_path)
        obj = report_to_obj(result.report)
        save_json(obj, out_dir / f"report_run{i}.json")
        (out_dir / f"report_run{i}.txt").write_text(render_text_report(obj), encoding="utf-8")
        artifacts.extend(
            [f"predictions_run{i}.jsonl", f"report_run{i}.json", f"report_run{i}.txt"]
        )
        click.echo(
            f"run {i}: discards={result.report.discards.total} "
            f"transport_failures={result.report.discards.transport_failures}"
        )

    result = run_experiment(split, cfg, shot_split=shot_split, on_run_done=on_run_done)
    agg_obj = aggregate_to_obj(result.aggregate)
    save_json(agg_obj, out_dir / "aggregate.json")
    (out_dir / "aggregate.txt").write_text(render_aggregate_text(agg_obj), encoding="utf-8")
    import csv

    with (out_dir / "report_table.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        writer.writerows(flat_table_rows(out_dir.name, agg_obj))
    artifacts.extend(["aggregate.json", "aggregate.txt", "report_table.csv"])

    manifest = {
        "tool": f"argmine {__version__}",
        "created": datetime.now(timezone.utc).isoformat(),
        "config": cfg.config_echo(),
        "config_hash": config_hash(cfg.config_echo()),
        "inputs": {
            "corpus": str(corpus_path),
            "corpus_sha256": _sha256(corpus_path),
            "split": split_name,
            "shot_split": shot_split_name if cfg.shots > 0 else None,
        },
        "artifacts": artifacts,
    }
    save_json(manifest, out_dir / "manifest.json")
    return agg_obj


_RUN_OPTIONS = [
    click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path)),
    click.option("--split", "split_name", default="test", show_default=True),
    click.option("--shot-split", "shot_split_name", default="train", show_default=True),
    click.option("--task", type=click.Choice(["segmentation", "type", "quality", "both"]), default=None),
    click.option("--setup", type=click.Choice(["individual", "joint"]), default=None),
    click.option("--segmentation", type=click.Choice(["gold", "inferred"]), default=None),
    click.option("--mode", type=click.Choice(["few-shot", "fine-tuned"]), default=None),
    click.option("--shots", type=int, default=None),
    click.option("--model", default=None),
    click.option("--endpoint", default=None),
    click.option("--api", type=click.Choice(["ollama", "openai-chat"]), default=None),
    click.option("--runs", type=int, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--parallelism", type=int, default=None),
    click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None),
    click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path)),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command(name="run")
@_with_options(_RUN_OPTIONS)
def run_cmd(corpus_path, split_name, shot_split_name, task, setup, segmentation, mode,
            shots, model, endpoint, api, runs, seed, parallelism, config_path, out_dir):
    """Run one experiment and write per-run + aggregate reports."""
    options = _load_config_file(config_path) if config_path else {}
    flags = {
        "task": task, "setup": setup, "segmentation": segmentation, "mode": mode,
        "shots": shots, "model": model, "endpoint": endpoint, "api": api,
        "runs": runs, "seed": seed, "parallelism": parallelism,
    }
    options.update({k: v for k, v in flags.items() if v is not None})
    try:
        cfg = _build_experiment(options)
        _execute_experiment(cfg, corpus_path, split_name, shot_split_name, out_dir)
    except (ConfigError, CorpusFormatError, KeyError, ValueError) as exc:
        _fail(str(exc))
    except ExperimentFailed as exc:
        _fail(str(exc), code=1)
    click.echo(f"experiment artifacts in {out_dir}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def sweep(config_path: Path, corpus_path: Path | None, out_dir: Path) -> None:
    """Run every variant in a sweep config; emit the flat report table."""
    sweep_config = _load_config_file(config_path)
    defaults = sweep_config.get("defaults", {})
    variants = sweep_config.get("variants", [])
    if not variants:
        _fail("sweep config lists no variants")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    failures: list[tuple[str, str]] = []
    for i, variant in enumerate(variants):
        options = dict(defaults)
        options.update(variant)
        name = options.pop("name", f"variant{i}")
        corpus = Path(options.pop("corpus", "")) if options.get("corpus") else corpus_path
        if corpus is None:
            failures.append((name, "no corpus given (flag or config)"))
            click.echo(f"[{name}] failed: no corpus")
            continue
        split_name = options.pop("split", "test")
        shot_split_name = options.pop("shot_split", "train")
        try:
            cfg = _build_experiment(options)
            agg_obj = _execute_experiment(cfg, corpus, split_name, shot_split_name, out_dir / name)
            rows.extend(flat_table_rows(name, agg_obj))
            click.echo(f"[{name}] done")
        except (ConfigError, CorpusFormatError, ExperimentFailed, KeyError, ValueError) as exc:
            failures.append((name, str(exc)))
            click.echo(f"[{name}] failed: {exc}")
    import csv

    with (out_dir / "report_table.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    save_json(
        {
            "variants_total": len(variants),
            "variants_failed": len(failures),
            "failures": [{"variant": n, "error": e} for n, e in failures],
        },
        out_dir / "sweep_summary.json",
    )
    click.echo(f"flat table: {out_dir / 'report_table.csv'}")
    if failures:
        sys.exit(1)


@main.command()
@click.option("--predictions", "predictions_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--split", "split_name", default="test", show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def evaluate(predictions_path: Path, corpus_path: Path, split_name: str, out_dir: Path) -> None:
    """Recompute all metrics offline from a stored predictions file."""
    try:
        run = read_predictions(predictions_path)
    except PredictionsFormatError as exc:
        _fail(f"{predictions_path}: {exc}")
    splits = load_bundle(corpus_path)
    split = get_split(splits, split_name)
    report = evaluate_run(split, run)
    obj = report_to_obj(report)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_json(obj, out_dir / f"report_run{run.run_index}.json")
    (out_dir / f"report_run{run.run_index}.txt").write_text(
        render_text_report(obj), encoding="utf-8"
    )
    click.echo(render_text_report(obj))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--endpoint", default=None, help="Inference server URL (env ARGMINE_ENDPOINT overrides).")
@click.option("--model", default=None)
@click.option("--api", type=click.Choice(["ollama", "openai-chat"]), default="ollama")
@click.option("--extra-model", "extra_models", multiple=True)
@click.option("--mode", type=click.Choice(["few-shot", "fine-tuned"]), default="few-shot")
@click.option("--shots", type=int, default=0, show_default=True)
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), default=None,
              help="Corpus bundle supplying shot examples (needed when --shots > 0).")
@click.option("--shot-split", "shot_split_name", default="train", show_default=True)
@click.option("--normalizer-url", default=None)
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path), default=None)
@click.option("--parallelism", type=int, default=4, show_default=True)
def serve(host, port, endpoint, model, api, extra_models, mode, shots, corpus_path,
          shot_split_name, normalizer_url, ui_dir, parallelism) -> None:
    """Serve the analyze API and the browser UI."""
    import uvicorn

    from .server import ServerSettings, create_app, probe_model_endpoint

    model_config = ModelConfig(
        endpoint=ModelConfig.resolve_endpoint(endpoint),
        model=model or ModelConfig().model,
        api=api,
    )
    shot_split = None
    if shots > 0:
        if corpus_path is None:
            _fail("--shots > 0 requires --corpus for shot examples")
        shot_split = get_split(load_bundle(corpus_path), shot_split_name)
    settings = ServerSettings(
        model=model_config,
        extra_models=list(extra_models),
        shots=shots,
        mode=mode.replace("-", "_"),
        parallelism=parallelism,
        shot_split=shot_split,
        normalizer=HttpNormalizer(normalizer_url) if normalizer_url else identity_normalizer,
        ui_dir=ui_dir,
    )
    if not probe_model_endpoint(settings):
        click.echo(
            f"warning: inference endpoint {model_config.endpoint} unreachable; "
            "health will report degraded",
            err=True,
        )
    app = create_app(settings)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    except OSError as exc:
        _fail(f"cannot bind {host}:{port}: {exc}")


if __name__ == "__main__":
    main()
