"""Turn a run's predictions into an EvalReport, and serialize reports.

Offline and online evaluation share this code path byte-for-byte: a stored
predictions file plus the corpus reproduces exactly the report the producing
run emitted. Serialized percentages are rounded to two decimals, half-up.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .corpus import AnnotatedEssay, CorpusSplit
from .labels import ARG_TYPE_NAMES, QUALITY_NAMES
from .metrics import (
    AggregateReport,
    ClassReport,
    ContractError,
    DiscardStats,
    EvalReport,
    LabelTally,
    TagTally,
    bio_tags_from_starts,
    match_spans,
    round2,
)
from .predictions import RunPredictions
from .prompts import TaskKind

REPORT_KIND = "argmine-report"
AGGREGATE_KIND = "argmine-aggregate-report"


def config_hash(config: dict) -> str:
    """Stable fingerprint of a config echo, ignoring per-run fields."""
    stripped = {k: v for k, v in config.items() if k not in ("run_index", "seed")}
    blob = json.dumps(stripped, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _gold_view(annotated: AnnotatedEssay):
    ranges = [(s.start_token, s.end_token) for s in annotated.spans]
    types = [s.arg_type.value for s in annotated.spans]
    qualities = [s.quality.value for s in annotated.spans]
    return ranges, types, qualities


def evaluate_run(split: CorpusSplit, run: RunPredictions) -> EvalReport:
    """Score one run of predictions against the gold split.

    Essays without a usable prediction (segmentation discard, fine-tuned
    classification discard, transport failure) score as fully unmatched:
    every gold span lands in Echec and every gold BIO tag counts as a miss,
    so discards can only lower the numbers.
    """
    task = TaskKind(run.config["task"])
    inferred = task is TaskKind.SEGMENTATION or run.config.get("segmentation") == "inferred"
    want_type = task in (TaskKind.TYPE_ONLY, TaskKind.TYPE_AND_QUALITY)
    want_quality = task in (TaskKind.QUALITY_ONLY, TaskKind.TYPE_AND_QUALITY)

    by_id = run.by_id()
    tag_tally = TagTally()
    type_tally = LabelTally(universe=list(ARG_TYPE_NAMES))
    quality_tally = LabelTally(universe=list(QUALITY_NAMES))
    discards = DiscardStats()
    intersection_tokens = 0
    total_tokens = 0
    predicted_spans_total = 0
    essays_with_prediction = 0
    n_gold_spans = 0

    for annotated in split.essays:
        essay_id = annotated.essay.id
        if essay_id not in by_id:
            raise ContractError(f"predictions file is missing essay {essay_id}")
        pred = by_id[essay_id]
        gold_ranges, gold_types, gold_qualities = _gold_view(annotated)
        n_gold_spans += len(gold_ranges)
        n = annotated.essay.token_count
        total_tokens += n

        if pred.transport_failed:
            discards.transport_failures += 1
        if pred.essay_discarded:
            if pred.discard_stage == "classification":
                discards.essays_discarded_classification += 1
            else:
                discards.essays_discarded_segmentation += 1
        discards.spans_discarded += sum(1 for s in pred.spans if s.discarded)

        if not pred.usable:
            if inferred:
                tag_tally.add_gold_only(bio_tags_from_starts(n, (r[0] for r in gold_ranges)))
            if want_type:
                type_tally.add_all_gold_unmatched(gold_types)
            if want_quality:
                quality_tally.add_all_gold_unmatched(gold_qualities)
            continue

        essays_with_prediction += 1
        pred_ranges = [(s.start_token, s.end_token) for s in pred.spans]
        predicted_spans_total += len(pred_ranges)
        if inferred:
            tag_tally.add(
                bio_tags_from_starts(n, (r[0] for r in gold_ranges)),
                bio_tags_from_starts(n, (r[0] for r in pred_ranges)),
            )
        matching = match_spans(gold_ranges, pred_ranges)
        intersection_tokens += sum(mc.intersection for mc in matching.matches)
        if want_type:
            type_tally.add(
                matching,
                gold_types,
                [None if s.discarded else s.arg_type for s in pred.spans],
            )
        if want_quality:
            quality_tally.add(
                matching,
                gold_qualities,
                [None if s.discarded else s.quality for s in pred.spans],
            )

    return EvalReport(
        config=dict(run.config, run_index=run.run_index),
        n_essays=len(split.essays),
        n_gold_spans=n_gold_spans,
        n_predicted_spans=predicted_spans_total,
        discards=discards,
        segmentation=tag_tally.report() if inferred else None,
        type=type_tally.report(include_echec=inferred) if want_type else None,
        quality=quality_tally.report(include_echec=inferred) if want_quality else None,
        overlap_percent=(
            100.0 * intersection_tokens / total_tokens if inferred and total_tokens else None
        ),
        avg_arguments_per_essay=(
            predicted_spans_total / essays_with_prediction
            if inferred and essays_with_prediction
            else None
        ),
    )


# --- serialization -----------------------------------------------------------


def _section_to_obj(section: ClassReport) -> dict:
    return {
        "labels": section.labels,
        "macro_f1": round2(section.macro_f1),
        "includes_echec": section.includes_echec,
        "per_label": {
            label: {
                "tp": score.tp,
                "fp": score.fp,
                "fn": score.fn,
                "precision": round2(score.precision),
                "recall": round2(score.recall),
                "f1": round2(score.f1),
            }
            for label, score in section.per_label.items()
        },
        "confusion_labels": section.confusion_labels,
        "confusion": [[round2(v) for v in row] for row in section.confusion],
    }


def report_to_obj(report: EvalReport) -> dict:
    obj = {
        "kind": REPORT_KIND,
        "config": report.config,
        "config_hash": config_hash(report.config),
        "n_essays": report.n_essays,
        "n_gold_spans": report.n_gold_spans,
        "n_predicted_spans": report.n_predicted_spans,
        "discards": {
            "essays_discarded_segmentation": report.discards.essays_discarded_segmentation,
            "essays_discarded_classification": report.discards.essays_discarded_classification,
            "spans_discarded": report.discards.spans_discarded,
            "transport_failures": report.discards.transport_failures,
            "total": report.discards.total,
        },
        "sections": {
            name: _section_to_obj(section)
            for name in ("segmentation", "type", "quality")
            if (section := getattr(report, name)) is not None
        },
    }
    if report.overlap_percent is not None:
        obj["overlap_percent"] = round2(report.overlap_percent)
    if report.avg_arguments_per_essay is not None:
        obj["avg_arguments_per_essay"] = round2(report.avg_arguments_per_essay)
    return obj


def aggregate_to_obj(agg: AggregateReport) -> dict:
    return {
        "kind": AGGREGATE_KIND,
        "config": agg.config,
        "config_hash": config_hash(agg.config),
        "runs": agg.runs,
        "single_run": agg.single_run,
        "values": {
            path: {"mean": round2(mean), "std": round2(std)}
            for path, (mean, std) in agg.values.items()
        },
    }


def save_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


# --- human-readable report -----------------------------------------------------


def _format_section(name: str, obj: dict) -> list[str]:
    lines = [f"[{name}]  macro F1 = {obj['macro_f1']:.2f}"
             + ("  (macro includes Echec at 0)" if obj.get("includes_echec") else "")]
    width = max(len(l) for l in obj["labels"] + ["label"])
    lines.append(f"  {'label'.ljust(width)}  {'prec':>7}  {'recall':>7}  {'f1':>7}  {'tp':>5} {'fp':>5} {'fn':>5}")
    for label in obj["labels"]:
        s = obj["per_label"][label]
        lines.append(
            f"  {label.ljust(width)}  {s['precision']:7.2f}  {s['recall']:7.2f}  {s['f1']:7.2f}"
            f"  {s['tp']:5d} {s['fp']:5d} {s['fn']:5d}"
        )
    lines.append(f"  confusion (rows = gold, columns = {', '.join(obj['confusion_labels'])}):")
    for row_label, row in zip(obj["confusion_labels"], obj["confusion"]):
        cells = " ".join(f"{v:8.2f}" for v in row)
        lines.append(f"    {row_label.ljust(width)} {cells}")
    return lines


def render_text_report(obj: dict) -> str:
    cfg = obj["config"]
    lines = [
        f"argmine report  (config {obj['config_hash']})",
        "  " + "  ".join(f"{k}={cfg[k]}" for k in sorted(cfg)),
        f"  essays: {obj['n_essays']}  gold spans: {obj['n_gold_spans']}"
        f"  predicted spans: {obj['n_predicted_spans']}",
        "  discards: " + "  ".join(f"{k}={v}" for k, v in obj["discards"].items()),
    ]
    if "overlap_percent" in obj:
        lines.append(f"  overlap with gold segmentation: {obj['overlap_percent']:.2f}%")
    if "avg_arguments_per_essay" in obj:
        lines.append(f"  avg arguments per essay: {obj['avg_arguments_per_essay']:.2f}")
    for name, section in obj["sections"].items():
        lines.append("")
        lines.extend(_format_section(name, section))
    return "\n".join(lines) + "\n"


def render_aggregate_text(obj: dict) -> str:
    lines = [
        f"argmine aggregate over {obj['runs']} run(s)  (config {obj['config_hash']})"
        + ("  [single run: std not meaningful]" if obj["single_run"] else ""),
        "  " + "  ".join(f"{k}={v}" for k, v in sorted(obj["config"].items())),
    ]
    for path, ms in obj["values"].items():
        lines.append(f"  {path}: {ms['mean']:.2f} ± {ms['std']:.2f}")
    return "\n".join(lines) + "\n"


# --- flat table ------------------------------------------------------------------


TABLE_COLUMNS = (
    "experiment",
    "model",
    "mode",
    "shots",
    "setup",
    "segmentation",
    "section",
    "label",
    "metric",
    "value",
    "std",
)


def _split_path(path: str) -> tuple[str, str, str]:
    parts = path.split(".")
    if parts[0] in ("segmentation", "type", "quality") and len(parts) > 1:
        section = parts[0]
        if parts[1] == "per_label":
            return section, parts[2], parts[3]
        if parts[1] == "confusion":
            return section, parts[2], f"confusion:{parts[3]}"
        return section, "", ".".join(parts[1:])
    return "", "", path


def flat_table_rows(experiment: str, agg_obj: dict) -> list[dict]:
    cfg = agg_obj["config"]
    rows = []
    for path, ms in agg_obj["values"].items():
        section, label, metric = _split_path(path)
        rows.append(
            {
                "experiment": experiment,
                "model": cfg.get("model", ""),
                "mode": cfg.get("mode", ""),
                "shots": cfg.get("shots", ""),
                "setup": cfg.get("setup", ""),
                "segmentation": cfg.get("segmentation", ""),
                "section": section,
                "label": label,
                "metric": metric,
                "value": ms["mean"],
                "std": ms["std"],
            }
        )
    return rows
