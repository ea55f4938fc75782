"""Evaluation: BIO segmentation F1, span matching, label reports, aggregation.

Span matching follows the mutual-overlap rule: a gold/predicted pair is a
match iff min(o_gold, o_pred) > 0.5 strictly, where o_gold is the
intersection over the gold span length and o_pred over the predicted span
length (token units). Disjointness of each side makes the resulting pairing
one-to-one: two disjoint golds cannot both cover more than half of one
prediction, and vice versa.

Unmatched gold spans land in the Echec column of the confusion matrix and in
the gold label's false negatives; unmatched predictions count as false
positives for their predicted label. Under inferred segmentation the macro-F1
averages the per-class scores together with the Echec pseudo-class at F1 = 0,
because Echec never occurs in gold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .labels import ECHEC

Span = tuple[int, int]


class ContractError(ValueError):
    """Inputs violate a metric precondition (overlap, length mismatch, ...)."""


def round2(value: float) -> float:
    """Two-decimal half-up rounding for reported percentages."""
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


# --- BIO segmentation -------------------------------------------------------


def bio_tags(token_count: int, spans: Sequence[Span]) -> list[str]:
    """B for each span's first token, I for the rest; spans must partition."""
    _check_partition(token_count, spans)
    tags = ["I"] * token_count
    for start, _ in spans:
        tags[start] = "B"
    return tags


def bio_tags_from_starts(token_count: int, starts: Iterable[int]) -> list[str]:
    """BIO tags given only argument start positions.

    Gold annotations may leave gaps between arguments; gap tokens stay I, so
    every token is treated as belonging to an argument.
    """
    tags = ["I"] * token_count
    for start in starts:
        if not 0 <= start < token_count:
            raise ContractError(f"span start {start} outside [0, {token_count})")
        tags[start] = "B"
    return tags


def _check_partition(token_count: int, spans: Sequence[Span]) -> None:
    expected = 0
    for start, end in spans:
        if start != expected or end <= start:
            raise ContractError(f"spans do not partition [0, {token_count}): bad span ({start}, {end})")
        expected = end
    if expected != token_count:
        raise ContractError(f"spans cover [0, {expected}), essay has {token_count} tokens")


@dataclass
class TagTally:
    """Token-wise confusion counts over the {B, I} tag set."""

    counts: dict[tuple[str, str], int] = field(default_factory=dict)

    def add(self, gold_tags: Sequence[str], pred_tags: Sequence[str]) -> None:
        if len(gold_tags) != len(pred_tags):
            raise ContractError(f"tag sequences differ in length: {len(gold_tags)} vs {len(pred_tags)}")
        for g, p in zip(gold_tags, pred_tags):
            self.counts[(g, p)] = self.counts.get((g, p), 0) + 1

    def add_gold_only(self, gold_tags: Sequence[str]) -> None:
        """Essay with no usable prediction: every gold tag becomes a miss."""
        for g in gold_tags:
            self.counts[(g, None)] = self.counts.get((g, None), 0) + 1

    def report(self) -> "ClassReport":
        per_label: dict[str, LabelScore] = {}
        for tag in ("B", "I"):
            tp = self.counts.get((tag, tag), 0)
            fp = sum(n for (g, p), n in self.counts.items() if p == tag and g != tag)
            fn = sum(n for (g, p), n in self.counts.items() if g == tag and p != tag)
            per_label[tag] = LabelScore.from_counts(tp, fp, fn)
        confusion = [
            [float(self.counts.get((g, p), 0)) for p in ("B", "I")] for g in ("B", "I")
        ]
        occurring = [t for t in ("B", "I") if _occurs(per_label[t])]
        return ClassReport(
            labels=["B", "I"],
            per_label=per_label,
            macro_f1=macro_f1([per_label[t].f1 for t in occurring], include_echec=False),
            confusion=confusion,
            confusion_labels=["B", "I"],
        )


def bio_f1(gold_tags: Sequence[str], pred_tags: Sequence[str]) -> "ClassReport":
    """Token-wise precision/recall/F1 for B and I, plus their macro mean."""
    tally = TagTally()
    tally.add(gold_tags, pred_tags)
    return tally.report()


# --- span matching ----------------------------------------------------------


@dataclass(frozen=True)
class MatchCandidate:
    gold_index: int
    pred_index: int
    intersection: int
    o_gold: float
    o_pred: float

    @property
    def matched(self) -> bool:
        return min(self.o_gold, self.o_pred) > 0.5


@dataclass(frozen=True)
class SpanMatching:
    matches: tuple[MatchCandidate, ...]
    unmatched_gold: tuple[int, ...]
    unmatched_pred: tuple[int, ...]


def _check_disjoint(spans: Sequence[Span], side: str) -> None:
    for start, end in spans:
        if end <= start:
            raise ContractError(f"{side} span ({start}, {end}) is empty or inverted")
    ordered = sorted(spans)
    for (_, prev_end), (start, _) in zip(ordered, ordered[1:]):
        if start < prev_end:
            raise ContractError(f"{side} spans overlap at token {start}")


def match_spans(gold: Sequence[Span], pred: Sequence[Span]) -> SpanMatching:
    """Pair every gold/pred span with mutual overlap strictly above one half."""
    _check_disjoint(gold, "gold")
    _check_disjoint(pred, "pred")
    matches: list[MatchCandidate] = []
    taken_gold: set[int] = set()
    taken_pred: set[int] = set()
    for gi, (gs, ge) in enumerate(gold):
        for pi, (ps, pe) in enumerate(pred):
            intersection = min(ge, pe) - max(gs, ps)
            if intersection <= 0:
                continue
            candidate = MatchCandidate(
                gold_index=gi,
                pred_index=pi,
                intersection=intersection,
                o_gold=intersection / (ge - gs),
                o_pred=intersection / (pe - ps),
            )
            if candidate.matched:
                # Disjointness makes >50% mutual overlap exclusive per side.
                assert gi not in taken_gold and pi not in taken_pred
                taken_gold.add(gi)
                taken_pred.add(pi)
                matches.append(candidate)
    return SpanMatching(
        matches=tuple(matches),
        unmatched_gold=tuple(i for i in range(len(gold)) if i not in taken_gold),
        unmatched_pred=tuple(i for i in range(len(pred)) if i not in taken_pred),
    )


# --- per-label scores and confusion ------------------------------------------


@dataclass(frozen=True)
class LabelScore:
    tp: int
    fp: int
    fn: int
    precision: float  # percent
    recall: float
    f1: float

    @staticmethod
    def from_counts(tp: int, fp: int, fn: int) -> "LabelScore":
        precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
        recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return LabelScore(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)


def macro_f1(f1_values: Sequence[float], include_echec: bool) -> float:
    """Unweighted mean of per-label F1; Echec joins at F1 = 0 when included."""
    values = list(f1_values) + ([0.0] if include_echec else [])
    if not values:
        raise ContractError("macro-F1 over an empty label set")
    return sum(values) / len(values)


def _occurs(score: "LabelScore") -> bool:
    return (score.tp + score.fp + score.fn) > 0


@dataclass
class LabelTally:
    """Accumulates match outcomes into per-label counts and a confusion matrix.

    pred labels may be None for discarded arguments: the gold side then scores
    as unmatched (false negative + Echec cell) and the prediction contributes
    nothing, so discards can only lower scores.
    """

    universe: list[str]
    tp: dict[str, int] = field(default_factory=dict)
    fp: dict[str, int] = field(default_factory=dict)
    fn: dict[str, int] = field(default_factory=dict)
    confusion: dict[tuple[str, str], int] = field(default_factory=dict)
    echec_events: int = 0

    def _bump(self, table: dict, key, amount: int = 1) -> None:
        table[key] = table.get(key, 0) + amount

    def _check(self, label: str | None) -> str | None:
        if label is not None and label not in self.universe:
            raise ContractError(f"label {label!r} outside universe {self.universe}")
        return label

    def add(
        self,
        matching: SpanMatching,
        gold_labels: Sequence[str],
        pred_labels: Sequence[str | None],
    ) -> None:
        for mc in matching.matches:
            g = self._check(gold_labels[mc.gold_index])
            p = self._check(pred_labels[mc.pred_index])
            if p is None:
                self._bump(self.fn, g)
                self._bump(self.confusion, (g, ECHEC))
                self.echec_events += 1
            elif g == p:
                self._bump(self.tp, g)
                self._bump(self.confusion, (g, p))
            else:
                self._bump(self.fn, g)
                self._bump(self.fp, p)
                self._bump(self.confusion, (g, p))
        for gi in matching.unmatched_gold:
            g = self._check(gold_labels[gi])
            self._bump(self.fn, g)
            self._bump(self.confusion, (g, ECHEC))
            self.echec_events += 1
        for pi in matching.unmatched_pred:
            p = self._check(pred_labels[pi])
            if p is not None:
                self._bump(self.fp, p)
            self.echec_events += 1

    def add_all_gold_unmatched(self, gold_labels: Sequence[str]) -> None:
        """Discarded essay: every gold span goes straight to Echec."""
        for g in gold_labels:
            self._bump(self.fn, self._check(g))
            self._bump(self.confusion, (g, ECHEC))
            self.echec_events += 1

    def report(self, include_echec: bool) -> "ClassReport":
        per_label = {
            label: LabelScore.from_counts(
                self.tp.get(label, 0), self.fp.get(label, 0), self.fn.get(label, 0)
            )
            for label in self.universe
        }
        columns = self.universe + [ECHEC]
        rows = self.universe + [ECHEC]  # Echec row is identically zero
        confusion = [
            [float(self.confusion.get((g, p), 0)) for p in columns] for g in rows
        ]
        # Labels absent from both gold and predictions stay out of the macro;
        # otherwise small fixtures could never reach 100. The same occurrence
        # rule gates the Echec pseudo-class: it joins (at F1 = 0) only when
        # some span actually failed to match.
        occurring = [l for l in self.universe if _occurs(per_label[l])]
        with_echec = include_echec and self.echec_events > 0
        if occurring or with_echec:
            macro = macro_f1([per_label[l].f1 for l in occurring], with_echec)
        else:
            macro = 0.0  # vacuous instance: nothing gold, nothing predicted
        return ClassReport(
            labels=list(self.universe),
            per_label=per_label,
            macro_f1=macro,
            confusion=confusion,
            confusion_labels=columns,
            includes_echec=with_echec,
        )


def label_scores(
    matching: SpanMatching,
    gold_labels: Sequence[str],
    pred_labels: Sequence[str | None],
    label_universe: Sequence[str],
    include_echec: bool,
) -> "ClassReport":
    """Single-instance convenience wrapper around LabelTally."""
    tally = LabelTally(universe=list(label_universe))
    tally.add(matching, gold_labels, pred_labels)
    return tally.report(include_echec)


def confusion_matrix(
    matching: SpanMatching,
    gold_labels: Sequence[str],
    pred_labels: Sequence[str | None],
    label_universe: Sequence[str],
) -> list[list[float]]:
    return label_scores(matching, gold_labels, pred_labels, label_universe, include_echec=True).confusion


# --- overlap statistics -------------------------------------------------------


@dataclass(frozen=True)
class OverlapStats:
    intersection_tokens: int
    total_tokens: int
    predicted_spans: int

    @property
    def overlap_percent(self) -> float:
        return 100.0 * self.intersection_tokens / self.total_tokens if self.total_tokens else 0.0


def overlap_stats(gold: Sequence[Span], pred: Sequence[Span], token_count: int) -> OverlapStats:
    """Share of tokens inside matched gold/pred span intersections."""
    matching = match_spans(gold, pred)
    return OverlapStats(
        intersection_tokens=sum(mc.intersection for mc in matching.matches),
        total_tokens=token_count,
        predicted_spans=len(pred),
    )


# --- report structures --------------------------------------------------------


@dataclass
class ClassReport:
    labels: list[str]
    per_label: dict[str, LabelScore]
    macro_f1: float
    confusion: list[list[float]]
    confusion_labels: list[str]
    includes_echec: bool = False


@dataclass
class DiscardStats:
    essays_discarded_segmentation: int = 0
    essays_discarded_classification: int = 0
    spans_discarded: int = 0
    transport_failures: int = 0

    @property
    def total(self) -> int:
        return (
            self.essays_discarded_segmentation
            + self.essays_discarded_classification
            + self.spans_discarded
        )


@dataclass
class EvalReport:
    config: dict
    n_essays: int
    n_gold_spans: int
    n_predicted_spans: int
    discards: DiscardStats
    segmentation: ClassReport | None = None
    type: ClassReport | None = None
    quality: ClassReport | None = None
    overlap_percent: float | None = None
    avg_arguments_per_essay: float | None = None


def _flatten_class_report(prefix: str, report: ClassReport, out: dict[str, float]) -> None:
    out[f"{prefix}.macro_f1"] = report.macro_f1
    for label, score in report.per_label.items():
        out[f"{prefix}.per_label.{label}.precision"] = score.precision
        out[f"{prefix}.per_label.{label}.recall"] = score.recall
        out[f"{prefix}.per_label.{label}.f1"] = score.f1
    for gi, gold_label in enumerate(report.confusion_labels[: len(report.confusion)]):
        for pi, pred_label in enumerate(report.confusion_labels):
            out[f"{prefix}.confusion.{gold_label}.{pred_label}"] = report.confusion[gi][pi]


def flatten_report(report: EvalReport) -> dict[str, float]:
    """Numeric leaves of a report, keyed by dotted path; used for aggregation."""
    out: dict[str, float] = {
        "n_essays": float(report.n_essays),
        "n_gold_spans": float(report.n_gold_spans),
        "n_predicted_spans": float(report.n_predicted_spans),
        "discards.essays_discarded_segmentation": float(report.discards.essays_discarded_segmentation),
        "discards.essays_discarded_classification": float(report.discards.essays_discarded_classification),
        "discards.spans_discarded": float(report.discards.spans_discarded),
        "discards.transport_failures": float(report.discards.transport_failures),
    }
    for name in ("segmentation", "type", "quality"):
        section = getattr(report, name)
        if section is not None:
            _flatten_class_report(name, section, out)
    if report.overlap_percent is not None:
        out["overlap_percent"] = report.overlap_percent
    if report.avg_arguments_per_essay is not None:
        out["avg_arguments_per_essay"] = report.avg_arguments_per_essay
    return out


@dataclass
class AggregateReport:
    config: dict
    runs: int
    single_run: bool
    values: dict[str, tuple[float, float]]  # path -> (mean, sample std)


_PER_RUN_CONFIG_KEYS = ("run_index", "seed")


def comparable_config(config: dict) -> dict:
    return {k: v for k, v in config.items() if k not in _PER_RUN_CONFIG_KEYS}


def aggregate_runs(reports: Sequence[EvalReport]) -> AggregateReport:
    """Element-wise mean and sample standard deviation across repeated runs."""
    if not reports:
        raise ContractError("no reports to aggregate")
    base_config = comparable_config(reports[0].config)
    flats = []
    for report in reports:
        if comparable_config(report.config) != base_config:
            raise ContractError("cannot aggregate reports from different configurations")
        flats.append(flatten_report(report))
    keys = set(flats[0])
    for flat in flats[1:]:
        if set(flat) != keys:
            raise ContractError("reports expose different metric sets; configs are not homogeneous")
    n = len(flats)
    values: dict[str, tuple[float, float]] = {}
    for key in sorted(keys):
        xs = [flat[key] for flat in flats]
        mean = sum(xs) / n
        std = math.sqrt(sum((x - mean) ** 2 for x in xs) / (n - 1)) if n > 1 else 0.0
        values[key] = (mean, std)
    return AggregateReport(config=base_config, runs=n, single_run=(n == 1), values=values)
