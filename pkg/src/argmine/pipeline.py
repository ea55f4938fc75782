"""End-to-end orchestration: segment first, then classify, then evaluate.

Segmentation failures discard the whole essay; classification failures
discard only the affected argument (or, for a fine-tuned interleaved call
that never validates, the essay's labels as a whole). Few-shot
classification sends one prompt per argument with the segmented essay as
context; prompts for the spans of an essay may run concurrently, but results
assemble by span index so output never depends on completion order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import httpx

from .corpus import AnnotatedEssay, CorpusSplit, Essay
from .inference import Discarded, InferenceClient, ModelConfig, TransportFailed, Valid
from .metrics import EvalReport, aggregate_runs, AggregateReport
from .parsing import LabelAnswer, PredictedSegmentation, make_validator
from .predictions import EssayPrediction, RunPredictions, SpanPrediction
from .prompts import (
    ConfigError,
    MAX_SHOTS,
    Prompt,
    ShotExample,
    TaskKind,
    build_classification_prompt,
    build_segmentation_prompt,
    finetuned_prompt,
    render_segmented,
    select_shot_examples,
)
from .reporting import evaluate_run
from .spelling import TextNormalizer, identity_normalizer, normalize_essay


class ExperimentFailed(RuntimeError):
    """A run processed zero essays successfully."""


@dataclass(frozen=True)
class ExperimentConfig:
    task: TaskKind
    model: ModelConfig
    segmentation: str = "inferred"  # "gold" | "inferred"
    mode: str = "few_shot"  # "few_shot" | "fine_tuned"
    shots: int = 0
    runs: int = 3
    parallelism: int = 4
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.segmentation not in ("gold", "inferred"):
            raise ConfigError(f"segmentation must be gold or inferred, got {self.segmentation!r}")
        if self.mode not in ("few_shot", "fine_tuned"):
            raise ConfigError(f"mode must be few_shot or fine_tuned, got {self.mode!r}")
        if not 0 <= self.shots <= MAX_SHOTS:
            raise ConfigError(f"shots must be 0..{MAX_SHOTS}, got {self.shots}")
        if self.mode == "fine_tuned" and self.shots != 0:
            raise ConfigError("fine-tuned mode takes no shot examples")
        if self.task is TaskKind.SEGMENTATION and self.segmentation == "gold":
            raise ConfigError("the segmentation task always infers its segmentation")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")

    @property
    def setup(self) -> str:
        return self.task.setup

    def needs_inferred_segmentation(self) -> bool:
        return self.task is TaskKind.SEGMENTATION or self.segmentation == "inferred"

    def config_echo(self) -> dict:
        return {
            "task": self.task.value,
            "setup": self.setup,
            "segmentation": "inferred" if self.task is TaskKind.SEGMENTATION else self.segmentation,
            "mode": self.mode,
            "shots": self.shots,
            "model": self.model.model,
            "api": self.model.api,
            "temperature": self.model.temperature,
            "runs": self.runs,
            "seed": self.seed,
        }


@dataclass
class ShotBank:
    """Pre-rendered shot examples per task, drawn from the training split."""

    segmentation: list[ShotExample] = field(default_factory=list)
    classification: list[ShotExample] = field(default_factory=list)

    @staticmethod
    def build(cfg: ExperimentConfig, shot_split: CorpusSplit | None) -> "ShotBank":
        if cfg.mode == "fine_tuned" or cfg.shots == 0:
            return ShotBank()
        if shot_split is None:
            raise ConfigError(f"{cfg.shots}-shot prompting needs a training split for examples")
        bank = ShotBank()
        if cfg.needs_inferred_segmentation():
            bank.segmentation = select_shot_examples(
                shot_split.essays, TaskKind.SEGMENTATION, cfg.shots
            )
        if cfg.task.is_classification:
            bank.classification = select_shot_examples(shot_split.essays, cfg.task, cfg.shots)
        return bank


def run_segmentation(client: InferenceClient, essay: Essay, cfg: ExperimentConfig, shots: Sequence[ShotExample]):
    """Returns the client outcome; Valid carries a PredictedSegmentation."""
    if cfg.mode == "few_shot":
        prompt: Prompt = build_segmentation_prompt(essay, shots)
    else:
        prompt = finetuned_prompt(essay.normalized_text, TaskKind.SEGMENTATION)
    validator = make_validator(TaskKind.SEGMENTATION, cfg.mode, essay)
    return client.complete_validated(prompt, validator)


@dataclass
class ClassificationResult:
    labels: list[LabelAnswer | None]
    attempts: list[int]
    essay_discarded: bool = False
    transport_failed: bool = False


def _answer_to_fields(answer: LabelAnswer | None) -> tuple[str | None, str | None]:
    if answer is None:
        return None, None
    return (
        answer.arg_type.value if answer.arg_type else None,
        answer.quality.value if answer.quality else None,
    )


def run_classification(
    client: InferenceClient,
    essay: Essay,
    spans: Sequence[tuple[int, int]],
    cfg: ExperimentConfig,
    shots: Sequence[ShotExample],
    executor: ThreadPoolExecutor | None = None,
) -> ClassificationResult:
    """Label every span of a segmented essay.

    Few-shot mode issues one prompt per span (full segmented essay as
    context) and assembles answers in span order; fine-tuned mode issues a
    single interleaved call and maps labels to spans positionally.
    """
    segmented = render_segmented(essay, spans)
    result = ClassificationResult(labels=[None] * len(spans), attempts=[0] * len(spans))

    if cfg.mode == "fine_tuned":
        validator = make_validator(cfg.task, "fine_tuned", essay, expected_segments=len(spans))
        outcome = client.complete_validated(finetuned_prompt(segmented, cfg.task), validator)
        if isinstance(outcome, Valid):
            result.labels = list(outcome.value.labels)
            result.attempts = [outcome.attempts] * len(spans)
        elif isinstance(outcome, Discarded):
            result.essay_discarded = True
            result.attempts = [outcome.attempts] * len(spans)
        else:
            result.transport_failed = True
        return result

    validator = make_validator(cfg.task, "few_shot", essay)

    def classify(index: int):
        prompt = build_classification_prompt(segmented, index, cfg.task, shots)
        return client.complete_validated(prompt, validator)

    if executor is None:
        outcomes = [classify(i) for i in range(len(spans))]
    else:
        outcomes = list(executor.map(classify, range(len(spans))))

    for i, outcome in enumerate(outcomes):
        if isinstance(outcome, Valid):
            result.labels[i] = outcome.value
            result.attempts[i] = outcome.attempts
        elif isinstance(outcome, Discarded):
            result.attempts[i] = outcome.attempts
        else:
            result.transport_failed = True
    return result


def process_essay(
    client: InferenceClient,
    annotated: AnnotatedEssay,
    cfg: ExperimentConfig,
    bank: ShotBank,
    executor: ThreadPoolExecutor | None = None,
) -> EssayPrediction:
    essay = annotated.essay
    segmentation_attempts = 0

    if cfg.needs_inferred_segmentation():
        outcome = run_segmentation(client, essay, cfg, bank.segmentation)
        if isinstance(outcome, TransportFailed):
            return EssayPrediction(essay_id=essay.id, transport_failed=True)
        if isinstance(outcome, Discarded):
            return EssayPrediction(
                essay_id=essay.id,
                essay_discarded=True,
                discard_stage="segmentation",
                segmentation_attempts=outcome.attempts,
            )
        segmentation: PredictedSegmentation = outcome.value
        segmentation_attempts = outcome.attempts
        spans = list(segmentation.spans)
    else:
        spans = [(s.start_token, s.end_token) for s in annotated.spans]

    if cfg.task is TaskKind.SEGMENTATION:
        return EssayPrediction(
            essay_id=essay.id,
            spans=tuple(SpanPrediction(start_token=s, end_token=e) for s, e in spans),
            segmentation_attempts=segmentation_attempts,
        )

    result = run_classification(client, essay, spans, cfg, bank.classification, executor)
    if result.essay_discarded:
        return EssayPrediction(
            essay_id=essay.id,
            essay_discarded=True,
            discard_stage="classification",
            segmentation_attempts=segmentation_attempts,
        )
    span_predictions = []
    for (start, end), answer, attempts in zip(spans, result.labels, result.attempts):
        arg_type, quality = _answer_to_fields(answer)
        span_predictions.append(
            SpanPrediction(
                start_token=start,
                end_token=end,
                arg_type=arg_type,
                quality=quality,
                discarded=answer is None,
                attempts=attempts,
            )
        )
    return EssayPrediction(
        essay_id=essay.id,
        spans=tuple(span_predictions),
        transport_failed=result.transport_failed,
        segmentation_attempts=segmentation_attempts,
    )


@dataclass
class RunResult:
    predictions: RunPredictions
    report: EvalReport
    client_discards: int
    client_transport_failures: int


@dataclass
class ExperimentResult:
    runs: list[RunResult]
    aggregate: AggregateReport


def run_once(
    split: CorpusSplit,
    cfg: ExperimentConfig,
    run_index: int,
    shot_split: CorpusSplit | None = None,
    transport: httpx.BaseTransport | None = None,
) -> RunResult:
    bank = ShotBank.build(cfg, shot_split)
    seed = None if cfg.seed is None else cfg.seed + run_index
    model = cfg.model.with_seed(seed) if seed is not None else cfg.model
    run = RunPredictions(config=cfg.config_echo(), run_index=run_index)
    with InferenceClient(model, transport=transport, parallelism=cfg.parallelism) as client:
        with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as executor:
            for annotated in split.essays:
                run.essays.append(process_essay(client, annotated, cfg, bank, executor))
        stats = client.stats
        if not any(e.usable for e in run.essays):
            raise ExperimentFailed(
                f"run {run_index}: no essay survived (of {len(split.essays)})"
            )
        report = evaluate_run(split, run)
        return RunResult(
            predictions=run,
            report=report,
            client_discards=stats.discards,
            client_transport_failures=stats.transport_failures,
        )


def run_experiment(
    split: CorpusSplit,
    cfg: ExperimentConfig,
    shot_split: CorpusSplit | None = None,
    transport: httpx.BaseTransport | None = None,
    on_run_done: Callable[[RunResult], None] | None = None,
) -> ExperimentResult:
    """Repeat the run cfg.runs times and aggregate mean/std across runs."""
    results = []
    for run_index in range(cfg.runs):
        result = run_once(split, cfg, run_index, shot_split, transport)
        if on_run_done is not None:
            on_run_done(result)
        results.append(result)
    aggregate = aggregate_runs([r.report for r in results])
    return ExperimentResult(runs=results, aggregate=aggregate)


# --- interactive analysis -------------------------------------------------------


@dataclass(frozen=True)
class AnalysisSegment:
    start_char: int
    end_char: int
    text: str
    arg_type: str | None
    quality: str | None
    discarded: bool


@dataclass
class AnalysisResult:
    text: str  # the analyzed (normalized) text the char ranges refer to
    segments: list[AnalysisSegment]
    model: str
    error: str | None = None
    spans_discarded: int = 0
    segmentation_attempts: int = 0

    def to_obj(self) -> dict:
        return {
            "text": self.text,
            "model": self.model,
            "error": self.error,
            "spans_discarded": self.spans_discarded,
            "segmentation_attempts": self.segmentation_attempts,
            "segments": [
                {
                    "start": s.start_char,
                    "end": s.end_char,
                    "text": s.text,
                    "type": s.arg_type,
                    "quality": s.quality,
                    "discarded": s.discarded,
                }
                for s in self.segments
            ],
        }


def char_segments(essay: Essay, spans: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Char ranges that tile [0, len(text)): each segment ends where the next
    one's first token starts, absorbing the whitespace in between."""
    ranges = []
    text_length = len(essay.normalized_text)
    for i, (start, end) in enumerate(spans):
        char_start = 0 if i == 0 else essay.tokens[start].start
        char_end = text_length if i == len(spans) - 1 else essay.tokens[spans[i + 1][0]].start
        ranges.append((char_start, char_end))
    return ranges


def analyze(
    text: str,
    cfg: ExperimentConfig,
    shot_split: CorpusSplit | None = None,
    transport: httpx.BaseTransport | None = None,
    normalizer: TextNormalizer = identity_normalizer,
) -> AnalysisResult:
    """Segment and classify one essay for interactive feedback.

    Uses inferred segmentation and the configured classification task
    (joint by default). Raises ValueError on empty input before any model
    call; a segmentation discard comes back as an explicit failure payload.
    """
    if not text or not text.strip():
        raise ValueError("essay text is empty")
    annotated = normalize_essay("session", text, normalizer, ())
    essay = annotated.essay
    task = cfg.task if cfg.task.is_classification else TaskKind.TYPE_AND_QUALITY
    cfg = replace(cfg, task=task, segmentation="inferred", runs=1)
    bank = ShotBank.build(cfg, shot_split)

    with InferenceClient(cfg.model, transport=transport, parallelism=cfg.parallelism) as client:
        outcome = run_segmentation(client, essay, cfg, bank.segmentation)
        if isinstance(outcome, TransportFailed):
            return AnalysisResult(
                text=essay.normalized_text, segments=[], model=cfg.model.model,
                error=f"inference server unreachable: {outcome.error}",
            )
        if isinstance(outcome, Discarded):
            return AnalysisResult(
                text=essay.normalized_text, segments=[], model=cfg.model.model,
                error="segmentation discarded after 5 malformed attempts",
                segmentation_attempts=outcome.attempts,
            )
        segmentation: PredictedSegmentation = outcome.value
        spans = list(segmentation.spans)
        with ThreadPoolExecutor(max_workers=max(1, cfg.parallelism)) as executor:
            result = run_classification(client, essay, spans, cfg, bank.classification, executor)

    segments = []
    for (start, end), char_range, answer in zip(spans, char_segments(essay, spans), result.labels):
        arg_type, quality = _answer_to_fields(answer)
        segments.append(
            AnalysisSegment(
                start_char=char_range[0],
                end_char=char_range[1],
                text=essay.normalized_text[char_range[0] : char_range[1]],
                arg_type=arg_type,
                quality=quality,
                discarded=answer is None,
            )
        )
    return AnalysisResult(
        text=essay.normalized_text,
        segments=segments,
        model=cfg.model.model,
        error="classification discarded for every argument" if result.essay_discarded else None,
        spans_discarded=sum(1 for s in segments if s.discarded),
        segmentation_attempts=outcome.attempts,
    )
