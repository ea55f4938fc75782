"""Prompt rendering for every task, setup, and shot count.

Element order is a hard contract: shot examples, then the essay, then the
query, then the output requirement, then (for classification) the target
argument. Reordering or dropping elements measurably degrades model output,
so prompts are rendered byte-deterministically and pinned by golden files.
The query texts live as plain-text assets under templates/ so they stay
auditable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

from .corpus import AnnotatedEssay, Essay

SEP = "<SEP>"
SEP_NAME = "SEP"
MAX_SHOTS = 4


class ConfigError(ValueError):
    """A prompt/experiment configuration violates its bounds."""


class TaskKind(enum.Enum):
    SEGMENTATION = "segmentation"
    TYPE_ONLY = "type"
    QUALITY_ONLY = "quality"
    TYPE_AND_QUALITY = "type_and_quality"

    @property
    def setup(self) -> str:
        """Individual vs joint classification; segmentation has neither."""
        if self is TaskKind.SEGMENTATION:
            return "-"
        return "joint" if self is TaskKind.TYPE_AND_QUALITY else "individual"

    @property
    def is_classification(self) -> bool:
        return self is not TaskKind.SEGMENTATION


def _template(name: str) -> str:
    path = resources.files("argmine").joinpath("templates", name)
    return path.read_text(encoding="utf-8").rstrip("\n")


SEGMENTATION_QUERY = _template("query_segmentation.txt")
TYPE_QUERY = _template("query_type.txt")
QUALITY_QUERY = _template("query_quality.txt")
SEGMENTATION_REQUIREMENT = _template("require_segmentation.txt")
_CLASSIFICATION_REQUIREMENT = _template("require_classification.txt")

JSON_KEYS = {
    TaskKind.TYPE_ONLY: "TYPE",
    TaskKind.QUALITY_ONLY: "QUALITY",
    TaskKind.TYPE_AND_QUALITY: "TYPE AND QUALITY",
}

_WHAT = {
    TaskKind.TYPE_ONLY: "type",
    TaskKind.QUALITY_ONLY: "quality",
    TaskKind.TYPE_AND_QUALITY: "type and quality",
}


def classification_query(task: TaskKind) -> str:
    if task is TaskKind.TYPE_ONLY:
        return TYPE_QUERY
    if task is TaskKind.QUALITY_ONLY:
        return QUALITY_QUERY
    if task is TaskKind.TYPE_AND_QUALITY:
        # The joint setup states both evaluator roles, type first.
        return TYPE_QUERY + "\n\n" + QUALITY_QUERY
    raise ConfigError(f"{task} has no classification query")


def classification_requirement(task: TaskKind) -> str:
    return _CLASSIFICATION_REQUIREMENT.format(what=_WHAT[task], key=JSON_KEYS[task])


@dataclass(frozen=True)
class ShotExample:
    task: TaskKind
    text: str


@dataclass(frozen=True)
class Prompt:
    task: TaskKind
    mode: str  # "few_shot" | "fine_tuned"
    shot_count: int
    body: str
    target_argument_index: int | None = None


def render_with_markers(essay: Essay, spans: Sequence[tuple[int, int]], markers: Sequence[str]) -> str:
    """Insert " <marker>" immediately after each span's final character."""
    if len(spans) != len(markers):
        raise ValueError("one marker per span required")
    parts: list[str] = []
    cursor = 0
    for (start_token, end_token), marker in zip(spans, markers):
        if end_token <= start_token:
            raise ValueError("empty span cannot take a marker")
        end_char = essay.tokens[end_token - 1].end
        parts.append(essay.normalized_text[cursor:end_char])
        parts.append(f" <{marker}>")
        cursor = end_char
    parts.append(essay.normalized_text[cursor:])
    return "".join(parts)


def render_segmented(essay: Essay, spans: Sequence[tuple[int, int]]) -> str:
    """Essay with <SEP> after each span; the classification-task input format."""
    return render_with_markers(essay, spans, [SEP_NAME] * len(spans))


def render_shot_example(annotated: AnnotatedEssay, task: TaskKind) -> str:
    """Essay text with the task's label marker after each gold span."""
    if not annotated.spans:
        raise ValueError(f"essay {annotated.essay.id} has no gold spans to render")
    spans = [(s.start_token, s.end_token) for s in annotated.spans]
    if task is TaskKind.SEGMENTATION:
        markers = [SEP_NAME] * len(spans)
    elif task is TaskKind.TYPE_ONLY:
        markers = [s.arg_type.value for s in annotated.spans]
    elif task is TaskKind.QUALITY_ONLY:
        markers = [s.quality.value for s in annotated.spans]
    else:
        markers = [f"{s.arg_type.value}, {s.quality.value}" for s in annotated.spans]
    return render_with_markers(annotated.essay, spans, markers)


def make_shot_example(annotated: AnnotatedEssay, task: TaskKind) -> ShotExample:
    return ShotExample(task=task, text=render_shot_example(annotated, task))


def select_shot_examples(
    essays: Sequence[AnnotatedEssay], task: TaskKind, count: int
) -> list[ShotExample]:
    """Deterministic shot selection: first `count` annotated essays by id."""
    _check_shot_count(count)
    eligible = sorted((e for e in essays if e.spans), key=lambda e: e.essay.id)
    if len(eligible) < count:
        raise ConfigError(f"need {count} shot essays, corpus has {len(eligible)}")
    return [make_shot_example(e, task) for e in eligible[:count]]


def _check_shot_count(count: int) -> None:
    if not 0 <= count <= MAX_SHOTS:
        raise ConfigError(f"shot count must be 0..{MAX_SHOTS}, got {count}")


def _check_shot_tasks(shots: Sequence[ShotExample], task: TaskKind) -> None:
    for shot in shots:
        if shot.task is not task:
            raise ConfigError(f"shot example rendered for {shot.task}, prompt is {task}")


def _examples_block(shots: Sequence[ShotExample]) -> str:
    return "".join(f"#EXAMPLE:\n{shot.text}\n\n" for shot in shots)


def build_segmentation_prompt(essay: Essay, shots: Sequence[ShotExample] = ()) -> Prompt:
    """Few-shot segmentation prompt: examples, essay, query, output requirement."""
    _check_shot_count(len(shots))
    _check_shot_tasks(shots, TaskKind.SEGMENTATION)
    body = (
        _examples_block(shots)
        + f"#ESSAY:\n{essay.normalized_text}\n\n"
        + SEGMENTATION_QUERY
        + "\n\n"
        + SEGMENTATION_REQUIREMENT
    )
    return Prompt(task=TaskKind.SEGMENTATION, mode="few_shot", shot_count=len(shots), body=body)


def split_segments(segmented_essay: str) -> list[str]:
    """SEP-delimited segments, stripped; empty runs between markers are dropped."""
    return [piece.strip() for piece in segmented_essay.split(SEP) if piece.strip()]


def build_classification_prompt(
    segmented_essay: str,
    target_index: int,
    task: TaskKind,
    shots: Sequence[ShotExample] = (),
) -> Prompt:
    """Few-shot classification prompt for one argument of a segmented essay.

    The full segmented essay rides along as context; the target argument is
    quoted last so the model knows which component to judge.
    """
    if not task.is_classification:
        raise ConfigError("segmentation prompts are built by build_segmentation_prompt")
    _check_shot_count(len(shots))
    _check_shot_tasks(shots, task)
    segments = split_segments(segmented_essay)
    if not 0 <= target_index < len(segments):
        raise IndexError(f"target argument {target_index} out of range ({len(segments)} segments)")
    body = (
        _examples_block(shots)
        + f"#ESSAY:\n{segmented_essay}\n\n"
        + f"#QUERY: {classification_query(task)}\n\n"
        + classification_requirement(task)
        + "\n\n"
        + f'#ARGUMENT: "{segments[target_index]}"'
    )
    return Prompt(
        task=task,
        mode="few_shot",
        shot_count=len(shots),
        body=body,
        target_argument_index=target_index,
    )


def render_finetuned_input(text: str, task: TaskKind) -> str:
    """Bare fine-tuning-format input: the raw essay for segmentation, the
    SEP-segmented essay otherwise. No examples, no boilerplate."""
    if task.is_classification and text and SEP not in text:
        raise ConfigError(f"{task.value} fine-tuned input must be SEP-segmented")
    return text


def finetuned_prompt(text: str, task: TaskKind) -> Prompt:
    return Prompt(task=task, mode="fine_tuned", shot_count=0, body=render_finetuned_input(text, task))
