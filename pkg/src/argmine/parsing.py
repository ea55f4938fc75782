"""Validation and parsing of model outputs, and projection onto the essay.

Every parse failure is a *rejection*: the retry loop resends the prompt and,
after five strikes, discards the item. Models wrap answers in prose, drop
words while echoing, and invent labels; parsing is therefore lenient about
surrounding noise (balanced-object scan, whitespace/case-tolerant markers)
but strict about the closed label vocabulary and output structure.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Callable

from .alignment import project_boundaries
from .corpus import Essay
from .labels import ArgType, LabelError, QualityLabel, parse_arg_type, parse_quality
from .prompts import JSON_KEYS, SEP, TaskKind


class OutputRejected(ValueError):
    """Base for every model-output defect that should consume a retry."""


class FormatError(OutputRejected):
    """Output lacks the required structure (object, markers, counts)."""


class WrongKeyError(OutputRejected):
    """A JSON object was found but not under the task's key."""


class ArityError(OutputRejected):
    """The label list has the wrong number of elements for the task."""


class AlignmentReject(OutputRejected):
    """Echoed text strays too far from the essay to trust the boundaries."""


# labels.LabelError also counts as a rejection; catch this tuple in retry loops.
REJECTION_ERRORS = (OutputRejected, LabelError)


@dataclass(frozen=True)
class LabelAnswer:
    arg_type: ArgType | None = None
    quality: QualityLabel | None = None

    def matches_task(self, task: TaskKind) -> bool:
        if task is TaskKind.TYPE_ONLY:
            return self.arg_type is not None and self.quality is None
        if task is TaskKind.QUALITY_ONLY:
            return self.quality is not None and self.arg_type is None
        if task is TaskKind.TYPE_AND_QUALITY:
            return self.arg_type is not None and self.quality is not None
        return False


def _fold_key(key: str) -> str:
    return " ".join(key.split()).casefold()


def _first_json_object(raw: str) -> dict:
    """First balanced JSON object embedded anywhere in raw.

    json.JSONDecoder.raw_decode handles braces inside string values, which a
    naive depth counter would not.
    """
    decoder = json.JSONDecoder()
    for match in re.finditer(r"\{", raw):
        try:
            value, _ = decoder.raw_decode(raw, match.start())
        except json.JSONDecodeError:
            continue
        if isinstance(value, dict):
            return value
    raise FormatError("no balanced JSON object in output")


def parse_label_object(raw: str, task: TaskKind) -> LabelAnswer:
    """Parse the classification answer object, e.g. {"TYPE": ["Position"]}."""
    if not task.is_classification:
        raise ValueError("segmentation output has no label object")
    obj = _first_json_object(raw)
    wanted = _fold_key(JSON_KEYS[task])
    values = None
    for key, candidate in obj.items():
        if _fold_key(str(key)) == wanted:
            values = candidate
            break
    if values is None:
        raise WrongKeyError(f"expected key {JSON_KEYS[task]!r}, got {sorted(obj)}")
    if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
        raise FormatError(f"value under {JSON_KEYS[task]!r} must be a list of strings")
    expected_arity = 2 if task is TaskKind.TYPE_AND_QUALITY else 1
    if len(values) != expected_arity:
        raise ArityError(f"{JSON_KEYS[task]!r} takes {expected_arity} value(s), got {len(values)}")
    if task is TaskKind.TYPE_ONLY:
        return LabelAnswer(arg_type=parse_arg_type(values[0]))
    if task is TaskKind.QUALITY_ONLY:
        return LabelAnswer(quality=parse_quality(values[0]))
    return LabelAnswer(arg_type=parse_arg_type(values[0]), quality=parse_quality(values[1]))


_MARKER_RE = re.compile(r"<([^<>]*)>")


def _parse_marker(content: str, task: TaskKind) -> LabelAnswer:
    parts = [p.strip() for p in content.split(",")]
    if task is TaskKind.TYPE_AND_QUALITY:
        if len(parts) != 2:
            raise LabelError(f"joint marker needs 'Type, Quality', got {content!r}")
        return LabelAnswer(arg_type=parse_arg_type(parts[0]), quality=parse_quality(parts[1]))
    if len(parts) != 1:
        raise LabelError(f"marker for {task.value} takes one label, got {content!r}")
    if task is TaskKind.TYPE_ONLY:
        return LabelAnswer(arg_type=parse_arg_type(parts[0]))
    return LabelAnswer(quality=parse_quality(parts[0]))


@dataclass(frozen=True)
class InterleavedParse:
    items: tuple[tuple[str, LabelAnswer], ...]

    @property
    def labels(self) -> tuple[LabelAnswer, ...]:
        return tuple(label for _, label in self.items)

    def __len__(self) -> int:
        return len(self.items)


def parse_interleaved(raw: str, task: TaskKind) -> InterleavedParse:
    """Parse a label-interleaved echo: segment text followed by <Label> markers."""
    if not task.is_classification:
        raise ValueError("use align_segmentation for segmentation output")
    markers = list(_MARKER_RE.finditer(raw))
    if not markers:
        raise FormatError("no <...> label markers in output")
    if raw[markers[-1].end() :].strip():
        raise FormatError("unlabeled trailing text after the final marker")
    items: list[tuple[str, LabelAnswer]] = []
    cursor = 0
    for marker in markers:
        segment = raw[cursor : marker.start()].strip()
        if not segment:
            raise FormatError("marker without a preceding segment")
        items.append((segment, _parse_marker(marker.group(1), task)))
        cursor = marker.end()
    return InterleavedParse(items=tuple(items))


@dataclass(frozen=True)
class RawSegmentation:
    text: str
    segments: tuple[str, ...]


def parse_raw_segmentation(raw: str) -> RawSegmentation:
    pieces = raw.split(SEP)
    if len(pieces) < 2:
        raise FormatError("no <SEP> markers in output")
    segments = tuple(p.strip() for p in pieces if p.strip())
    if not segments:
        raise FormatError("<SEP> markers with no text between them")
    return RawSegmentation(text=raw, segments=segments)


@dataclass(frozen=True)
class PredictedSegmentation:
    """Predicted boundaries over the ORIGINAL essay tokens.

    boundaries are the inner cut points; together with the implied 0 and
    token_count they partition [0, token_count) into one span per argument.
    """

    essay_id: str
    token_count: int
    boundaries: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.token_count <= 0:
            raise ValueError("token_count must be positive")
        previous = 0
        for b in self.boundaries:
            if not previous < b < self.token_count:
                raise ValueError(f"boundaries must be strictly increasing inside (0, {self.token_count})")
            previous = b

    @property
    def spans(self) -> tuple[tuple[int, int], ...]:
        edges = (0, *self.boundaries, self.token_count)
        return tuple(zip(edges, edges[1:]))


ALIGNMENT_EDIT_BUDGET = 0.40  # rejection when edits exceed 40% of essay tokens


def align_segmentation(original: Essay, raw: str | RawSegmentation) -> PredictedSegmentation:
    """Project noisy <SEP> positions back onto the original token sequence.

    Markers are removed, their positions kept as output-token boundaries, and
    each boundary is mapped through a minimum-edit-distance alignment to the
    nearest original boundary at or after its aligned position. Duplicate
    projections collapse; the final boundary at token_count is implied.
    """
    text = raw.text if isinstance(raw, RawSegmentation) else raw
    parse_raw_segmentation(text)  # structural checks: >=1 marker, some text
    if original.token_count == 0:
        raise AlignmentReject("cannot align against an empty essay")

    pieces = text.split(SEP)
    piece_tokens = [piece.split() for piece in pieces]
    out_tokens = [tok for toks in piece_tokens for tok in toks]
    if not out_tokens:
        raise FormatError("<SEP> markers with no text between them")
    marker_positions: list[int] = []
    consumed = 0
    for toks in piece_tokens[:-1]:
        consumed += len(toks)
        marker_positions.append(consumed)

    ref_tokens = [t.text for t in original.tokens]
    projected, cost = project_boundaries(ref_tokens, out_tokens, marker_positions)
    if cost > ALIGNMENT_EDIT_BUDGET * original.token_count:
        raise AlignmentReject(
            f"{cost} token edits against {original.token_count} original tokens "
            f"exceeds the {ALIGNMENT_EDIT_BUDGET:.0%} budget"
        )
    inner = tuple(sorted({b for b in projected if 0 < b < original.token_count}))
    return PredictedSegmentation(
        essay_id=original.id, token_count=original.token_count, boundaries=inner
    )


Validator = Callable[[str], object]


def make_validator(
    task: TaskKind,
    mode: str,
    original: Essay,
    expected_segments: int | None = None,
) -> Validator:
    """Composite checker the retry loop runs on each raw completion.

    Segmentation validates by alignment acceptance; few-shot classification
    by the JSON answer object; fine-tuned classification by the interleaved
    echo, including the marker count when expected_segments is given.
    """
    if task is TaskKind.SEGMENTATION:
        def validate_segmentation(raw: str) -> PredictedSegmentation:
            return align_segmentation(original, raw)

        return validate_segmentation

    if mode == "few_shot":
        def validate_label_object(raw: str) -> LabelAnswer:
            return parse_label_object(raw, task)

        return validate_label_object

    if mode == "fine_tuned":
        def validate_interleaved(raw: str) -> InterleavedParse:
            parsed = parse_interleaved(raw, task)
            if expected_segments is not None and len(parsed) != expected_segments:
                raise FormatError(
                    f"expected {expected_segments} labeled segments, got {len(parsed)}"
                )
            return parsed

        return validate_interleaved

    raise ValueError(f"unknown mode {mode!r}")
