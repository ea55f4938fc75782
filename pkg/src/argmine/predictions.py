"""Run artifacts: one line-delimited JSON predictions file per run.

The file is self-describing (header line with the config echo) and carries
everything evaluation needs (span ranges, labels, attempt counts, discard
flags), so reports can be recomputed offline without any model access.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

PREDICTIONS_KIND = "argmine-predictions"
PREDICTIONS_VERSION = 1


class PredictionsFormatError(ValueError):
    """Schema violation in a predictions file, with the offending line."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class SpanPrediction:
    start_token: int
    end_token: int
    arg_type: str | None = None
    quality: str | None = None
    discarded: bool = False
    attempts: int = 0

    def to_obj(self) -> dict:
        return {
            "start": self.start_token,
            "end": self.end_token,
            "type": self.arg_type,
            "quality": self.quality,
            "discarded": self.discarded,
            "attempts": self.attempts,
        }

    @staticmethod
    def from_obj(obj: dict) -> "SpanPrediction":
        return SpanPrediction(
            start_token=obj["start"],
            end_token=obj["end"],
            arg_type=obj.get("type"),
            quality=obj.get("quality"),
            discarded=bool(obj.get("discarded", False)),
            attempts=int(obj.get("attempts", 0)),
        )


@dataclass(frozen=True)
class EssayPrediction:
    essay_id: str
    spans: tuple[SpanPrediction, ...] = ()
    essay_discarded: bool = False
    discard_stage: str | None = None  # "segmentation" | "classification"
    transport_failed: bool = False
    segmentation_attempts: int = 0

    @property
    def usable(self) -> bool:
        return not self.essay_discarded and not self.transport_failed and bool(self.spans)

    def to_obj(self) -> dict:
        return {
            "essay_id": self.essay_id,
            "essay_discarded": self.essay_discarded,
            "discard_stage": self.discard_stage,
            "transport_failed": self.transport_failed,
            "segmentation_attempts": self.segmentation_attempts,
            "spans": [s.to_obj() for s in self.spans],
        }

    @staticmethod
    def from_obj(obj: dict) -> "EssayPrediction":
        return EssayPrediction(
            essay_id=obj["essay_id"],
            spans=tuple(SpanPrediction.from_obj(s) for s in obj["spans"]),
            essay_discarded=bool(obj.get("essay_discarded", False)),
            discard_stage=obj.get("discard_stage"),
            transport_failed=bool(obj.get("transport_failed", False)),
            segmentation_attempts=int(obj.get("segmentation_attempts", 0)),
        )


@dataclass
class RunPredictions:
    config: dict
    run_index: int
    essays: list[EssayPrediction] = field(default_factory=list)

    def by_id(self) -> dict[str, EssayPrediction]:
        return {e.essay_id: e for e in self.essays}


def write_predictions(run: RunPredictions, path: str | Path) -> None:
    header = {
        "kind": PREDICTIONS_KIND,
        "version": PREDICTIONS_VERSION,
        "run_index": run.run_index,
        "config": run.config,
    }
    lines = [json.dumps(header, ensure_ascii=False, sort_keys=True)]
    lines.extend(
        json.dumps(essay.to_obj(), ensure_ascii=False, sort_keys=True) for essay in run.essays
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_predictions(path: str | Path) -> RunPredictions:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise PredictionsFormatError(1, "empty predictions file")

    def parse_line(number: int, line: str) -> dict:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictionsFormatError(number, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise PredictionsFormatError(number, "expected a JSON object")
        return obj

    header = parse_line(1, lines[0])
    if header.get("kind") != PREDICTIONS_KIND:
        raise PredictionsFormatError(1, f"not a predictions file (kind={header.get('kind')!r})")
    if "config" not in header or "run_index" not in header:
        raise PredictionsFormatError(1, "header missing config or run_index")
    run = RunPredictions(config=header["config"], run_index=header["run_index"])
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        obj = parse_line(number, line)
        try:
            run.essays.append(EssayPrediction.from_obj(obj))
        except (KeyError, TypeError, ValueError) as exc:
            raise PredictionsFormatError(number, f"bad essay record: {exc}") from exc
    return run
