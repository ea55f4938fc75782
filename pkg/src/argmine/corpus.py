"""Corpus ingestion for the Feedback Prize effectiveness data.

The annotation table carries discourse text but no character offsets, so every
row is recovered by whitespace-tolerant search inside its essay, left to
right. Essays are tokenized by plain whitespace; all downstream span
arithmetic is over token indices into the (optionally spelling-normalized)
essay text.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .labels import ArgType, LabelError, QualityLabel, parse_arg_type, parse_quality

ANNOTATION_COLUMNS = (
    "discourse_id",
    "essay_id",
    "discourse_text",
    "discourse_type",
    "discourse_effectiveness",
)

SPLIT_NAMES = ("train", "validation", "test")


class NotLocatedError(ValueError):
    """Discourse text could not be found in its essay, even whitespace-tolerantly."""


class CorpusFormatError(ValueError):
    """Input files violate the documented corpus schema."""


@dataclass(frozen=True)
class Token:
    text: str
    start: int  # char offset, half-open over the owning text
    end: int


@dataclass(frozen=True)
class Essay:
    id: str
    raw_text: str
    normalized_text: str
    tokens: tuple[Token, ...]

    @property
    def token_count(self) -> int:
        return len(self.tokens)

    def token_range_text(self, start_token: int, end_token: int) -> str:
        """Slice of normalized_text covering tokens [start_token, end_token)."""
        if start_token >= end_token:
            return ""
        return self.normalized_text[
            self.tokens[start_token].start : self.tokens[end_token - 1].end
        ]


@dataclass(frozen=True)
class GoldSpan:
    essay_id: str
    index: int
    start_token: int
    end_token: int  # half-open
    arg_type: ArgType
    quality: QualityLabel


@dataclass(frozen=True)
class AnnotatedEssay:
    essay: Essay
    spans: tuple[GoldSpan, ...]


@dataclass(frozen=True)
class CorpusSplit:
    name: str
    essays: tuple[AnnotatedEssay, ...]

    @property
    def span_count(self) -> int:
        return sum(len(e.spans) for e in self.essays)


@dataclass
class LoadReport:
    """Everything that went wrong (or was skipped) during a load.

    Nothing is silently dropped: each unlocatable, malformed, or duplicate
    annotation row lands here with its discourse_id and a reason.
    """

    split_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    row_errors: list[tuple[str, str]] = field(default_factory=list)
    essay_errors: list[tuple[str, str]] = field(default_factory=list)
    orphaned_rows: list[str] = field(default_factory=list)
    degenerate_spans: list[tuple[str, int]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.row_errors or self.essay_errors or self.orphaned_rows)


_TOKEN_RE = re.compile(r"\S+")


def tokenize(text: str) -> tuple[Token, ...]:
    """Split on Unicode whitespace; every maximal non-whitespace run is one token."""
    return tuple(Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text))


def locate_span(essay_text: str, discourse_text: str, search_from: int = 0) -> tuple[int, int]:
    """First occurrence of discourse_text at or after search_from.

    Comparison is whitespace-tolerant: any whitespace run in the needle
    matches any whitespace run in the essay. The returned char range starts
    and ends on non-whitespace characters.
    """
    if not (0 <= search_from <= len(essay_text)):
        raise ValueError(f"search_from {search_from} outside essay of length {len(essay_text)}")
    chunks = discourse_text.split()
    if not chunks:
        raise NotLocatedError("discourse text is empty or whitespace-only")
    pattern = re.compile(r"\s+".join(re.escape(c) for c in chunks))
    m = pattern.search(essay_text, search_from)
    if m is None:
        raise NotLocatedError(f"could not locate {discourse_text[:60]!r} at offset >= {search_from}")
    return m.start(), m.end()


def char_range_to_token_range(tokens: tuple[Token, ...], start: int, end: int) -> tuple[int, int]:
    """Smallest token range covering every token that intersects [start, end)."""
    start_token = next((i for i, t in enumerate(tokens) if t.end > start), len(tokens))
    end_token = next((i for i in range(len(tokens), 0, -1) if tokens[i - 1].start < end), 0)
    return start_token, end_token


def make_essay(essay_id: str, raw_text: str, normalized_text: str | None = None) -> Essay:
    norm = raw_text if normalized_text is None else normalized_text
    return Essay(id=essay_id, raw_text=raw_text, normalized_text=norm, tokens=tokenize(norm))


@dataclass
class _Row:
    discourse_id: str
    essay_id: str
    discourse_text: str
    discourse_type: str
    discourse_effectiveness: str


def _read_annotations(annotations: Path) -> list[_Row]:
    with annotations.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ANNOTATION_COLUMNS if c not in header]
        if missing:
            raise CorpusFormatError(f"annotation table missing columns: {', '.join(missing)}")
        return [_Row(*(row[c] for c in ANNOTATION_COLUMNS)) for row in reader]


def _read_split_manifest(manifest: Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    with manifest.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise CorpusFormatError("split manifest is empty")
    start = 1 if [c.strip().lower() for c in rows[0][:2]] == ["essay_id", "split"] else 0
    for row in rows[start:]:
        if len(row) < 2:
            raise CorpusFormatError(f"split manifest row too short: {row!r}")
        essay_id, split = row[0].strip(), row[1].strip().lower()
        if split not in SPLIT_NAMES:
            raise CorpusFormatError(f"unknown split name {split!r} for essay {essay_id}")
        mapping[essay_id] = split
    return mapping


def build_annotated_essay(
    essay: Essay,
    rows: list[tuple[str, str, ArgType, QualityLabel]],
    report: LoadReport,
) -> AnnotatedEssay:
    """Locate each (discourse_id, text, type, quality) row inside the essay.

    Rows are located sequentially so repeated sentences resolve left to right;
    a row that only matches before the search cursor is retried from the top
    and accepted if it does not overlap an already-placed span.
    """
    text = essay.normalized_text
    placed: list[tuple[int, int, str, ArgType, QualityLabel]] = []
    cursor = 0
    for discourse_id, discourse_text, arg_type, quality in rows:
        try:
            start, end = locate_span(text, discourse_text, cursor)
        except NotLocatedError:
            try:
                start, end = locate_span(text, discourse_text, 0)
            except NotLocatedError:
                report.row_errors.append((discourse_id, "discourse text not located in essay"))
                continue
            if any(start < p_end and p_start < end for p_start, p_end, *_ in placed):
                report.row_errors.append(
                    (discourse_id, "located range overlaps a previously placed span")
                )
                continue
        placed.append((start, end, discourse_id, arg_type, quality))
        cursor = max(cursor, end)

    placed.sort(key=lambda p: p[0])
    spans: list[GoldSpan] = []
    prev_end_token = 0
    for start, end, discourse_id, arg_type, quality in placed:
        start_token, end_token = char_range_to_token_range(essay.tokens, start, end)
        # Adjacent annotations may share a boundary token; keep spans disjoint.
        start_token = max(start_token, prev_end_token)
        if start_token >= end_token:
            report.row_errors.append((discourse_id, "span degenerates to an empty token range"))
            continue
        spans.append(
            GoldSpan(
                essay_id=essay.id,
                index=len(spans),
                start_token=start_token,
                end_token=end_token,
                arg_type=arg_type,
                quality=quality,
            )
        )
        prev_end_token = end_token
    return AnnotatedEssay(essay=essay, spans=tuple(spans))


def load_corpus(
    essay_dir: str | Path,
    annotations: str | Path,
    split_manifest: str | Path | None = None,
    normalizer=None,
) -> tuple[list[CorpusSplit], LoadReport]:
    """Load essays and annotations into per-split AnnotatedEssay lists.

    Annotation rows referencing a missing essay file are reported as orphaned.
    Essays absent from the split manifest (when one is given) go to "test".
    When a normalizer is supplied, each essay is spelling-normalized and its
    gold spans re-projected (see spelling.normalize_essay).
    """
    from .spelling import normalize_essay  # local import: spelling depends on corpus

    essay_dir = Path(essay_dir)
    annotations = Path(annotations)
    report = LoadReport()
    if not essay_dir.is_dir():
        raise CorpusFormatError(f"essay directory not found: {essay_dir}")
    rows = _read_annotations(annotations)
    split_of = _read_split_manifest(Path(split_manifest)) if split_manifest else {}

    by_essay: dict[str, list[tuple[str, str, ArgType, QualityLabel]]] = {}
    seen_ids: set[str] = set()
    for row in rows:
        if row.discourse_id in seen_ids:
            report.row_errors.append((row.discourse_id, "duplicate discourse_id"))
            continue
        seen_ids.add(row.discourse_id)
        try:
            arg_type = parse_arg_type(row.discourse_type)
            quality = parse_quality(row.discourse_effectiveness)
        except LabelError as exc:
            report.row_errors.append((row.discourse_id, str(exc)))
            continue
        by_essay.setdefault(row.essay_id, []).append(
            (row.discourse_id, row.discourse_text, arg_type, quality)
        )

    splits: dict[str, list[AnnotatedEssay]] = {name: [] for name in SPLIT_NAMES}
    for essay_id in sorted(by_essay):
        path = essay_dir / f"{essay_id}.txt"
        if not path.is_file():
            report.essay_errors.append((essay_id, "essay file missing"))
            report.orphaned_rows.extend(r[0] for r in by_essay[essay_id])
            continue
        # utf-8-sig: a BOM would otherwise glue itself to the first token
        # and shift every located span.
        raw_text = path.read_text(encoding="utf-8-sig")
        if normalizer is None:
            annotated = build_annotated_essay(make_essay(essay_id, raw_text), by_essay[essay_id], report)
        else:
            plain = build_annotated_essay(make_essay(essay_id, raw_text), by_essay[essay_id], report)
            annotated = normalize_essay(essay_id, raw_text, normalizer, plain.spans, report)
        split_name = split_of.get(essay_id, "test")
        splits[split_name].append(annotated)

    result = [
        CorpusSplit(name=name, essays=tuple(essays))
        for name, essays in splits.items()
        if essays
    ]
    for split in result:
        report.split_counts[split.name] = (len(split.essays), split.span_count)
    return result, report


# --- cached corpus bundle -------------------------------------------------

BUNDLE_VERSION = 1


def save_bundle(splits: list[CorpusSplit], path: str | Path) -> None:
    """Write a corpus bundle; tokens are recomputed on load, never stored."""
    payload = {
        "kind": "argmine-corpus",
        "version": BUNDLE_VERSION,
        "splits": [
            {
                "name": split.name,
                "essays": [
                    {
                        "id": ae.essay.id,
                        "raw_text": ae.essay.raw_text,
                        "normalized_text": ae.essay.normalized_text,
                        "spans": [
                            {
                                "start_token": s.start_token,
                                "end_token": s.end_token,
                                "type": s.arg_type.value,
                                "quality": s.quality.value,
                            }
                            for s in ae.spans
                        ],
                    }
                    for ae in split.essays
                ],
            }
            for split in splits
        ],
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=1), encoding="utf-8")


def load_bundle(path: str | Path) -> list[CorpusSplit]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") != "argmine-corpus":
        raise CorpusFormatError(f"{path}: not a corpus bundle")
    splits = []
    for split_obj in payload["splits"]:
        essays = []
        for essay_obj in split_obj["essays"]:
            essay = make_essay(essay_obj["id"], essay_obj["raw_text"], essay_obj["normalized_text"])
            spans = tuple(
                GoldSpan(
                    essay_id=essay.id,
                    index=i,
                    start_token=s["start_token"],
                    end_token=s["end_token"],
                    arg_type=parse_arg_type(s["type"]),
                    quality=parse_quality(s["quality"]),
                )
                for i, s in enumerate(essay_obj["spans"])
            )
            essays.append(AnnotatedEssay(essay=essay, spans=spans))
        splits.append(CorpusSplit(name=split_obj["name"], essays=tuple(essays)))
    return splits


def get_split(splits: list[CorpusSplit], name: str) -> CorpusSplit:
    for split in splits:
        if split.name == name:
            return split
    raise KeyError(f"split {name!r} not in corpus (have: {[s.name for s in splits]})")
