"""Optional spelling normalization with gold-span re-projection.

Student essays are full of spelling errors that models try to silently fix,
which breaks text echo comparisons. A normalizer is any pure str -> str
callable; the default is identity and an HTTP-backed corrector is provided
for a LanguageTool-style service (request: plain text body, response:
corrected plain text). Gold token ranges survive normalization via the same
edit-distance boundary projection used for model output.
"""

from __future__ import annotations

from typing import Callable, Protocol

import httpx

from .alignment import project_boundaries
from .corpus import AnnotatedEssay, GoldSpan, LoadReport, make_essay, tokenize

TextNormalizer = Callable[[str], str]


class SupportsNormalize(Protocol):
    def __call__(self, text: str) -> str: ...


def identity_normalizer(text: str) -> str:
    return text


class HttpNormalizer:
    """Client for a plain-text spelling-correction service."""

    def __init__(self, url: str, timeout: float = 30.0, transport: httpx.BaseTransport | None = None):
        self.url = url
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def __call__(self, text: str) -> str:
        response = self._client.post(
            self.url, content=text.encode("utf-8"), headers={"Content-Type": "text/plain; charset=utf-8"}
        )
        response.raise_for_status()
        return response.text


def normalize_essay(
    essay_id: str,
    raw_text: str,
    normalizer: TextNormalizer,
    gold: tuple[GoldSpan, ...],
    report: LoadReport | None = None,
) -> AnnotatedEssay:
    """Normalize an essay and re-project its gold token ranges.

    The incoming spans are token ranges over raw_text's whitespace tokens.
    Normalizer failures fall back to identity with a warning; spans whose
    projection collapses to an empty range are excluded and counted as
    degenerate, never kept as empty ranges.
    """
    report = report if report is not None else LoadReport()
    try:
        normalized = normalizer(raw_text)
    except Exception as exc:  # pluggable code: any failure degrades to identity
        report.warnings.append(f"{essay_id}: normalizer failed ({exc}); kept raw text")
        normalized = raw_text

    if normalized == raw_text:
        essay = make_essay(essay_id, raw_text, raw_text)
        return AnnotatedEssay(essay=essay, spans=tuple(
            GoldSpan(essay_id, s.index, s.start_token, s.end_token, s.arg_type, s.quality)
            for s in gold
        ))

    essay = make_essay(essay_id, raw_text, normalized)
    raw_tokens = [t.text for t in tokenize(raw_text)]
    norm_tokens = [t.text for t in essay.tokens]
    raw_boundaries = sorted({b for s in gold for b in (s.start_token, s.end_token)})
    projected, _cost = project_boundaries(norm_tokens, raw_tokens, raw_boundaries)
    mapping = dict(zip(raw_boundaries, projected))

    spans: list[GoldSpan] = []
    for s in gold:
        start, end = mapping[s.start_token], mapping[s.end_token]
        if start >= end:
            report.degenerate_spans.append((essay_id, s.index))
            report.warnings.append(
                f"{essay_id}: span {s.index} vanished under normalization; excluded"
            )
            continue
        spans.append(GoldSpan(essay_id, len(spans), start, end, s.arg_type, s.quality))
    return AnnotatedEssay(essay=essay, spans=tuple(spans))
