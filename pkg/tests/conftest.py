from __future__ import annotations

import random
from pathlib import Path

import pytest

from argmine.corpus import (
    AnnotatedEssay,
    CorpusSplit,
    GoldSpan,
    get_split,
    load_corpus,
    make_essay,
)
from argmine.labels import ArgType, QualityLabel

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "corpus"

WORD_BANK = (
    "the a school students teacher essay because reading homework library "
    "garden summer think believe really always never maybe every some people "
    "want to learn write books pages study class home friday weekend lesson "
    "time help good better best grow plant story finish start open keep"
).split()

TYPES = list(ArgType)
QUALITIES = list(QualityLabel)


@pytest.fixture(scope="session")
def fixture_paths() -> dict[str, Path]:
    return {
        "essays": FIXTURE_DIR / "essays",
        "annotations": FIXTURE_DIR / "annotations.csv",
        "splits": FIXTURE_DIR / "splits.csv",
    }


@pytest.fixture(scope="session")
def fixture_corpus(fixture_paths) -> list[CorpusSplit]:
    splits, report = load_corpus(
        fixture_paths["essays"], fixture_paths["annotations"], fixture_paths["splits"]
    )
    assert report.ok, (report.row_errors, report.essay_errors, report.orphaned_rows)
    return splits


@pytest.fixture(scope="session")
def train_split(fixture_corpus) -> CorpusSplit:
    return get_split(fixture_corpus, "train")


@pytest.fixture(scope="session")
def isaac(fixture_corpus) -> AnnotatedEssay:
    return get_split(fixture_corpus, "test").essays[0]


def random_annotated_essay(rng: random.Random, essay_id: str, n_spans: int | None = None) -> AnnotatedEssay:
    """Synthetic essay whose gold spans tile the token sequence."""
    n_spans = n_spans if n_spans is not None else rng.randint(1, 6)
    span_lengths = [rng.randint(3, 12) for _ in range(n_spans)]
    words = [rng.choice(WORD_BANK) for _ in range(sum(span_lengths))]
    essay = make_essay(essay_id, " ".join(words))
    spans = []
    cursor = 0
    for i, length in enumerate(span_lengths):
        spans.append(
            GoldSpan(
                essay_id=essay_id,
                index=i,
                start_token=cursor,
                end_token=cursor + length,
                arg_type=rng.choice(TYPES),
                quality=rng.choice(QUALITIES),
            )
        )
        cursor += length
    return AnnotatedEssay(essay=essay, spans=tuple(spans))


def random_corpus_split(rng: random.Random, name: str, n_essays: int) -> CorpusSplit:
    essays = tuple(
        random_annotated_essay(rng, f"{name.upper()}{i:03d}") for i in range(n_essays)
    )
    return CorpusSplit(name=name, essays=essays)


def gold_ranges(annotated: AnnotatedEssay) -> list[tuple[int, int]]:
    return [(s.start_token, s.end_token) for s in annotated.spans]


def noisy_sep_rendering(
    rng: random.Random, annotated: AnnotatedEssay, n_edits: int
) -> tuple[str, list[int]]:
    """Essay rendered with <SEP> after each gold span, with up to n_edits
    single-token insertions/deletions applied away from span boundaries.

    Edits only touch segment interiors (>= 2 tokens from either end), so a
    correct alignment must project every marker back to the clean boundary.
    Returns the noisy text and the expected inner boundaries.
    """
    tokens = [t.text for t in annotated.essay.tokens]
    segments = [list(tokens[s.start_token : s.end_token]) for s in annotated.spans]
    applied = 0
    attempts = 0
    while applied < n_edits and attempts < 50 * max(1, n_edits):
        attempts += 1
        seg = rng.choice(segments)
        if len(seg) < 5:
            continue
        pos = rng.randint(2, len(seg) - 3)
        if rng.random() < 0.5:
            del seg[pos]
        else:
            seg.insert(pos, rng.choice(WORD_BANK))
        applied += 1
    text = "".join(" ".join(seg) + " <SEP> " for seg in segments).rstrip()
    inner = [s.end_token for s in annotated.spans[:-1]]
    return text, inner
