"""Closed label vocabularies for argument components.

Argument types and quality ratings are fixed sets; anything outside them is a
parse error, never a silent passthrough. Parsing is case- and whitespace-
tolerant, output is always canonical.
"""

from __future__ import annotations

import enum


class LabelError(ValueError):
    """A string does not belong to the closed label vocabulary."""


class ArgType(enum.Enum):
    LEAD = "Lead"
    POSITION = "Position"
    CLAIM = "Claim"
    COUNTERCLAIM = "Counterclaim"
    REBUTTAL = "Rebuttal"
    EVIDENCE = "Evidence"
    CONCLUDING_STATEMENT = "Concluding Statement"

    def __str__(self) -> str:
        return self.value


class QualityLabel(enum.Enum):
    INEFFECTIVE = "Ineffective"
    ADEQUATE = "Adequate"
    EFFECTIVE = "Effective"

    def __str__(self) -> str:
        return self.value


def _fold(raw: str) -> str:
    # Collapse internal whitespace runs so "Concluding  Statement" still parses.
    return " ".join(raw.split()).casefold()


_ARG_TYPE_BY_KEY = {_fold(t.value): t for t in ArgType}
# Common single-word variant without the internal space.
_ARG_TYPE_BY_KEY["concludingstatement"] = ArgType.CONCLUDING_STATEMENT

_QUALITY_BY_KEY = {_fold(q.value): q for q in QualityLabel}


def parse_arg_type(raw: str) -> ArgType:
    """Parse an argument type name; raises LabelError for unknown strings."""
    key = _fold(raw)
    if key not in _ARG_TYPE_BY_KEY:
        raise LabelError(f"unknown argument type: {raw!r}")
    return _ARG_TYPE_BY_KEY[key]


def parse_quality(raw: str) -> QualityLabel:
    """Parse a quality rating; raises LabelError for unknown strings."""
    key = _fold(raw)
    if key not in _QUALITY_BY_KEY:
        raise LabelError(f"unknown quality label: {raw!r}")
    return _QUALITY_BY_KEY[key]


ARG_TYPE_NAMES: tuple[str, ...] = tuple(t.value for t in ArgType)
QUALITY_NAMES: tuple[str, ...] = tuple(q.value for q in QualityLabel)

# Pseudo-class for predicted/gold spans that fail the mutual-overlap match.
ECHEC = "Echec"
