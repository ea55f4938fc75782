"""Token-sequence alignment for projecting boundaries between noisy texts.

Models asked to echo an essay routinely drop, add, or alter words, so marker
positions in their output cannot be trusted as-is. A minimum-edit-distance
alignment between the reference token sequence and the output token sequence
maps each output boundary onto a reference boundary. Ties resolve to the
boundary at-or-after the aligned position: tokens the output omitted stay in
the segment the marker closed, and hallucinated insertions are absorbed.
"""

from __future__ import annotations

import numpy as np


def _token_ids(ref: list[str], out: list[str]) -> tuple[np.ndarray, np.ndarray]:
    ids: dict[str, int] = {}
    for tok in ref:
        ids.setdefault(tok, len(ids))
    for tok in out:
        ids.setdefault(tok, len(ids))
    a = np.fromiter((ids[t] for t in ref), dtype=np.int32, count=len(ref))
    b = np.fromiter((ids[t] for t in out), dtype=np.int32, count=len(out))
    return a, b


def _edit_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full Levenshtein cost matrix over token ids, shape (n+1, m+1).

    Unit costs for insert/delete/substitute. Rows are vectorized; the in-row
    left-to-right dependency dp[i][j] = min(cand[j], dp[i][j-1] + 1) unrolls
    to a running prefix minimum of (cand[k] - k).
    """
    n, m = len(a), len(b)
    dp = np.empty((n + 1, m + 1), dtype=np.int32)
    dp[0] = np.arange(m + 1, dtype=np.int32)
    cols = np.arange(1, m + 1, dtype=np.int32)
    for i in range(1, n + 1):
        sub = np.where(b == a[i - 1], 0, 1).astype(np.int32)
        cand = np.minimum(dp[i - 1, 1:] + 1, dp[i - 1, :-1] + sub)
        seq = np.concatenate(([np.int32(i)], cand - cols))
        prefix = np.minimum.accumulate(seq)
        dp[i, 0] = i
        dp[i, 1:] = prefix[1:] + cols
    return dp


def _column_maxima(dp: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-column maximum reference index along one canonical optimal path.

    Backtrace preference is deletion, then insertion, then diagonal: edits
    land at the highest output position an optimal path allows, which is
    exactly the at-or-after tie rule for boundary projection.
    """
    n, m = len(a), len(b)
    maxima = np.full(m + 1, -1, dtype=np.int64)
    i, j = n, m
    maxima[j] = i
    while i > 0 or j > 0:
        here = dp[i, j]
        if i > 0 and dp[i - 1, j] + 1 == here:
            i -= 1
        elif j > 0 and dp[i, j - 1] + 1 == here:
            j -= 1
        else:
            sub = 0 if a[i - 1] == b[j - 1] else 1
            assert i > 0 and j > 0 and dp[i - 1, j - 1] + sub == here
            i -= 1
            j -= 1
        maxima[j] = max(maxima[j], i)
    return maxima


def edit_cost(ref: list[str], out: list[str]) -> int:
    """Minimum number of token insertions/deletions/substitutions."""
    a, b = _token_ids(ref, out)
    return int(_edit_matrix(a, b)[len(a), len(b)])


def project_boundaries(
    ref: list[str], out: list[str], boundaries: list[int]
) -> tuple[list[int], int]:
    """Map output-token boundaries onto reference-token boundaries.

    A boundary j sits between output tokens j-1 and j (0 = before the first
    token, len(out) = after the last). Returns the projected reference
    boundaries in input order plus the total edit cost.
    """
    m = len(out)
    for j in boundaries:
        if not 0 <= j <= m:
            raise ValueError(f"boundary {j} outside output token range 0..{m}")
    a, b = _token_ids(ref, out)
    dp = _edit_matrix(a, b)
    maxima = _column_maxima(dp, a, b)
    return [int(maxima[j]) for j in boundaries], int(dp[len(a), m])
