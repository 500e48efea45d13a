"""Fuzzy lexical matching: normalized Indel similarity, partial-ratio
alignment of a needle inside a haystack, per-pair match ratios, and
threshold curves.

Scoring is character-level. The Indel distance between two strings allows
only insertions and deletions, so ``D(a, b) = len(a) + len(b) - 2 * LCS(a, b)``
and the normalized similarity is ``1 - D / (len(a) + len(b))``.

Partial-ratio alignment maximizes that similarity over haystack windows of
length 1 through ``2 * len(needle)`` (clipped to the haystack). The search is
exact: a dynamic program extends every window start simultaneously, one
window length per step, so the result always equals brute-force window
enumeration. Ties are broken toward the smallest start, then the shortest
window.

Text is normalized (Unicode NFC, whitespace collapsed) before scoring;
alignment offsets index the normalized haystack.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Segment, segment as segment_trace

__all__ = [
    "Alignment",
    "EvalConfig",
    "MatchCurve",
    "indel_similarity",
    "partial_ratio_alignment",
    "match_ratio",
    "match_curve",
    "normalize_text",
]

_WS_RUN = re.compile(r"\s+")

DEFAULT_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(11))


def normalize_text(text: str) -> str:
    """NFC-normalize and collapse whitespace runs; stabilizes scores across
    serialization round-trips."""
    return _WS_RUN.sub(" ", unicodedata.normalize("NFC", text)).strip()


@dataclass(frozen=True)
class Alignment:
    """Best-scoring haystack window for a needle.

    ``hay_start``/``hay_end`` are character offsets into the *normalized*
    haystack.
    """

    score: float
    hay_start: int
    hay_end: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score out of range: {self.score}")
        if not 0 <= self.hay_start <= self.hay_end:
            raise ValueError(f"invalid window [{self.hay_start}, {self.hay_end})")


@dataclass(frozen=True)
class EvalConfig:
    """Threshold grid and segmentation granularity for lexical evaluation.

    ``tau`` is the similarity floor quoted in summary reports (the level at
    which a reformulation still counts as faithful).
    """

    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    granularity: str = "sentence"
    tau: float = 0.7

    def __post_init__(self) -> None:
        if not self.thresholds:
            raise ValueError("threshold grid must be nonempty")
        if any(not 0.0 <= t <= 1.0 for t in self.thresholds):
            raise ValueError("thresholds must lie in [0, 1]")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError("thresholds must be strictly ascending")
        if self.granularity not in ("sentence", "step"):
            raise ValueError(f"unknown granularity '{self.granularity}'")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")


@dataclass(frozen=True)
class MatchCurve:
    """Match-ratio values over an ascending threshold grid."""

    points: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        thresholds = [t for t, _ in self.points]
        ratios = [r for _, r in self.points]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("curve thresholds must be strictly ascending")
        if any(not 0.0 <= v <= 1.0 for v in thresholds + ratios):
            raise ValueError("curve values must lie in [0, 1]")
        if any(r2 > r1 for r1, r2 in zip(ratios, ratios[1:])):
            raise ValueError("match ratio must be nonincreasing in threshold")


def _codepoints(text: str) -> np.ndarray:
    return np.fromiter((ord(c) for c in text), dtype=np.int64, count=len(text))


def _lcs_len(a: np.ndarray, b: np.ndarray) -> int:
    """Length of the longest common subsequence (row-wise DP)."""
    if a.size == 0 or b.size == 0:
        return 0
    if b.size < a.size:  # fewer sequential steps when iterating the shorter string
        a, b = b, a
    row = np.zeros(a.size + 1, dtype=np.int64)
    for ch in b:
        extended = np.maximum(row[1:], row[:-1] + (a == ch))
        row[1:] = np.maximum.accumulate(extended)
    return int(row[-1])


def indel_similarity(a: str, b: str) -> float:
    """Normalized Indel similarity: 1 - distance / (len(a) + len(b)).

    Equals 1 iff the normalized strings are equal; two empty strings score 1.
    """
    a = normalize_text(a)
    b = normalize_text(b)
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    lcs = _lcs_len(_codepoints(a), _codepoints(b))
    return 1.0 - (total - 2 * lcs) / total


def partial_ratio_alignment(needle: str, haystack: str) -> Alignment:
    """Best normalized-Indel similarity of ``needle`` against any haystack
    window of length 1..2*len(needle), with the maximizing window location.

    Raises ``ValueError`` for an empty needle; an empty haystack scores 0 with
    an empty window.
    """
    needle = normalize_text(needle)
    haystack = normalize_text(haystack)
    if not needle:
        raise ValueError("needle must be nonempty")
    if not haystack:
        return Alignment(0.0, 0, 0)

    n = len(needle)
    m = len(haystack)
    max_len = min(2 * n, m)
    nd = _codepoints(needle).astype(np.int32).reshape(-1, 1)
    # pad so hay[s + j - 1] is addressable for every start; the sentinel never
    # matches a real code point
    hay = np.concatenate(
        [_codepoints(haystack).astype(np.int32), np.full(max_len, -1, dtype=np.int32)]
    )

    # lcs_cols[i, s] = LCS(needle[:i], haystack[s : s + j]) after step j
    lcs_cols = np.zeros((n + 1, m), dtype=np.int32)
    eq = np.empty((n, m), dtype=bool)
    ext = np.empty((n, m), dtype=np.int32)
    best_lcs = -1
    best_len = 0
    best_start = 0
    for j in range(1, max_len + 1):
        np.equal(nd, hay[j - 1 : j - 1 + m], out=eq)
        np.add(lcs_cols[:-1], eq, out=ext)
        np.maximum(ext, lcs_cols[1:], out=ext)
        np.maximum.accumulate(ext, axis=0, out=lcs_cols[1:])
        valid = m - j + 1  # starts s with s + j <= m
        finals = lcs_cols[n, :valid]
        s = int(np.argmax(finals))
        lcs = int(finals[s])
        # compare 2*lcs/(n+j) against the incumbent with integer cross products
        if best_lcs < 0 or lcs * (n + best_len) > best_lcs * (n + j) or (
            lcs * (n + best_len) == best_lcs * (n + j) and s < best_start
        ):
            best_lcs, best_len, best_start = lcs, j, s
        elif 2 * n * (n + best_len) < (n + j) * best_lcs * 2 and j >= n:
            # even a perfect window cannot beat the incumbent at longer lengths
            break
    score = 1.0 - (n + best_len - 2 * best_lcs) / (n + best_len)
    return Alignment(score, best_start, best_start + best_len)


def _segment_texts(segments: Sequence[Segment | str]) -> list[str]:
    return [seg.text if isinstance(seg, Segment) else seg for seg in segments]


def segment_scores(segments: Sequence[Segment | str], reformulated: str) -> list[float]:
    """Partial-ratio score of every original segment against a reformulated
    trace."""
    return [partial_ratio_alignment(text, reformulated).score for text in _segment_texts(segments)]


def match_ratio(
    original_segments: Sequence[Segment | str], reformulated: str, threshold: float
) -> float:
    """Fraction of segments whose best window score meets ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    if not original_segments:
        raise ValueError("segment list must be nonempty")
    scores = segment_scores(original_segments, reformulated)
    return sum(1 for s in scores if s >= threshold) / len(scores)


def match_curve(
    corpus_pairs: Sequence[tuple[str, str]], cfg: EvalConfig = EvalConfig()
) -> MatchCurve:
    """Mean match ratio per threshold over (original, reformulated) pairs.

    Each original trace is segmented at ``cfg.granularity``; ratios are
    macro-averaged (per-pair mean). Nonincreasing in threshold by
    construction.
    """
    if not corpus_pairs:
        raise ValueError("corpus_pairs must be nonempty")
    per_pair_scores = []
    for original, reformulated in corpus_pairs:
        segments = segment_trace(original, cfg.granularity)
        if not segments:
            raise ValueError("original trace produced no segments")
        per_pair_scores.append(segment_scores(segments, reformulated))
    points = []
    for threshold in cfg.thresholds:
        ratios = [
            sum(1 for s in scores if s >= threshold) / len(scores) for scores in per_pair_scores
        ]
        points.append((threshold, sum(ratios) / len(ratios)))
    return MatchCurve(tuple(points))
