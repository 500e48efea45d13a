"""Self-talk detection and term-frequency detectability.

Self-talk is the first-person, colloquial layer of a reasoning trace ("Hmm,"
"Wait," "Let's", ...): words that carry little reasoning content but shift
the training signal. This module finds them, counts them, strips the
interjection subset deterministically, and turns term frequencies into a
threshold classifier with F1/ROC/TPR-at-FPR metrics.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import SelfTalkError

__all__ = [
    "SelfTalkLexicon",
    "TermFrequencyReport",
    "DetectReport",
    "ORIGINAL_LIKE",
    "REFORMULATED_LIKE",
    "find_selftalk",
    "term_frequency",
    "classify_by_threshold",
    "classifier_metrics",
    "strip_selftalk_baseline",
    "strip_token",
]

ORIGINAL_LIKE = "original_like"
REFORMULATED_LIKE = "reformulated_like"

DEFAULT_KEYWORDS = frozenset({
    "hmm", "wait", "okay", "ok", "oh", "alright",
    "let's", "lets", "let", "us",
    "i", "i'm", "i'll", "i've", "me", "my",
    "we", "we're",
})

# standalone discourse interjections safe to delete outright
_INTERJECTIONS = frozenset({"hmm", "wait", "okay", "oh", "alright"})

_WORD = re.compile(r"[A-Za-z]+(?:['’][A-Za-z]+)*")
_STRIP_CHARS = string.punctuation + string.whitespace + "‘’“”…"


def strip_token(token: str) -> str:
    """Lowercase a token and strip surrounding punctuation/whitespace;
    curly apostrophes fold to ASCII so "let's" variants compare equal."""
    return token.strip(_STRIP_CHARS).replace("’", "'").lower()


@dataclass(frozen=True)
class SelfTalkLexicon:
    """Immutable set of lowercase self-talk word forms."""

    keywords: frozenset[str]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise SelfTalkError("lexicon must be nonempty")
        for word in self.keywords:
            if word != word.lower():
                raise SelfTalkError(f"lexicon entries must be lowercase: {word!r}")
            if any(c.isspace() for c in word):
                raise SelfTalkError(f"lexicon entries must not contain whitespace: {word!r}")
        object.__setattr__(self, "keywords", frozenset(self.keywords))

    @classmethod
    def default(cls) -> "SelfTalkLexicon":
        return cls(DEFAULT_KEYWORDS)

    @classmethod
    def from_file(cls, path: str | Path) -> "SelfTalkLexicon":
        """Read one keyword per line; ``#`` starts a comment."""
        keywords = set()
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                word = line.split("#", 1)[0].strip()
                if word:
                    keywords.add(word.lower())
        if not keywords:
            raise SelfTalkError(f"lexicon file {path} contains no keywords")
        return cls(frozenset(keywords))

    @property
    def interjections(self) -> frozenset[str]:
        return self.keywords & _INTERJECTIONS


def find_selftalk(text: str, lexicon: SelfTalkLexicon | None = None) -> list[tuple[int, int]]:
    """Spans of whole-word, case-insensitive lexicon matches, in order.

    Word tokens include apostrophe forms ("let's", "i'm"); substrings of
    longer words never match ("waiter" does not hit "wait").
    """
    lexicon = lexicon or SelfTalkLexicon.default()
    spans = []
    for match in _WORD.finditer(text):
        if match.group().replace("’", "'").lower() in lexicon.keywords:
            spans.append((match.start(), match.end()))
    return spans


@dataclass(frozen=True)
class TermFrequencyReport:
    """Lexicon hit rate among the word tokens of a text."""

    hit_count: int
    word_count: int
    frequency: float


def term_frequency(text: str, lexicon: SelfTalkLexicon | None = None) -> TermFrequencyReport:
    """Count whitespace-delimited word tokens (after stripping surrounding
    punctuation; symbol-only tokens do not count) and the lexicon hits among
    them. Empty text reports frequency 0."""
    lexicon = lexicon or SelfTalkLexicon.default()
    words = [w for w in (strip_token(tok) for tok in text.split()) if w]
    hits = sum(1 for w in words if w in lexicon.keywords)
    if not words:
        return TermFrequencyReport(0, 0, 0.0)
    return TermFrequencyReport(hits, len(words), hits / len(words))


def classify_by_threshold(frequency: float, threshold: float) -> str:
    """original_like iff frequency >= threshold (originals are the
    high-frequency class; ties go to original_like)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    return ORIGINAL_LIKE if frequency >= threshold else REFORMULATED_LIKE


@dataclass(frozen=True)
class DetectReport:
    """Threshold-classifier quality on scored examples.

    ``roc`` points are (fpr, tpr) sorted by fpr and always include (0, 0) and
    (1, 1); ``tpr_at_fpr`` is the best TPR among thresholds whose FPR stays
    within ``fpr_budget``.
    """

    f1: float
    roc: tuple[tuple[float, float], ...]
    tpr_at_fpr: float
    fpr_budget: float
    threshold_used: float

    def __post_init__(self) -> None:
        if any(not (0.0 <= f <= 1.0 and 0.0 <= t <= 1.0) for f, t in self.roc):
            raise SelfTalkError("ROC coordinates must lie in [0, 1]")
        if any(b < a for (a, _), (b, _) in zip(self.roc, self.roc[1:])):
            raise SelfTalkError("ROC points must be sorted by FPR")
        if (0.0, 0.0) not in self.roc or (1.0, 1.0) not in self.roc:
            raise SelfTalkError("ROC must include (0,0) and (1,1)")


def _confusion(
    scores: Sequence[tuple[float, str]], threshold: float
) -> tuple[int, int, int, int]:
    tp = fp = fn = tn = 0
    for score, label in scores:
        predicted_positive = score >= threshold
        actual_positive = label == ORIGINAL_LIKE
        if predicted_positive and actual_positive:
            tp += 1
        elif predicted_positive:
            fp += 1
        elif actual_positive:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def classifier_metrics(
    scores: Iterable[tuple[float, str]], fpr_budget: float = 0.01
) -> DetectReport:
    """Sweep all distinct score thresholds (predict original_like iff
    score >= threshold) and report best-threshold F1, the ROC, and TPR at the
    FPR budget.

    The positive class is original_like. Both classes must be present, else
    "ROC undefined" is raised. When both classes share one identical score the
    sweep degenerates to the all-positive classifier and its F1 is reported
    (no error). Among F1-maximizing thresholds the largest is reported.
    """
    scored = list(scores)
    if not 0.0 < fpr_budget < 1.0:
        raise ValueError("fpr_budget must lie in (0, 1)")
    labels = {label for _, label in scored}
    if labels - {ORIGINAL_LIKE, REFORMULATED_LIKE}:
        raise SelfTalkError(f"unknown labels: {sorted(labels - {ORIGINAL_LIKE, REFORMULATED_LIKE})}")
    if ORIGINAL_LIKE not in labels or REFORMULATED_LIKE not in labels:
        raise SelfTalkError("ROC undefined: need at least one example of each class")

    # the +inf sentinel predicts nothing positive, pinning (0, 0) on the ROC
    thresholds = sorted({score for score, _ in scored}) + [math.inf]
    best_f1 = -1.0
    best_threshold = math.inf
    best_tpr = 0.0
    roc_points = set()
    n_pos = sum(1 for _, label in scored if label == ORIGINAL_LIKE)
    n_neg = len(scored) - n_pos
    for threshold in thresholds:
        tp, fp, fn, _ = _confusion(scored, threshold)
        f1 = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        tpr = tp / n_pos
        fpr = fp / n_neg
        roc_points.add((fpr, tpr))
        if f1 > best_f1 or (f1 == best_f1 and threshold > best_threshold):
            best_f1 = f1
            best_threshold = threshold
        if fpr <= fpr_budget:
            best_tpr = max(best_tpr, tpr)
    roc_points.update({(0.0, 0.0), (1.0, 1.0)})
    return DetectReport(
        f1=best_f1,
        roc=tuple(sorted(roc_points)),
        tpr_at_fpr=best_tpr,
        fpr_budget=fpr_budget,
        threshold_used=best_threshold,
    )


def _interjection_pattern(lexicon: SelfTalkLexicon) -> re.Pattern[str] | None:
    words = sorted(lexicon.interjections)
    if not words:
        return None
    # consume at most one newline after the comma so paragraph breaks survive
    return re.compile(r"\b(?:%s)\b[ \t]*,[ \t]*\n?[ \t]*" % "|".join(words), re.IGNORECASE)


def strip_selftalk_baseline(text: str, lexicon: SelfTalkLexicon | None = None) -> str:
    """Deterministic fallback remover: delete standalone interjections
    (hmm/wait/okay/oh/alright) that trail a comma, repairing capitalization at
    sentence starts. Content words are never touched ("we wait for results"
    keeps its verb); the operation is idempotent.
    """
    lexicon = lexicon or SelfTalkLexicon.default()
    pattern = _interjection_pattern(lexicon)
    if pattern is None:
        return text
    parts: list[str] = []
    repair_at: list[int] = []
    out_len = 0
    pos = 0
    for match in pattern.finditer(text):
        keep = text[pos : match.start()]
        parts.append(keep)
        out_len += len(keep)
        built = "".join(parts).rstrip()
        if not built or built[-1] in ".?!":
            repair_at.append(out_len)
        pos = match.end()
    parts.append(text[pos:])
    result = "".join(parts)
    for index in repair_at:
        if index < len(result) and result[index].isalpha():
            result = result[:index] + result[index].upper() + result[index + 1 :]
    return result
