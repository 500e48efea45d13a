"""Token-level loss and gradient analysis over externally supplied
probability logs.

No model runs in-process: rows arrive from a line-delimited log file, either
in full form (a probability vector plus the target index) or in a compact
form that carries only the target token's probability. Vector operations
(gradients, norms) require full rows; scalar losses and probability-gap
reports accept both.

For a full row with probabilities ``p`` and target ``y``:

* token loss        ``-log p[y]``
* logits gradient   ``p - onehot(y)``
* squared grad norm ``sum(p_i^2) + 1 - 2 p[y]``

The squared-norm identity makes explicit that tokens the model already
predicts with high confidence contribute vanishing updates, while
low-probability tokens dominate the training signal.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import TokenProbError
from .selftalk import SelfTalkLexicon, strip_token

__all__ = [
    "ProbRow",
    "CompactRow",
    "LogitsRow",
    "ProbLog",
    "GapReport",
    "softmax",
    "token_loss",
    "grad_logits",
    "grad_norm_sq",
    "sft_loss",
    "selftalk_prob_gap",
    "load_prob_logs",
    "self_test",
]

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class LogitsRow:
    """Raw logits over a vocabulary at one position."""

    logits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.logits, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise TokenProbError("logits must be a nonempty vector")
        if not np.all(np.isfinite(arr)):
            raise TokenProbError("logits must be finite")
        object.__setattr__(self, "logits", arr)


@dataclass(frozen=True)
class ProbRow:
    """A probability distribution over the vocabulary plus the target index."""

    probs: np.ndarray
    target: int
    token_text: str | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise TokenProbError("probs must be a nonempty vector")
        if np.any(arr < -1e-12) or np.any(arr > 1.0 + 1e-12):
            raise TokenProbError("probabilities must lie in [0, 1]")
        if abs(float(arr.sum()) - 1.0) > _PROB_SUM_TOL:
            raise TokenProbError(f"probabilities must sum to 1 (got {float(arr.sum())!r})")
        if not 0 <= self.target < arr.size:
            raise TokenProbError(f"target index {self.target} out of range for V={arr.size}")
        object.__setattr__(self, "probs", arr)

    @property
    def target_prob(self) -> float:
        return float(self.probs[self.target])

    @classmethod
    def from_logits(
        cls, logits: LogitsRow | Sequence[float], target: int, token_text: str | None = None
    ) -> "ProbRow":
        return cls(softmax(logits), target, token_text)


@dataclass(frozen=True)
class CompactRow:
    """Compact log row: only the target token's probability is known.

    Sufficient for losses and gap reports; vector operations reject it.
    """

    target_prob: float
    token_text: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.target_prob <= 1.0:
            raise TokenProbError(f"target_prob must lie in [0, 1], got {self.target_prob!r}")


Row = ProbRow | CompactRow


@dataclass(frozen=True)
class ProbLog:
    """Ordered rows for one sequence, tagged with a training-stage label."""

    rows: tuple[Row, ...]
    stage: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rows", tuple(self.rows))


def softmax(logits: LogitsRow | Sequence[float]) -> np.ndarray:
    """Numerically stable softmax (max-subtraction); preserves argmax and is
    shift-invariant."""
    if not isinstance(logits, LogitsRow):
        logits = LogitsRow(np.asarray(logits, dtype=np.float64))
    z = logits.logits
    shifted = z - z.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def token_loss(row: Row) -> float:
    """Negative log probability of the target token."""
    p = row.target_prob
    if p <= 0.0:
        raise TokenProbError("infinite loss: target probability is 0")
    return -math.log(p)


def _require_full(row: Row, op: str) -> ProbRow:
    if not isinstance(row, ProbRow):
        raise TokenProbError(
            f"{op} requires a full probability vector; compact rows carry only target_prob"
        )
    return row


def grad_logits(row: Row) -> np.ndarray:
    """Gradient of the token loss with respect to the logits: p - onehot(target)."""
    full = _require_full(row, "grad_logits")
    grad = full.probs.copy()
    grad[full.target] -= 1.0
    return grad


def grad_norm_sq(row: Row) -> float:
    """Squared l2 norm of the logits gradient: sum(p^2) + 1 - 2*p_target."""
    full = _require_full(row, "grad_norm_sq")
    p = full.probs
    return float(p @ p + 1.0 - 2.0 * p[full.target])


def sft_loss(log: ProbLog) -> float:
    """Mean token loss over the rows of one sequence."""
    if not log.rows:
        raise TokenProbError("sft_loss of an empty log is undefined")
    return sum(token_loss(row) for row in log.rows) / len(log.rows)


@dataclass(frozen=True)
class GapReport:
    """Average-probability gap between all tokens and self-talk tokens at one
    training stage. ``gap`` is None (undefined) when the lexicon has no hits."""

    stage: str
    avg_all: float
    avg_selftalk: float | None
    gap: float | None
    n_selftalk: int
    n_rows: int


def _is_selftalk(token_text: str, lexicon: SelfTalkLexicon) -> bool:
    return strip_token(token_text) in lexicon.keywords


def selftalk_prob_gap(
    logs: Iterable[ProbLog], lexicon: SelfTalkLexicon
) -> dict[str, GapReport]:
    """Per-stage report of avg target probability, overall vs self-talk rows.

    Rows match the lexicon by case-insensitive, punctuation-stripped token
    text. A stage with no lexicon hits reports ``n_selftalk = 0`` and an
    undefined (None) gap, never a silent 0.
    """
    by_stage: dict[str, list[Row]] = {}
    for log in logs:
        if not log.rows:
            raise TokenProbError("gap report requires nonempty logs")
        stage = log.stage if log.stage is not None else "default"
        by_stage.setdefault(stage, []).extend(log.rows)

    reports: dict[str, GapReport] = {}
    for stage, rows in by_stage.items():
        for row in rows:
            if row.token_text is None:
                raise TokenProbError(f"stage '{stage}': gap report requires token_text on rows")
        all_probs = [row.target_prob for row in rows]
        hit_probs = [row.target_prob for row in rows if _is_selftalk(row.token_text, lexicon)]
        avg_all = sum(all_probs) / len(all_probs)
        if hit_probs:
            avg_selftalk = sum(hit_probs) / len(hit_probs)
            gap = avg_all - avg_selftalk
        else:
            avg_selftalk = None
            gap = None
        reports[stage] = GapReport(
            stage=stage,
            avg_all=avg_all,
            avg_selftalk=avg_selftalk,
            gap=gap,
            n_selftalk=len(hit_probs),
            n_rows=len(rows),
        )
    return reports


def _row_from_obj(obj: dict, lineno: int) -> tuple[str | None, Row]:
    stage = obj.get("stage")
    token_text = obj.get("token_text")
    if "probs" in obj:
        if "target_index" not in obj:
            raise TokenProbError(f"line {lineno}: full row needs 'target_index'")
        try:
            row: Row = ProbRow(np.asarray(obj["probs"], dtype=np.float64),
                               int(obj["target_index"]), token_text)
        except (TypeError, ValueError, TokenProbError) as exc:
            raise TokenProbError(f"line {lineno}: {exc}") from None
    elif "target_prob" in obj:
        try:
            row = CompactRow(float(obj["target_prob"]), token_text)
        except (TypeError, ValueError, TokenProbError) as exc:
            raise TokenProbError(f"line {lineno}: {exc}") from None
    else:
        raise TokenProbError(f"line {lineno}: row needs either 'probs' or 'target_prob'")
    return stage, row


def load_prob_logs(path: str | Path) -> list[ProbLog]:
    """Load a line-delimited probability log, one ProbLog per distinct stage
    label in order of first appearance."""
    stages: dict[str | None, list[Row]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TokenProbError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise TokenProbError(f"line {lineno}: expected an object")
            stage, row = _row_from_obj(obj, lineno)
            stages.setdefault(stage, []).append(row)
    return [ProbLog(tuple(rows), stage=stage) for stage, rows in stages.items()]


def _finite_difference_grad(logits: np.ndarray, target: int, step: float) -> np.ndarray:
    """Central differences of -log softmax(z)[target]; used by the CLI
    self-test only (the test suite keeps its own independent oracle)."""

    def loss(z: np.ndarray) -> float:
        shifted = z - z.max()
        return float(np.log(np.exp(shifted).sum()) - shifted[target])

    grad = np.zeros_like(logits)
    for i in range(logits.size):
        bumped = logits.copy()
        bumped[i] += step
        hi = loss(bumped)
        bumped[i] -= 2 * step
        lo = loss(bumped)
        grad[i] = (hi - lo) / (2 * step)
    return grad


def self_test(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the gradient-identity and finite-difference suites; returns
    (name, passed, detail) triples."""
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    for _ in range(1000):
        v = int(rng.integers(2, 65))
        row = ProbRow.from_logits(rng.normal(size=v), int(rng.integers(v)))
        g = grad_logits(row)
        worst = max(worst, abs(grad_norm_sq(row) - float(g @ g)))
    results.append((
        "squared-norm identity (1000 rows, V<=64)",
        worst < 1e-12,
        f"max |closed-form - direct| = {worst:.3e} (tolerance 1e-12)",
    ))

    worst_rel = 0.0
    for _ in range(100):
        v = int(rng.integers(2, 17))
        z = rng.normal(size=v)
        target = int(rng.integers(v))
        analytic = grad_logits(ProbRow.from_logits(z, target))
        fd = _finite_difference_grad(z, target, 1e-5)
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-12)
        worst_rel = max(worst_rel, float(rel.max()))
    results.append((
        "gradient vs central differences (100 vectors, V<=16)",
        worst_rel < 1e-6,
        f"max relative error = {worst_rel:.3e} (tolerance 1e-6)",
    ))
    return results
