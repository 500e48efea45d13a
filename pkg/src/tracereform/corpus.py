"""Reasoning-trace corpora: JSONL ingestion, validation, segmentation, persistence.

A corpus is an ordered list of :class:`TraceRecord`. On disk it is one UTF-8
JSON object per nonempty line with keys ``id``, ``query``, ``reasoning``,
``answer`` and optional ``reformulated`` / ``method``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError

__all__ = [
    "TraceRecord",
    "Segment",
    "load_corpus",
    "save_corpus",
    "segment",
    "normalize_whitespace",
]

_REQUIRED_KEYS = ("id", "query", "reasoning", "answer")
_OPTIONAL_KEYS = ("reformulated", "method")

GRANULARITIES = ("sentence", "step")

# terminal punctuation run, used by the sentence rule
_TERMINALS = ".?!"

_WS_RUN = re.compile(r"\s+")

# a step boundary is a newline followed by one or more blank lines
_STEP_SEPARATOR = re.compile(r"\n(?:[ \t]*\n)+")


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS_RUN.sub(" ", text).strip()


@dataclass(frozen=True)
class TraceRecord:
    """One (query, reasoning trace, final answer) triple.

    ``reformulated`` holds a rewritten trace once a pipeline has produced one;
    ``method`` tags how it was produced (``part``, ``summary``, or any other
    label). The ``answer`` field is never modified by any operation in this
    package.
    """

    id: str
    query: str
    reasoning: str
    answer: str
    reformulated: str | None = None
    method: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("record id must be nonempty")
        for name in ("id", "query", "reasoning", "answer"):
            if not isinstance(getattr(self, name), str):
                raise CorpusError(f"field '{name}' must be a string")
        for name in ("reformulated", "method"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise CorpusError(f"field '{name}' must be a string when present")

    def with_reformulated(self, reformulated: str, method: str) -> "TraceRecord":
        """Copy with a new reformulation; query/answer stay byte-identical."""
        return replace(self, reformulated=reformulated, method=method)


@dataclass(frozen=True)
class Segment:
    """A sentence- or step-granularity slice of a trace.

    ``start``/``end`` are character offsets into the source trace; ``text`` is
    the slice after whitespace normalization.
    """

    text: str
    start: int
    end: int
    granularity: str

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise CorpusError(f"invalid segment span [{self.start}, {self.end})")
        if not self.text:
            raise CorpusError("segment text must be nonempty")
        if self.granularity not in GRANULARITIES:
            raise CorpusError(f"unknown granularity '{self.granularity}'")


def _record_from_obj(obj: object, lineno: int) -> TraceRecord:
    if not isinstance(obj, dict):
        raise CorpusError(f"line {lineno}: expected an object, got {type(obj).__name__}")
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise CorpusError(f"line {lineno}: missing field '{key}'")
    unknown = set(obj) - set(_REQUIRED_KEYS) - set(_OPTIONAL_KEYS)
    if unknown:
        raise CorpusError(f"line {lineno}: unknown field(s) {sorted(unknown)}")
    try:
        return TraceRecord(
            id=obj["id"],
            query=obj["query"],
            reasoning=obj["reasoning"],
            answer=obj["answer"],
            reformulated=obj.get("reformulated"),
            method=obj.get("method"),
        )
    except CorpusError as exc:
        raise CorpusError(f"line {lineno}: {exc}") from None


def iter_corpus(path: str | Path) -> Iterator[tuple[int, TraceRecord]]:
    """Yield (1-based line number, record) pairs, skipping blank lines."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            yield lineno, _record_from_obj(obj, lineno)


def load_corpus(path: str | Path) -> list[TraceRecord]:
    """Load a JSONL corpus, enforcing per-record schema and id uniqueness."""
    records: list[TraceRecord] = []
    seen: dict[str, int] = {}
    for lineno, record in iter_corpus(path):
        if record.id in seen:
            raise CorpusError(
                f"line {lineno}: duplicate id '{record.id}' (first seen on line {seen[record.id]})"
            )
        seen[record.id] = lineno
        records.append(record)
    return records


def record_to_obj(record: TraceRecord) -> dict:
    obj = {
        "id": record.id,
        "query": record.query,
        "reasoning": record.reasoning,
        "answer": record.answer,
    }
    if record.reformulated is not None:
        obj["reformulated"] = record.reformulated
    if record.method is not None:
        obj["method"] = record.method
    return obj


def dumps_corpus(records: Iterable[TraceRecord]) -> str:
    return "".join(json.dumps(record_to_obj(r), ensure_ascii=False) + "\n" for r in records)


def save_corpus(records: Iterable[TraceRecord], path: str | Path) -> None:
    """Write records as JSONL; ``load_corpus`` round-trips field-for-field."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_corpus(records))


def _trimmed_span(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def _sentence_spans(text: str) -> list[tuple[int, int]]:
    """Spans of sentences: split after ``. ? !`` runs followed by
    whitespace-then-uppercase or end-of-text, except inside unbalanced
    ``$...$`` or parentheses (protects math and decimal abbreviations).
    """
    spans: list[tuple[int, int]] = []
    n = len(text)
    seg_start = 0
    i = 0
    paren_depth = 0
    in_math = False
    while i < n:
        ch = text[i]
        if ch == "$":
            in_math = not in_math
        elif ch == "(":
            paren_depth += 1
        elif ch == ")":
            paren_depth = max(0, paren_depth - 1)
        elif ch in _TERMINALS and paren_depth == 0 and not in_math:
            run_end = i + 1
            while run_end < n and text[run_end] in _TERMINALS:
                run_end += 1
            ws_end = run_end
            while ws_end < n and text[ws_end].isspace():
                ws_end += 1
            at_eot = ws_end >= n
            next_upper = ws_end < n and ws_end > run_end and text[ws_end].isupper()
            if at_eot or next_upper:
                spans.append((seg_start, run_end))
                seg_start = ws_end
                i = ws_end
                continue
            i = run_end
            continue
        i += 1
    if seg_start < n:
        spans.append((seg_start, n))
    return spans


def _step_spans(text: str) -> list[tuple[int, int]]:
    """Spans of steps: paragraphs delimited by one-or-more blank lines."""
    spans = []
    prev = 0
    for match in _STEP_SEPARATOR.finditer(text):
        spans.append((prev, match.start()))
        prev = match.end()
    spans.append((prev, len(text)))
    return spans


def segment(trace: str, granularity: str) -> list[Segment]:
    """Split a trace into ordered, non-overlapping sentence or step segments.

    Pure function: segment offsets plus the whitespace gaps between them cover
    the whole trace, and every segment is nonempty after trimming.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}, got {granularity!r}")
    raw = _sentence_spans(trace) if granularity == "sentence" else _step_spans(trace)
    segments = []
    for start, end in raw:
        start, end = _trimmed_span(trace, start, end)
        if start >= end:
            continue
        segments.append(
            Segment(
                text=normalize_whitespace(trace[start:end]),
                start=start,
                end=end,
                granularity=granularity,
            )
        )
    return segments
