"""Two-step trace reformulation against an external generation endpoint.

A trace is split at step boundaries into chunks that fit a character budget.
Each chunk goes through the removal prompt (self-talk to declarative style)
and then the reorder prompt (sub-conclusions moved ahead of their supporting
process, emitted under a tag protocol for machine extraction). Rewritten
chunks are rejoined with the original inter-chunk separators, so an identity
client reproduces the input trace exactly. The final answer and the query are
never touched.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .corpus import TraceRecord, segment
from .errors import RewriteError, TagProtocolError
from .lexmatch import indel_similarity, match_ratio, partial_ratio_alignment
from .providers import GenerationClient

__all__ = [
    "PromptTemplate",
    "TaggedOutput",
    "RewriteConfig",
    "ValidationReport",
    "ChunkPlan",
    "render_prompt",
    "parse_tagged_output",
    "serialize_tagged_output",
    "chunk_trace",
    "validate_reorder",
    "reformulate_trace",
    "summarize_trace",
]

PLACEHOLDER = "{{TEXT}}"

REMOVAL_PROMPT = """Rewrite the given text, which is a part of a complete reasoning process. Convert only the parts expressed in a self-talk style into a declarative format. Avoid using first-person expressions such as 'I', 'me', 'we', or 'let's'. Do not alter any parts that are not self-talk; keep them exactly as in the original text.

Do not add any extra information. Do not include any introductory phrases.

Text:

{{TEXT}}"""

REORDER_PROMPT = """You will process the given text in two steps. The given text is a part of a complete reasoning process.

Step 1: Extract and list the most important sub-conclusions in the given reasoning process. Keep the number of sub-conclusions small and focused.

Wrap the sub-conclusions in the tags <SUB> and </SUB> for easy extraction.

Step 2: Move the sentences corresponding to these sub-conclusions to appear *before* their respective reasoning processes. Keep the sub-conclusions unnumbered and naturally integrated into the context. Do not modify any other parts of the original text.

Wrap the entire transformed text in the tags <REWRITTEN> and </REWRITTEN> for easy extraction.

Text:

{{TEXT}}"""

SUMMARY_PROMPT = """Summarize the following reasoning segment in 1-2 sentences.

Text:

{{TEXT}}"""


@dataclass(frozen=True)
class PromptTemplate:
    """A named prompt body with exactly one ``{{TEXT}}`` placeholder."""

    name: str
    body: str

    def __post_init__(self) -> None:
        count = self.body.count(PLACEHOLDER)
        if count != 1:
            raise ValueError(
                f"template '{self.name}' must contain exactly one {PLACEHOLDER} placeholder, found {count}"
            )

    @classmethod
    def removal(cls) -> "PromptTemplate":
        return cls("removal", REMOVAL_PROMPT)

    @classmethod
    def reorder(cls) -> "PromptTemplate":
        return cls("reorder", REORDER_PROMPT)

    @classmethod
    def summary(cls) -> "PromptTemplate":
        return cls("summary", SUMMARY_PROMPT)


def render_prompt(template: PromptTemplate, segment_text: str) -> str:
    """Substitute the placeholder once; everything else stays byte-identical."""
    return template.body.replace(PLACEHOLDER, segment_text)


@dataclass(frozen=True)
class TaggedOutput:
    """Parsed reorder output: sub-conclusions plus the rewritten text."""

    subs: tuple[str, ...]
    rewritten: str
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.rewritten:
            raise TagProtocolError("rewritten text must be nonempty")
        if any(not sub for sub in self.subs):
            raise TagProtocolError("sub-conclusions must be nonempty")


_TAG = re.compile(r"</?(SUB|REWRITTEN)>")


def parse_tagged_output(raw: str) -> TaggedOutput:
    """Extract ``<SUB>`` captures (in order) and the single ``<REWRITTEN>``
    capture from generation output.

    Raises "malformed rewrite" for a missing, unclosed, duplicated, or empty
    REWRITTEN block and rejects nested same-name tags. Zero SUB captures is a
    warning-carrying success (the reorder may be vacuous); whitespace-only SUB
    captures are dropped with a warning.
    """
    open_pos = {"SUB": -1, "REWRITTEN": -1}
    subs: list[str] = []
    warnings: list[str] = []
    rewritten: str | None = None
    for match in _TAG.finditer(raw):
        name = match.group(1)
        closing = match.group().startswith("</")
        if closing:
            if open_pos[name] < 0:
                raise TagProtocolError(f"</{name}> without matching <{name}>")
            capture = raw[open_pos[name] : match.start()]
            open_pos[name] = -1
            if name == "SUB":
                capture = capture.strip()
                if capture:
                    subs.append(capture)
                else:
                    warnings.append("dropped empty <SUB> capture")
            else:
                if rewritten is not None:
                    raise TagProtocolError("malformed rewrite: multiple <REWRITTEN> blocks")
                rewritten = capture.strip()
        else:
            if open_pos[name] >= 0:
                raise TagProtocolError(f"nested <{name}> tags")
            open_pos[name] = match.end()
    if open_pos["SUB"] >= 0:
        raise TagProtocolError("unclosed <SUB> tag")
    if open_pos["REWRITTEN"] >= 0:
        raise TagProtocolError("malformed rewrite: unclosed <REWRITTEN> block")
    if rewritten is None:
        raise TagProtocolError("malformed rewrite: missing <REWRITTEN> block")
    if not rewritten:
        raise TagProtocolError("malformed rewrite: empty <REWRITTEN> block")
    if not subs:
        warnings.append("no <SUB> captures")
    return TaggedOutput(tuple(subs), rewritten, tuple(warnings))


def serialize_tagged_output(tagged: TaggedOutput) -> str:
    """Inverse of the parser for tag-free contents."""
    parts = [f"<SUB>{sub}</SUB>" for sub in tagged.subs]
    parts.append(f"<REWRITTEN>{tagged.rewritten}</REWRITTEN>")
    return "\n".join(parts)


@dataclass(frozen=True)
class RewriteConfig:
    """Pipeline knobs: chunk budget, retry and concurrency limits."""

    segment_budget: int = 2500
    max_retries: int = 3
    step_order: tuple[str, ...] = ("removal", "reorder")
    concurrency_limit: int = 4

    def __post_init__(self) -> None:
        if self.segment_budget <= 0:
            raise ValueError("segment_budget must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.concurrency_limit < 1:
            raise ValueError("concurrency_limit must be at least 1")
        unknown = set(self.step_order) - {"removal", "reorder"}
        if unknown:
            raise ValueError(f"unknown pipeline steps: {sorted(unknown)}")


@dataclass(frozen=True)
class ChunkPlan:
    """Budgeted partition of a trace: leading whitespace, then (chunk text,
    trailing separator) pairs. ``leading + sum(text + sep)`` reconstructs the
    trace exactly."""

    leading: str
    texts: tuple[str, ...]
    separators: tuple[str, ...]

    def reassemble(self, outputs: list[str] | tuple[str, ...] | None = None) -> str:
        pieces = self.texts if outputs is None else tuple(outputs)
        if len(pieces) != len(self.texts):
            raise ValueError("output count must match chunk count")
        return self.leading + "".join(p + s for p, s in zip(pieces, self.separators))


def _unit_spans(trace: str, budget: int) -> list[tuple[int, int]]:
    """Trimmed spans of atomic units: steps, falling back to sentences and
    then raw slices when a single unit exceeds the budget."""
    units: list[tuple[int, int]] = []
    for step_seg in segment(trace, "step"):
        if step_seg.end - step_seg.start <= budget:
            units.append((step_seg.start, step_seg.end))
            continue
        step_text = trace[step_seg.start : step_seg.end]
        for sent in segment(step_text, "sentence"):
            start = step_seg.start + sent.start
            end = step_seg.start + sent.end
            if end - start <= budget:
                units.append((start, end))
            else:
                units.extend(
                    (pos, min(pos + budget, end)) for pos in range(start, end, budget)
                )
    return units


def chunk_trace(trace: str, budget: int) -> ChunkPlan:
    """Greedily pack step units into chunks of at most ``budget`` characters.

    Chunk boundaries fall at step boundaries (sentence boundaries, then hard
    slices, only when a single unit exceeds the budget). Inter-chunk
    whitespace is preserved as separators.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    units = _unit_spans(trace, budget)
    if not units:
        raise RewriteError("trace has no content to chunk")
    chunk_spans: list[tuple[int, int]] = []
    chunk_start, chunk_end = units[0]
    for start, end in units[1:]:
        if end - chunk_start <= budget:
            chunk_end = end
        else:
            chunk_spans.append((chunk_start, chunk_end))
            chunk_start, chunk_end = start, end
    chunk_spans.append((chunk_start, chunk_end))

    leading = trace[: chunk_spans[0][0]]
    texts = []
    separators = []
    for i, (start, end) in enumerate(chunk_spans):
        texts.append(trace[start:end])
        next_start = chunk_spans[i + 1][0] if i + 1 < len(chunk_spans) else len(trace)
        separators.append(trace[end:next_start])
    return ChunkPlan(leading, tuple(texts), tuple(separators))


_TEMPLATES = {
    "removal": (PromptTemplate.removal(), False),
    "reorder": (PromptTemplate.reorder(), True),
    "summary": (PromptTemplate.summary(), False),
}


def _run_step(
    client: GenerationClient,
    template: PromptTemplate,
    parse_tags: bool,
    text: str,
    max_retries: int,
    chunk_index: int,
) -> str:
    prompt = render_prompt(template, text)
    attempts = max_retries + 1  # max_retries counts retries after the first attempt
    last_error: Exception | None = None
    for _ in range(attempts):
        try:
            raw = client.generate(prompt)
        except Exception as exc:  # any client failure is retryable
            last_error = exc
            continue
        if not parse_tags:
            return raw.strip()
        try:
            return parse_tagged_output(raw).rewritten
        except TagProtocolError as exc:
            last_error = exc
            continue
    raise RewriteError(
        f"chunk {chunk_index}: step '{template.name}' failed after {attempts} attempts"
    ) from last_error


def _run_pipeline(
    record: TraceRecord,
    cfg: RewriteConfig,
    client: GenerationClient,
    steps: tuple[str, ...],
    method: str,
) -> TraceRecord:
    if not record.reasoning.strip():
        raise RewriteError(f"record '{record.id}': reasoning is empty")
    plan = chunk_trace(record.reasoning, cfg.segment_budget)

    def rewrite_chunk(indexed: tuple[int, str]) -> str:
        index, text = indexed
        current = text
        for step_name in steps:
            template, parse_tags = _TEMPLATES[step_name]
            current = _run_step(client, template, parse_tags, current, cfg.max_retries, index)
        return current

    work = list(enumerate(plan.texts))
    if cfg.concurrency_limit > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=min(cfg.concurrency_limit, len(work))) as pool:
            outputs = list(pool.map(rewrite_chunk, work))
    else:
        outputs = [rewrite_chunk(item) for item in work]
    return record.with_reformulated(plan.reassemble(outputs), method)


def reformulate_trace(
    record: TraceRecord, cfg: RewriteConfig, client: GenerationClient
) -> TraceRecord:
    """Removal then reorder over every chunk; returns a copy with
    ``reformulated`` set and ``method='part'``. Query and answer are
    byte-identical to the input."""
    return _run_pipeline(record, cfg, client, cfg.step_order, "part")


def summarize_trace(
    record: TraceRecord, cfg: RewriteConfig, client: GenerationClient
) -> TraceRecord:
    """Per-chunk summarization baseline; ``method='summary'``."""
    return _run_pipeline(record, cfg, client, ("summary",), "summary")


@dataclass(frozen=True)
class ValidationReport:
    """Advisory reorder-quality report; failures are listed, never raised."""

    ok: bool
    failures: tuple[str, ...]


def validate_reorder(
    original_segment: str, tagged: TaggedOutput, min_similarity: float = 0.6
) -> ValidationReport:
    """Check that each sub-conclusion lands before its supporting content and
    that the rewrite retains the original sentences.

    A sub's supporting content is operationalized as the original sentence
    preceding the sentence the sub best matches (a sub sourced from the very
    first sentence has nothing it must precede). Content retention requires at
    least half of the original sentences to match the rewritten text at
    ``min_similarity``.
    """
    if not 0.0 <= min_similarity <= 1.0:
        raise ValueError("min_similarity must lie in [0, 1]")
    failures: list[str] = []
    sentences = [seg.text for seg in segment(original_segment, "sentence")]
    rewritten = tagged.rewritten

    if sentences:
        retained = match_ratio(sentences, rewritten, min_similarity)
        if retained < 0.5:
            failures.append(
                f"content-loss: only {retained:.0%} of original sentences matched at {min_similarity}"
            )

    for k, sub in enumerate(tagged.subs):
        sub_pos = partial_ratio_alignment(sub, rewritten).hay_start
        if not sentences:
            continue
        source_index = max(
            range(len(sentences)), key=lambda i: indel_similarity(sub, sentences[i])
        )
        if source_index == 0:
            continue
        support = sentences[source_index - 1]
        support_pos = partial_ratio_alignment(support, rewritten).hay_start
        if sub_pos > support_pos:
            failures.append(
                f"sub-conclusion {k} (best match at {sub_pos}) appears after its "
                f"supporting content (at {support_pos})"
            )
    return ValidationReport(ok=not failures, failures=tuple(failures))
