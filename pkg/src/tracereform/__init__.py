"""tracereform: reformulate LLM reasoning traces and evaluate the results.

The toolkit covers the full loop around trace reformulation for
anti-distillation: corpus handling, the two-step rewrite pipeline (self-talk
removal + sub-conclusion reordering via a prompted endpoint), token-level
loss/gradient analysis, lexical fuzzy-match ratios, semantic retrieval
similarity, and term-frequency detectability metrics.
"""

__version__ = "0.1.0"

from .corpus import Segment, TraceRecord, load_corpus, save_corpus, segment
from .errors import (
    CorpusError,
    ProviderError,
    RewriteError,
    SelfTalkError,
    SemanticError,
    TagProtocolError,
    TokenProbError,
    TraceReformError,
)
from .lexmatch import (
    Alignment,
    EvalConfig,
    MatchCurve,
    indel_similarity,
    match_curve,
    match_ratio,
    partial_ratio_alignment,
)
from .rewriter import (
    PromptTemplate,
    RewriteConfig,
    TaggedOutput,
    chunk_trace,
    parse_tagged_output,
    reformulate_trace,
    render_prompt,
    summarize_trace,
    validate_reorder,
)
from .selftalk import (
    DetectReport,
    SelfTalkLexicon,
    TermFrequencyReport,
    classifier_metrics,
    classify_by_threshold,
    find_selftalk,
    strip_selftalk_baseline,
    term_frequency,
)
from .semantic import EmbeddingVector, RetrievalOutcome, cosine, embed_corpus, retrieval_eval
from .tokenprob import (
    CompactRow,
    GapReport,
    LogitsRow,
    ProbLog,
    ProbRow,
    grad_logits,
    grad_norm_sq,
    selftalk_prob_gap,
    sft_loss,
    softmax,
    token_loss,
)

__all__ = [
    "__version__",
    "TraceRecord", "Segment", "load_corpus", "save_corpus", "segment",
    "Alignment", "EvalConfig", "MatchCurve", "indel_similarity",
    "partial_ratio_alignment", "match_ratio", "match_curve",
    "ProbRow", "CompactRow", "LogitsRow", "ProbLog", "GapReport",
    "softmax", "token_loss", "grad_logits", "grad_norm_sq", "sft_loss",
    "selftalk_prob_gap",
    "SelfTalkLexicon", "TermFrequencyReport", "DetectReport",
    "find_selftalk", "term_frequency", "classify_by_threshold",
    "classifier_metrics", "strip_selftalk_baseline",
    "PromptTemplate", "TaggedOutput", "RewriteConfig",
    "render_prompt", "parse_tagged_output", "chunk_trace",
    "reformulate_trace", "summarize_trace", "validate_reorder",
    "EmbeddingVector", "RetrievalOutcome", "cosine", "embed_corpus",
    "retrieval_eval",
    "TraceReformError", "CorpusError", "TokenProbError", "TagProtocolError",
    "RewriteError", "SelfTalkError", "SemanticError", "ProviderError",
]
