"""Exception hierarchy shared across the toolkit."""


class TraceReformError(Exception):
    """Base class for all toolkit-specific failures."""


class CorpusError(TraceReformError):
    """Corpus file is malformed or violates record invariants."""


class TokenProbError(TraceReformError):
    """Probability-log data violates its contract (degenerate loss, bad row)."""


class TagProtocolError(TraceReformError):
    """Generation output does not follow the SUB/REWRITTEN tag protocol."""


class RewriteError(TraceReformError):
    """The rewriting pipeline failed for a chunk after exhausting retries."""


class SelfTalkError(TraceReformError):
    """Detectability metrics are undefined for the given inputs."""


class SemanticError(TraceReformError):
    """Embedding or retrieval evaluation failed."""


class ProviderError(TraceReformError):
    """A remote generation/embedding endpoint call failed."""
