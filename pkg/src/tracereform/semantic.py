"""Semantic-similarity evaluation: embed traces, rank candidates by cosine,
and measure how often each query's top-1 candidate is its own reformulation.

Queries are the original traces; candidates are the reformulations (families
``part`` and ``summary``). Ranking is global over all candidates, which is the
stricter protocol: a query only self-matches when its own reformulation beats
every other trace's.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SemanticError
from .providers import EmbeddingClient

__all__ = [
    "EmbeddingVector",
    "RetrievalOutcome",
    "cosine",
    "embed_corpus",
    "retrieval_eval",
]

FAMILIES = ("original", "part", "summary")
_FAMILY_RANK = {family: rank for rank, family in enumerate(("part", "summary", "original"))}


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-length embedding tagged with its record id and family."""

    values: np.ndarray
    source_id: str
    family: str

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise SemanticError("embedding must be a nonempty vector")
        if not np.all(np.isfinite(arr)):
            raise SemanticError("embedding must be finite")
        if float(np.linalg.norm(arr)) == 0.0:
            raise SemanticError("embedding norm must be positive")
        if self.family not in FAMILIES:
            raise SemanticError(f"unknown family '{self.family}' (expected one of {FAMILIES})")
        object.__setattr__(self, "values", arr)


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Normalized dot product; errors on zero vectors or dimension mismatch."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise SemanticError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise SemanticError("cosine of a zero vector is undefined")
    return float(u @ v) / (nu * nv)


def embed_corpus(
    texts: Sequence[str],
    client: EmbeddingClient,
    *,
    ids: Sequence[str] | None = None,
    family: str = "original",
    batch_size: int = 32,
    max_retries: int = 3,
) -> list[EmbeddingVector]:
    """Embed texts in order with transparent batching and per-batch retries.

    All vectors must share one dimension; drift across batches is an error.
    """
    if not texts:
        raise SemanticError("embed_corpus requires at least one text")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if ids is None:
        ids = [str(i) for i in range(len(texts))]
    if len(ids) != len(texts):
        raise SemanticError("ids must align one-to-one with texts")

    vectors: list[list[float]] = []
    dim: int | None = None
    for batch_index, start in enumerate(range(0, len(texts), batch_size)):
        batch = list(texts[start : start + batch_size])
        last_error: Exception | None = None
        result: list[list[float]] | None = None
        for _ in range(max_retries + 1):  # max_retries counts retries after the first attempt
            try:
                result = client.embed(batch)
                break
            except Exception as exc:
                last_error = exc
        if result is None:
            raise SemanticError(
                f"embedding failed for batch {batch_index} after {max_retries + 1} attempts"
            ) from last_error
        for vec in result:
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise SemanticError(
                    f"dimension drift in batch {batch_index}: got {len(vec)}, expected {dim}"
                )
        vectors.extend(result)
    return [
        EmbeddingVector(np.asarray(vec, dtype=np.float64), source_id=i, family=family)
        for vec, i in zip(vectors, ids)
    ]


@dataclass(frozen=True)
class RetrievalOutcome:
    """Global top-1 retrieval results.

    ``family_match_ratio[f]`` is the fraction of queries whose top-1 candidate
    belongs to family ``f`` *and* shares the query's id; their sum over
    families is ``self_match_ratio``. ``avg_cos[f]`` averages each query's
    cosine to its own-id candidate in that family (None when the family has no
    shared ids). Top-1 ties are broken by family order (part before summary)
    then id, and counted.
    """

    family_match_ratio: dict[str, float]
    avg_cos: dict[str, float | None]
    self_match_ratio: float
    tie_count: int
    n_queries: int


def retrieval_eval(
    queries: Sequence[EmbeddingVector], candidates: Sequence[EmbeddingVector]
) -> RetrievalOutcome:
    """Rank every candidate for every query by cosine and score self-matches."""
    if not queries or not candidates:
        raise SemanticError("retrieval_eval requires nonempty queries and candidates")
    dims = {v.values.size for v in list(queries) + list(candidates)}
    if len(dims) > 1:
        raise SemanticError(f"mixed embedding dimensions: {sorted(dims)}")

    families = sorted({c.family for c in candidates}, key=lambda f: _FAMILY_RANK[f])
    by_family_id: dict[tuple[str, str], EmbeddingVector] = {}
    for cand in candidates:
        by_family_id.setdefault((cand.family, cand.source_id), cand)
    candidate_ids = {c.source_id for c in candidates}
    for query in queries:
        if query.source_id not in candidate_ids:
            raise SemanticError(f"query id '{query.source_id}' has no candidate in any family")

    q_matrix = np.stack([q.values / np.linalg.norm(q.values) for q in queries])
    c_matrix = np.stack([c.values / np.linalg.norm(c.values) for c in candidates])
    cos = q_matrix @ c_matrix.T  # (n_queries, n_candidates)

    order = sorted(
        range(len(candidates)),
        key=lambda j: (_FAMILY_RANK[candidates[j].family], candidates[j].source_id),
    )
    family_hits = {family: 0 for family in families}
    self_hits = 0
    tie_count = 0
    for qi, query in enumerate(queries):
        row = cos[qi]
        best = row.max()
        tied = [j for j in order if row[j] == best]
        if len(tied) > 1:
            tie_count += 1
        top = candidates[tied[0]]
        if top.source_id == query.source_id:
            self_hits += 1
            family_hits[top.family] += 1

    n = len(queries)
    avg_cos: dict[str, float | None] = {}
    for family in families:
        sims = [
            cosine(q.values, by_family_id[(family, q.source_id)].values)
            for q in queries
            if (family, q.source_id) in by_family_id
        ]
        avg_cos[family] = sum(sims) / len(sims) if sims else None
    return RetrievalOutcome(
        family_match_ratio={family: family_hits[family] / n for family in families},
        avg_cos=avg_cos,
        self_match_ratio=self_hits / n,
        tie_count=tie_count,
        n_queries=n,
    )
