import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracereform.errors import SemanticError
from tracereform.providers import (
    CachedEmbeddingClient,
    EmbeddingCache,
    HashEmbeddingClient,
)
from tracereform.semantic import (
    EmbeddingVector,
    cosine,
    embed_corpus,
    retrieval_eval,
)


def vec(values, source_id="q", family="original"):
    return EmbeddingVector(np.asarray(values, dtype=float), source_id, family)


# --- cosine --------------------------------------------------------------------


def test_cosine_self_is_one():
    for values in ([1.0, 2.0], [0.1, -0.4, 3.0]):
        assert cosine(values, values) == pytest.approx(1.0, abs=1e-15)


def test_cosine_orthogonal_is_zero():
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0


def test_cosine_hand_computed():
    # dot = 2+4+2 = 8, norms 3 * 3
    assert cosine([1.0, 2.0, 2.0], [2.0, 2.0, 1.0]) == pytest.approx(8 / 9, abs=1e-15)


def test_cosine_zero_vector_is_error():
    with pytest.raises(SemanticError, match="zero vector"):
        cosine([0.0, 0.0], [1.0, 0.0])


def test_cosine_dimension_mismatch_is_error():
    with pytest.raises(SemanticError, match="mismatch"):
        cosine([1.0, 0.0], [1.0, 0.0, 0.0])


_vec3 = st.lists(st.floats(-5, 5), min_size=3, max_size=3).filter(
    lambda v: sum(abs(x) for x in v) > 1e-6
)


@given(u=_vec3, v=_vec3, alpha=st.floats(0.01, 100))
@settings(max_examples=200)
def test_cosine_symmetric_and_scale_invariant(u, v, alpha):
    assert cosine(u, v) == pytest.approx(cosine(v, u), abs=1e-12)
    scaled = [alpha * x for x in u]
    assert cosine(scaled, v) == pytest.approx(cosine(u, v), abs=1e-9)


# --- embed_corpus ----------------------------------------------------------------


class LengthClient:
    """Maps a text of length L to the vector (L, 1)."""

    model_name = "mock-length"

    def embed(self, texts):
        return [[float(len(t)), 1.0] for t in texts]


class FlakyClient:
    model_name = "mock-flaky"

    def __init__(self, failures: int):
        self.failures = failures
        self.inner = LengthClient()

    def embed(self, texts):
        if self.failures > 0:
            self.failures -= 1
            raise RuntimeError("endpoint down")
        return self.inner.embed(texts)


class DriftingClient:
    """Returns a different dimension on every batch."""

    model_name = "mock-drift"

    def __init__(self):
        self.calls = 0

    def embed(self, texts):
        self.calls += 1
        return [[1.0] * (1 + self.calls) for _ in texts]


def test_embed_corpus_aligned_with_inputs():
    vectors = embed_corpus(["ab", "abcd"], LengthClient(), ids=["x", "y"], family="part")
    assert [v.source_id for v in vectors] == ["x", "y"]
    assert [list(v.values) for v in vectors] == [[2.0, 1.0], [4.0, 1.0]]
    assert all(v.family == "part" for v in vectors)


def test_embed_corpus_empty_is_error():
    with pytest.raises(SemanticError, match="at least one"):
        embed_corpus([], LengthClient())


def test_embed_corpus_retries_then_succeeds():
    client = FlakyClient(failures=2)
    vectors = embed_corpus(["a"], client, max_retries=2)
    assert list(vectors[0].values) == [1.0, 1.0]


def test_embed_corpus_reports_failing_batch():
    client = FlakyClient(failures=100)
    with pytest.raises(SemanticError, match="batch 0"):
        embed_corpus(["a", "b"], client, max_retries=1)


def test_embed_corpus_detects_dimension_drift():
    with pytest.raises(SemanticError, match="dimension drift"):
        embed_corpus(["a", "b", "c"], DriftingClient(), batch_size=1)


# --- retrieval -------------------------------------------------------------------


def test_self_retrieval_with_part_candidates_only():
    queries = [vec([1.0, 0.0], "a"), vec([0.0, 1.0], "b")]
    candidates = [vec([1.0, 0.0], "a", "part"), vec([0.0, 1.0], "b", "part")]
    outcome = retrieval_eval(queries, candidates)
    assert outcome.self_match_ratio == 1.0
    assert outcome.family_match_ratio == {"part": 1.0}
    assert outcome.avg_cos["part"] == pytest.approx(1.0)
    assert outcome.n_queries == 2


def test_toy_2d_part_beats_summary():
    queries = [vec([1.0, 0.0], "q1")]
    candidates = [
        vec([0.9, 0.1], "q1", "part"),
        vec([0.0, 1.0], "q1", "summary"),
    ]
    outcome = retrieval_eval(queries, candidates)
    assert outcome.family_match_ratio == {"part": 1.0, "summary": 0.0}
    assert outcome.self_match_ratio == 1.0
    assert outcome.avg_cos["part"] == pytest.approx(0.9 / np.sqrt(0.81 + 0.01))
    assert outcome.avg_cos["summary"] == pytest.approx(0.0)


def test_family_ratios_sum_to_self_match_when_ids_shared():
    queries = [vec([1.0, 0.0], "a"), vec([0.0, 1.0], "b")]
    candidates = [
        vec([1.0, 0.0], "a", "part"), vec([0.5, 0.5], "a", "summary"),
        vec([0.1, 1.0], "b", "part"), vec([0.0, 1.0], "b", "summary"),
    ]
    outcome = retrieval_eval(queries, candidates)
    total = sum(outcome.family_match_ratio.values())
    assert total == pytest.approx(outcome.self_match_ratio)


def test_exact_ties_break_toward_part_and_are_counted():
    queries = [vec([1.0, 0.0], "a")]
    candidates = [
        vec([2.0, 0.0], "a", "summary"),  # same direction, same cosine
        vec([1.0, 0.0], "a", "part"),
    ]
    outcome = retrieval_eval(queries, candidates)
    assert outcome.tie_count == 1
    assert outcome.family_match_ratio == {"part": 1.0, "summary": 0.0}


def test_query_without_any_candidate_is_an_error():
    queries = [vec([1.0, 0.0], "missing")]
    candidates = [vec([1.0, 0.0], "other", "part")]
    with pytest.raises(SemanticError, match="missing"):
        retrieval_eval(queries, candidates)


def test_dimension_mix_is_an_error():
    queries = [vec([1.0, 0.0], "a")]
    candidates = [vec([1.0, 0.0, 0.0], "a", "part")]
    with pytest.raises(SemanticError, match="dimension"):
        retrieval_eval(queries, candidates)


@given(data=st.data())
@settings(max_examples=60)
def test_removing_summary_family_never_hurts_part(data):
    n = data.draw(st.integers(2, 5))
    dims = 3
    values = st.lists(st.floats(-2, 2), min_size=dims, max_size=dims).filter(
        lambda v: sum(abs(x) for x in v) > 1e-3
    )
    queries = [vec(data.draw(values), f"id{i}") for i in range(n)]
    part = [vec(data.draw(values), f"id{i}", "part") for i in range(n)]
    summary = [vec(data.draw(values), f"id{i}", "summary") for i in range(n)]
    with_summary = retrieval_eval(queries, part + summary)
    without_summary = retrieval_eval(queries, part)
    assert (
        without_summary.family_match_ratio["part"]
        >= with_summary.family_match_ratio["part"]
    )


# --- hash embeddings and cache ------------------------------------------------------


def test_hash_embeddings_deterministic_and_text_sensitive():
    client = HashEmbeddingClient(dim=16)
    first = client.embed(["same text", "other text"])
    second = client.embed(["same text", "other text"])
    assert first == second
    assert first[0] != first[1]
    assert len(first[0]) == 16


def test_cache_round_trip(tmp_path):
    cache = EmbeddingCache(tmp_path, "model-x")
    cache.put("hello", [1.0, -2.5, 3.25])
    assert cache.get("hello") == [1.0, -2.5, 3.25]
    assert cache.get("other") is None


def test_cache_rejects_wrong_model(tmp_path):
    EmbeddingCache(tmp_path, "model-a").put("t", [1.0])
    other = EmbeddingCache(tmp_path, "model-b")
    # different model hashes to a different key, so there is simply no entry
    assert other.get("t") is None


class CountingClient:
    model_name = "mock-counting"

    def __init__(self):
        self.calls = 0
        self.inner = HashEmbeddingClient(dim=8)

    def embed(self, texts):
        self.calls += 1
        return self.inner.embed(texts)


def test_cached_client_hits_endpoint_once(tmp_path):
    counting = CountingClient()
    cached = CachedEmbeddingClient(counting, EmbeddingCache(tmp_path, counting.model_name))
    first = cached.embed(["a", "b"])
    second = cached.embed(["a", "b"])
    assert first == second
    assert counting.calls == 1


def test_cached_client_only_embeds_misses(tmp_path):
    counting = CountingClient()
    cached = CachedEmbeddingClient(counting, EmbeddingCache(tmp_path, counting.model_name))
    cached.embed(["a"])
    cached.embed(["a", "b"])
    assert counting.calls == 2  # second call embeds only "b"
    assert cached.embed(["b"]) == counting.inner.embed(["b"])
