"""Generation and embedding endpoint clients.

Real providers speak message-based HTTP JSON (chat-completion style for
generation, texts-in/vectors-out for embeddings); credentials come from
environment variables named in the configuration. Mock providers make the
whole evaluation suite runnable with no network:

* ``mock:echo``  generation client that returns the prompt payload unchanged
  (wrapped in the rewrite tags when the prompt asks for them)
* ``mock:hash``  embedding client that derives a deterministic vector from a
  content hash, so identical texts embed identically
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence, runtime_checkable

import httpx

from .errors import ProviderError, SemanticError
from .fileio import atomic_write_bytes

__all__ = [
    "GenerationClient",
    "EmbeddingClient",
    "EchoGenerationClient",
    "HttpGenerationClient",
    "HashEmbeddingClient",
    "HttpEmbeddingClient",
    "EmbeddingCache",
    "CachedEmbeddingClient",
    "make_generation_client",
    "make_embedding_client",
]

# the prompt templates end with this marker followed by the chunk payload
TEXT_MARKER = "\nText:\n\n"


@runtime_checkable
class GenerationClient(Protocol):
    """Text-generation endpoint: rendered prompt in, assistant text out."""

    def generate(self, prompt: str) -> str: ...


@runtime_checkable
class EmbeddingClient(Protocol):
    """Embedding endpoint: texts in, one float vector per text out."""

    model_name: str

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


def _prompt_payload(prompt: str) -> str:
    idx = prompt.find(TEXT_MARKER)
    if idx < 0:
        return prompt
    return prompt[idx + len(TEXT_MARKER) :]


class EchoGenerationClient:
    """Returns the prompt's text payload verbatim; identity pipeline for
    tests and dry runs."""

    def generate(self, prompt: str) -> str:
        payload = _prompt_payload(prompt)
        if "<REWRITTEN>" in prompt:
            return f"<REWRITTEN>{payload}</REWRITTEN>"
        return payload


def _api_key(env_var: str) -> str:
    if not env_var:
        raise ProviderError("provider requires a nonempty api_key_env name")
    key = os.environ.get(env_var)
    if not key:
        raise ProviderError(f"environment variable {env_var} is not set")
    return key


@dataclass
class HttpGenerationClient:
    """Chat-completion HTTP client (system+user messages in, assistant text
    out). Output length is bounded at roughly twice the input chunk length."""

    endpoint: str
    model: str
    api_key_env: str = "GENERATION_API_KEY"
    temperature: float = 0.0
    max_output_factor: float = 2.0
    chars_per_token: float = 4.0
    system: str | None = None
    timeout: float = 120.0
    transport: httpx.BaseTransport | None = None
    _client: httpx.Client | None = field(default=None, repr=False)

    def _http(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.timeout, transport=self.transport)
        return self._client

    def generate(self, prompt: str) -> str:
        payload = _prompt_payload(prompt)
        max_tokens = max(256, math.ceil(self.max_output_factor * len(payload) / self.chars_per_token))
        messages = []
        if self.system:
            messages.append({"role": "system", "content": self.system})
        messages.append({"role": "user", "content": prompt})
        body = {
            "model": self.model,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": max_tokens,
        }
        headers = {"Authorization": f"Bearer {_api_key(self.api_key_env)}"}
        try:
            response = self._http().post(self.endpoint, json=body, headers=headers)
            response.raise_for_status()
            data = response.json()
            return data["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"generation endpoint failed: {exc}") from exc


@dataclass(frozen=True)
class HashEmbeddingClient:
    """Deterministic content-hash embeddings (no semantics beyond
    identical-text => identical-vector); dimension is configurable."""

    dim: int = 64
    model_name: str = "mock-hash"

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise SemanticError("hash embedding dimension must be >= 2")

    def _vector(self, text: str) -> list[float]:
        values: list[float] = []
        counter = 0
        seed = hashlib.sha256(text.encode("utf-8")).digest()
        while len(values) < self.dim:
            block = hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
            for i in range(0, len(block) - 7, 8):
                (raw,) = struct.unpack_from(">Q", block, i)
                values.append(raw / 2**63 - 1.0)  # uniform in [-1, 1)
                if len(values) == self.dim:
                    break
            counter += 1
        if all(v == 0.0 for v in values):  # vanishing norm is astronomically unlikely
            values[0] = 1.0
        return values

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._vector(t) for t in texts]


@dataclass
class HttpEmbeddingClient:
    """Embedding HTTP client: POST {model, input: [texts]} ->
    {data: [{embedding: [...]}, ...]} in input order."""

    endpoint: str
    model: str
    api_key_env: str = "EMBEDDING_API_KEY"
    timeout: float = 120.0
    transport: httpx.BaseTransport | None = None
    _client: httpx.Client | None = field(default=None, repr=False)

    @property
    def model_name(self) -> str:
        return self.model

    def _http(self) -> httpx.Client:
        if self._client is None:
            self._client = httpx.Client(timeout=self.timeout, transport=self.transport)
        return self._client

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        body = {"model": self.model, "input": list(texts)}
        headers = {"Authorization": f"Bearer {_api_key(self.api_key_env)}"}
        try:
            response = self._http().post(self.endpoint, json=body, headers=headers)
            response.raise_for_status()
            data = response.json()
            vectors = [item["embedding"] for item in data["data"]]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"embedding endpoint failed: {exc}") from exc
        if len(vectors) != len(texts):
            raise ProviderError(
                f"embedding endpoint returned {len(vectors)} vectors for {len(texts)} texts"
            )
        return [[float(x) for x in vec] for vec in vectors]


_CACHE_MAGIC = b"EMBV"


class EmbeddingCache:
    """Content-addressed on-disk store of raw float vectors.

    One file per (model, text) pair: magic, a 4-byte header length, a JSON
    header carrying the dimension and model tag, then little-endian float64
    values. Writes go through temp-file rename (single writer at a time).
    """

    def __init__(self, directory: str | Path, model_name: str) -> None:
        self.directory = Path(directory)
        self.model_name = model_name
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, text: str) -> Path:
        digest = hashlib.sha256(
            self.model_name.encode("utf-8") + b"\x00" + text.encode("utf-8")
        ).hexdigest()
        return self.directory / f"{digest}.emb"

    def get(self, text: str) -> list[float] | None:
        path = self._path(text)
        if not path.exists():
            return None
        blob = path.read_bytes()
        if blob[:4] != _CACHE_MAGIC:
            raise SemanticError(f"corrupt embedding cache file: {path}")
        (header_len,) = struct.unpack_from(">I", blob, 4)
        header = json.loads(blob[8 : 8 + header_len].decode("utf-8"))
        if header["model"] != self.model_name:
            raise SemanticError(f"cache file {path} belongs to model {header['model']!r}")
        values = list(struct.unpack_from(f"<{header['dim']}d", blob, 8 + header_len))
        return values

    def put(self, text: str, vector: Sequence[float]) -> None:
        header = json.dumps({"model": self.model_name, "dim": len(vector)}).encode("utf-8")
        blob = (
            _CACHE_MAGIC
            + struct.pack(">I", len(header))
            + header
            + struct.pack(f"<{len(vector)}d", *vector)
        )
        atomic_write_bytes(self._path(text), blob)


class CachedEmbeddingClient:
    """Wraps an embedding client with an on-disk cache so evaluations re-run
    offline."""

    def __init__(self, inner: EmbeddingClient, cache: EmbeddingCache) -> None:
        self.inner = inner
        self.cache = cache
        self.model_name = inner.model_name

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        results: list[list[float] | None] = [self.cache.get(t) for t in texts]
        missing = [i for i, vec in enumerate(results) if vec is None]
        if missing:
            fresh = self.inner.embed([texts[i] for i in missing])
            for i, vec in zip(missing, fresh):
                self.cache.put(texts[i], vec)
                results[i] = vec
        return results  # type: ignore[return-value]


def make_generation_client(section: Mapping[str, str]) -> GenerationClient:
    """Build a generation client from a config section; default mock:echo."""
    provider = section.get("provider", "mock:echo")
    if provider == "mock:echo":
        return EchoGenerationClient()
    if provider == "http":
        endpoint = section.get("endpoint")
        model = section.get("model")
        if not endpoint or not model:
            raise ProviderError("http generation provider needs 'endpoint' and 'model'")
        return HttpGenerationClient(
            endpoint=endpoint,
            model=model,
            api_key_env=section.get("api_key_env", "GENERATION_API_KEY"),
            temperature=float(section.get("temperature", "0.0")),
            system=section.get("system") or None,
        )
    raise ProviderError(f"unknown generation provider {provider!r}")


def make_embedding_client(section: Mapping[str, str]) -> EmbeddingClient:
    """Build an embedding client from a config section; default mock:hash.
    A ``cache_dir`` key wraps the client with the on-disk cache."""
    provider = section.get("provider", "mock:hash")
    client: EmbeddingClient
    if provider == "mock:hash":
        client = HashEmbeddingClient(dim=int(section.get("dim", "64")))
    elif provider == "http":
        endpoint = section.get("endpoint")
        model = section.get("model")
        if not endpoint or not model:
            raise ProviderError("http embedding provider needs 'endpoint' and 'model'")
        client = HttpEmbeddingClient(
            endpoint=endpoint,
            model=model,
            api_key_env=section.get("api_key_env", "EMBEDDING_API_KEY"),
        )
    else:
        raise ProviderError(f"unknown embedding provider {provider!r}")
    cache_dir = section.get("cache_dir")
    if cache_dir:
        client = CachedEmbeddingClient(client, EmbeddingCache(cache_dir, client.model_name))
    return client
