"""Sentence embedding: chunking, backends, and the on-disk cache.

Backends are pluggable behind a small contract (``dim``, ``max_chars``,
``embed_batch``). Texts longer than ``max_chars`` characters are split at
whitespace boundaries and the chunk embeddings averaged element-wise.

The hashing backend is the deterministic in-repo backend: bag-of-tokens
feature hashing with a sign hash, L2-normalized. Shared tokens produce real
cosine-similarity structure without any model weights, which is what makes
offline end-to-end evaluation meaningful.
"""
from __future__ import annotations

import hashlib
import os
import re
import tempfile
from pathlib import Path
from typing import Optional, Protocol, Sequence, Union, runtime_checkable

import numpy as np

from .errors import BackendError
from .serializer import CombineMode

DEFAULT_DIM = 768
DEFAULT_MAX_CHARS = 510

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def chunk_text(text: str, max_chars: int = DEFAULT_MAX_CHARS) -> list[str]:
    """Split text into whitespace-delimited chunks of at most max_chars.

    Splits greedily at whitespace (longest prefix that fits); a single token
    longer than the limit is hard-split at max_chars. Whitespace runs collapse
    to single spaces inside chunks. Empty or all-whitespace text gives [].
    """
    if max_chars < 1:
        raise ValueError("max_chars must be >= 1")
    pieces: list[str] = []
    for token in text.split():
        while len(token) > max_chars:
            pieces.append(token[:max_chars])
            token = token[max_chars:]
        if token:
            pieces.append(token)

    chunks: list[str] = []
    current = ""
    for piece in pieces:
        if not current:
            current = piece
        elif len(current) + 1 + len(piece) <= max_chars:
            current += " " + piece
        else:
            chunks.append(current)
            current = piece
    if current:
        chunks.append(current)
    return chunks


@runtime_checkable
class EmbeddingBackend(Protocol):
    """Capability contract every backend satisfies."""

    backend_id: str
    dim: int
    max_chars: int

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        """Embed texts, returning an (n, dim) float64 array, order-aligned."""
        ...


class HashingBackend:
    """Deterministic bag-of-tokens feature-hashing embedder.

    Lowercase, split on non-alphanumerics, hash each token to a bucket with a
    +/-1 sign from a second hash, sum counts, then L2-normalize (the zero
    vector stays zero). Pure and reentrant.
    """

    def __init__(self, dim: int = DEFAULT_DIM, max_chars: int = DEFAULT_MAX_CHARS):
        if dim < 1 or max_chars < 1:
            raise ValueError("dim and max_chars must be positive")
        self.dim = dim
        self.max_chars = max_chars
        self.backend_id = f"hashing-d{dim}"
        self._token_cache: dict[str, tuple[int, float]] = {}

    def _bucket_sign(self, token: str) -> tuple[int, float]:
        hit = self._token_cache.get(token)
        if hit is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=16).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dim
            sign = 1.0 if digest[8] & 1 else -1.0
            hit = (bucket, sign)
            self._token_cache[token] = hit
        return hit

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            vec = out[i]
            for token in _TOKEN_RE.findall(text.lower()):
                bucket, sign = self._bucket_sign(token)
                vec[bucket] += sign
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec /= norm
        return out


class RemoteBackend:
    """HTTP embedding service: POST {"texts": [...]} -> {"embeddings", "dim"}."""

    def __init__(
        self,
        url: str,
        dim: int = DEFAULT_DIM,
        max_chars: int = DEFAULT_MAX_CHARS,
        timeout: float = 60.0,
    ):
        self.url = url
        self.dim = dim
        self.max_chars = max_chars
        self.timeout = timeout
        tag = hashlib.sha256(url.encode("utf-8")).hexdigest()[:8]
        self.backend_id = f"remote-{tag}-d{dim}"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        import requests

        try:
            resp = requests.post(
                self.url, json={"texts": list(texts)}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendError(f"embedding service unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(
                f"embedding service returned HTTP {resp.status_code}"
            )
        payload = resp.json()
        if payload.get("dim") != self.dim:
            raise BackendError(
                f"dimension mismatch: expected {self.dim}, got {payload.get('dim')}"
            )
        matrix = np.asarray(payload["embeddings"], dtype=np.float64)
        if matrix.shape != (len(texts), self.dim):
            raise BackendError(f"bad embeddings shape {matrix.shape}")
        return matrix


class LocalModelBackend:
    """Sentence-encoder loaded from a local model directory."""

    def __init__(
        self,
        model_dir: Union[str, Path],
        max_chars: int = DEFAULT_MAX_CHARS,
    ):
        path = Path(model_dir)
        if not path.is_dir():
            raise BackendError(f"model directory not found: {path}")
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise BackendError(
                "local model backend requires the sentence-transformers package"
            ) from exc
        try:
            self._model = SentenceTransformer(str(path))
        except Exception as exc:
            raise BackendError(f"failed to load model from {path}: {exc}") from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.max_chars = max_chars
        self.backend_id = f"local-{path.name}-d{self.dim}"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(
            self._model.encode(list(texts), convert_to_numpy=True), dtype=np.float64
        )


class CachingBackend:
    """On-disk key-value cache keyed by (backend id, content hash of text).

    One .npy file per key, written atomically (temp file + rename) so
    concurrent readers never see partial vectors.
    """

    def __init__(self, inner: EmbeddingBackend, cache_dir: Union[str, Path]):
        self.inner = inner
        self.backend_id = inner.backend_id
        self.dim = inner.dim
        self.max_chars = inner.max_chars
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, text: str) -> Path:
        key = hashlib.sha256(
            f"{self.backend_id}\0{text}".encode("utf-8")
        ).hexdigest()
        return self.cache_dir / key[:2] / f"{key}.npy"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        miss_idx: list[int] = []
        for i, text in enumerate(texts):
            path = self._path(text)
            if path.exists():
                out[i] = np.load(path)
            else:
                miss_idx.append(i)
        if miss_idx:
            fresh = self.inner.embed_batch([texts[i] for i in miss_idx])
            for j, i in enumerate(miss_idx):
                out[i] = fresh[j]
                path = self._path(texts[i])
                path.parent.mkdir(parents=True, exist_ok=True)
                fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
                try:
                    with os.fdopen(fd, "wb") as handle:
                        np.save(handle, fresh[j])
                    os.replace(tmp, path)
                except BaseException:
                    if os.path.exists(tmp):
                        os.unlink(tmp)
                    raise
        return out


def embed_text(text: str, backend: EmbeddingBackend) -> np.ndarray:
    """Embed one text, chunking and averaging when it exceeds max_chars.

    Empty (or all-whitespace) text maps to the zero vector.
    """
    if not text.strip():
        return np.zeros(backend.dim, dtype=np.float64)
    if len(text) <= backend.max_chars:
        return backend.embed_batch([text])[0]
    chunks = chunk_text(text, backend.max_chars)
    return backend.embed_batch(chunks).mean(axis=0)


def embed_entity_sources(
    per_source_texts: Sequence[str],
    mode: CombineMode,
    backend: EmbeddingBackend,
) -> np.ndarray:
    """Embed one entity's per-source sentences.

    Separate mode concatenates the K per-source embeddings (dimension K*dim);
    single-paragraph mode embeds the space-joined paragraph (dimension dim).
    """
    if mode is CombineMode.SINGLE_PARAGRAPH:
        return embed_text(" ".join(per_source_texts), backend)
    if not per_source_texts:
        raise ValueError("separate mode requires at least one source")
    return np.concatenate([embed_text(t, backend) for t in per_source_texts])


def make_backend(
    name: str,
    *,
    dim: int = DEFAULT_DIM,
    max_chars: int = DEFAULT_MAX_CHARS,
    url: Optional[str] = None,
    model_dir: Optional[str] = None,
    cache_dir: Optional[Union[str, Path]] = None,
) -> EmbeddingBackend:
    """Construct a backend by name ('hashing', 'remote', 'local')."""
    if name == "hashing":
        backend: EmbeddingBackend = HashingBackend(dim=dim, max_chars=max_chars)
    elif name == "remote":
        if not url:
            raise BackendError("remote backend requires a URL")
        backend = RemoteBackend(url, dim=dim, max_chars=max_chars)
    elif name == "local":
        if not model_dir:
            raise BackendError("local backend requires a model directory")
        backend = LocalModelBackend(model_dir, max_chars=max_chars)
    else:
        raise BackendError(f"unknown backend '{name}'")
    if cache_dir is not None:
        backend = CachingBackend(backend, cache_dir)
    return backend
