"""Skill-string embeddings: provider contract, cosine similarity, disk cache.

Providers turn skill strings into fixed-dimension float64 vectors. Two ship
here: a deterministic character-trigram mock (no model, no network; used by
all tests) and an HTTP client for any service exposing the embedding
contract::

    POST {endpoint}/embed  {"texts": ["...", ...]}
      -> {"vectors": [[...], ...], "dim": D, "normalized": true|false}

The persistent cache keeps one append-only binary vector log plus a JSONL
index per directory; entries are keyed by the provider descriptor
(name+version+dim+normalized) and the text, so vectors from different
provider versions never collide.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
import requests

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-6  # providers declaring normalized output must hit this


class EmbeddingError(RuntimeError):
    """Provider transport failure or a vector violating the declared contract."""


class CacheError(RuntimeError):
    """Cache storage I/O failure; callers may continue uncached."""


@dataclass(frozen=True)
class EmbedderDescriptor:
    """Identity of an embedding provider; name+version key cache validity."""

    name: str
    dim: int
    normalized: bool
    version: str

    def cache_key(self, text: str) -> str:
        material = "\x1f".join(
            [self.name, self.version, str(self.dim), str(int(self.normalized)), text]
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def label(self) -> str:
        return f"{self.name}@{self.version}"


@runtime_checkable
class EmbeddingProvider(Protocol):
    descriptor: EmbedderDescriptor

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two vectors, clamped to [-1, 1] against rounding.

    Raises ValueError on dimension mismatch or an all-zero input.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    value = float(np.dot(a, b)) / (na * nb)
    return max(-1.0, min(1.0, value))


# --- deterministic mock provider ------------------------------------------

MOCK_DIM = 256
_FNV_OFFSET = 2166136261
_FNV_PRIME = 16777619
_MOCK_SEED = 0x5BD1E995


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET ^ _MOCK_SEED
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFF
    return h


def _bucket(gram: str) -> int:
    h = _fnv1a(gram.encode("utf-8"))
    return (h ^ (h >> 16) ^ (h >> 8)) & 0xFF


def mock_embed(text: str) -> np.ndarray:
    """Deterministic embedding: hashed bag of character trigrams, L2-normalized.

    Case-folds the text, slides a width-3 window (texts shorter than 3
    characters contribute themselves as a single gram), hashes each gram into
    one of 256 buckets with a fixed seed, and normalizes the bucket counts.
    Identical across platforms and runs; collisions between unrelated grams
    are possible but rare enough for graded-similarity fixtures.
    """
    if not text:
        raise ValueError("cannot embed an empty string")
    folded = text.casefold()
    if len(folded) < 3:
        grams = [folded]
    else:
        grams = [folded[i : i + 3] for i in range(len(folded) - 2)]
    counts = [0] * MOCK_DIM
    for gram in grams:
        counts[_bucket(gram)] += 1
    # plain index-order accumulation keeps the arithmetic bit-reproducible
    norm = math.sqrt(sum(c * c for c in counts))
    return np.array([c / norm for c in counts], dtype=np.float64)


class MockEmbedder:
    """In-process provider wrapping :func:`mock_embed`."""

    def __init__(self) -> None:
        self.descriptor = EmbedderDescriptor(
            name="mock-trigram", dim=MOCK_DIM, normalized=True, version="1"
        )

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [mock_embed(t) for t in texts]


# --- HTTP provider ---------------------------------------------------------

class HttpEmbedder:
    """Client for an embedding service exposing POST /embed.

    ``name``/``version`` should be pinned in config for stable cache keys;
    otherwise the name is derived from the endpoint and the version is
    "unversioned". The dimension and normalization flag are learned from the
    first response (a one-text probe) and enforced afterwards.
    """

    def __init__(
        self,
        endpoint: str,
        name: str | None = None,
        version: str = "unversioned",
        timeout_sec: float = 60.0,
        batch_size: int = 128,
    ) -> None:
        self._endpoint = endpoint.rstrip("/")
        self._timeout = timeout_sec
        self._batch_size = batch_size
        self._session = requests.Session()
        self._name = name or f"http:{self._endpoint}"
        self._version = version
        self._descriptor: EmbedderDescriptor | None = None

    @property
    def descriptor(self) -> EmbedderDescriptor:
        if self._descriptor is None:
            dim, normalized, _ = self._post(["dimension probe"])
            self._descriptor = EmbedderDescriptor(
                name=self._name, dim=dim, normalized=normalized, version=self._version
            )
        return self._descriptor

    def _post(self, texts: Sequence[str]) -> tuple[int, bool, list[np.ndarray]]:
        url = self._endpoint + "/embed"
        try:
            resp = self._session.post(url, json={"texts": list(texts)}, timeout=self._timeout)
            resp.raise_for_status()
            body = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise EmbeddingError(f"embedding service at {url} failed: {exc}") from exc
        vectors = body.get("vectors")
        dim = body.get("dim")
        normalized = body.get("normalized")
        if not isinstance(vectors, list) or not isinstance(dim, int) or not isinstance(normalized, bool):
            raise EmbeddingError(f"malformed /embed response from {url}")
        if len(vectors) != len(texts):
            raise EmbeddingError(
                f"{url} returned {len(vectors)} vectors for {len(texts)} texts"
            )
        arrays = [np.asarray(v, dtype=np.float64) for v in vectors]
        return dim, normalized, arrays

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        desc = self.descriptor
        out: list[np.ndarray] = []
        for lo in range(0, len(texts), self._batch_size):
            chunk = texts[lo : lo + self._batch_size]
            dim, normalized, arrays = self._post(chunk)
            if dim != desc.dim or normalized != desc.normalized:
                raise EmbeddingError(
                    f"embedding service changed its contract mid-run: "
                    f"dim {desc.dim}->{dim}, normalized {desc.normalized}->{normalized}"
                )
            out.extend(arrays)
        return out


# --- persistent cache ------------------------------------------------------

class EmbeddingCache:
    """Disk cache: ``index.jsonl`` plus append-only ``vectors.bin`` (float64 LE).

    get-after-put returns the identical vector bit-for-bit. Reads and writes
    are serialized with a lock; losing a racing duplicate write is harmless
    because values are idempotent per key.
    """

    INDEX_FILE = "index.jsonl"
    VECTORS_FILE = "vectors.bin"

    def __init__(self, directory: str | Path) -> None:
        self._dir = Path(directory)
        self._lock = threading.Lock()
        self._index: dict[str, tuple[int, int]] = {}  # key -> (offset, dim)
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
            self._load_index()
            self._vectors = open(self._dir / self.VECTORS_FILE, "a+b")
        except OSError as exc:
            raise CacheError(f"cannot open cache at {self._dir}: {exc}") from exc

    def _load_index(self) -> None:
        path = self._dir / self.INDEX_FILE
        if not path.exists():
            return
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                line = line.strip()
                if not line:
                    continue
                try:
                    entry = json.loads(line)
                    self._index[entry["key"]] = (int(entry["offset"]), int(entry["dim"]))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    logger.warning("skipping corrupt cache index line in %s", path)

    def get(self, descriptor: EmbedderDescriptor, text: str) -> np.ndarray | None:
        key = descriptor.cache_key(text)
        with self._lock:
            entry = self._index.get(key)
            if entry is None:
                return None
            offset, dim = entry
            try:
                self._vectors.seek(offset)
                raw = self._vectors.read(8 * dim)
            except OSError as exc:
                raise CacheError(f"cache read failed: {exc}") from exc
        if len(raw) != 8 * dim:
            logger.warning("truncated cache entry for key %s; treating as miss", key[:12])
            return None
        return np.frombuffer(raw, dtype="<f8").astype(np.float64, copy=True)

    def put(self, descriptor: EmbedderDescriptor, text: str, vector: np.ndarray) -> None:
        key = descriptor.cache_key(text)
        data = np.asarray(vector, dtype="<f8").tobytes()
        with self._lock:
            if key in self._index:
                return
            try:
                self._vectors.seek(0, 2)
                offset = self._vectors.tell()
                self._vectors.write(data)
                self._vectors.flush()
                with open(self._dir / self.INDEX_FILE, "a", encoding="utf-8") as f:
                    f.write(
                        json.dumps({"key": key, "offset": offset, "dim": vector.shape[0]})
                        + "\n"
                    )
            except OSError as exc:
                raise CacheError(f"cache write failed: {exc}") from exc
            self._index[key] = (offset, vector.shape[0])

    def __len__(self) -> int:
        return len(self._index)

    def close(self) -> None:
        self._vectors.close()

    def __enter__(self) -> "EmbeddingCache":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


# --- batch embedding with write-through caching ----------------------------

def _validate_vector(vec: np.ndarray, descriptor: EmbedderDescriptor, text: str) -> None:
    if vec.shape != (descriptor.dim,):
        raise EmbeddingError(
            f"provider {descriptor.label()} returned shape {vec.shape} "
            f"for declared dim {descriptor.dim} (text {text!r})"
        )
    if not np.all(np.isfinite(vec)):
        raise EmbeddingError(f"non-finite embedding for text {text!r}")
    if descriptor.normalized:
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise EmbeddingError(
                f"provider {descriptor.label()} declares normalized output "
                f"but returned norm {norm!r} for text {text!r}"
            )


def embed_batch(
    provider: EmbeddingProvider,
    texts: Sequence[str],
    cache: EmbeddingCache | None = None,
) -> list[np.ndarray]:
    """Embed texts in order, one vector per input, through the cache if given.

    Duplicate texts are embedded once. Cache failures are logged and the
    batch proceeds uncached; provider failures propagate.
    """
    for t in texts:
        if not isinstance(t, str) or not t:
            raise ValueError(f"texts must be non-empty strings, got {t!r}")
    descriptor = provider.descriptor
    resolved: dict[str, np.ndarray] = {}
    missing: list[str] = []
    for t in texts:
        if t in resolved or t in missing:
            continue
        cached = None
        if cache is not None:
            try:
                cached = cache.get(descriptor, t)
            except CacheError as exc:
                logger.warning("%s; continuing uncached", exc)
        if cached is not None:
            resolved[t] = cached
        else:
            missing.append(t)
    if missing:
        vectors = provider.embed(missing)
        if len(vectors) != len(missing):
            raise EmbeddingError(
                f"provider returned {len(vectors)} vectors for {len(missing)} texts"
            )
        for t, vec in zip(missing, vectors):
            vec = np.asarray(vec, dtype=np.float64)
            _validate_vector(vec, descriptor, t)
            resolved[t] = vec
            if cache is not None:
                try:
                    cache.put(descriptor, t, vec)
                except CacheError as exc:
                    logger.warning("%s; continuing uncached", exc)
    return [resolved[t] for t in texts]
