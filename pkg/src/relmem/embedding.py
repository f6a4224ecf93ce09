"""Embedding providers and an exact cosine nearest-neighbour index.

The offline :class:`HashingEmbedder` is deterministic and dependency free; a
semantic model is reached through :class:`HttpEmbeddingProvider`.  Both
memories (database selection and data values) are built on
:class:`VectorIndex`.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
import re
from pathlib import Path
from typing import Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import CorruptIndex, DimensionMismatch, DuplicateId, EmptyInput, ProviderUnavailable

INDEX_FORMAT = "relmem-vindex"
INDEX_VERSION = 1


@runtime_checkable
class EmbeddingProvider(Protocol):
    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


def embed(provider: EmbeddingProvider, text: str) -> np.ndarray:
    """Embed ``text`` and check the result against the provider contract."""
    if not text or not text.strip():
        raise EmptyInput("cannot embed empty text")
    vec = np.asarray(provider.embed(text), dtype=np.float32)
    if vec.shape != (provider.dimension,):
        raise ProviderUnavailable(
            f"{provider.name} returned shape {vec.shape}, expected ({provider.dimension},)"
        )
    if not np.all(np.isfinite(vec)) or not np.any(vec):
        raise ProviderUnavailable(f"{provider.name} returned a non-finite or zero vector")
    return vec


_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def char_trigrams(text: str) -> list[str]:
    """Trigrams of the normalized text, padded with one space at each end.

    Padding gives one- and two-character strings ('LA') a non-empty set.
    """
    padded = f" {normalize_text(text)} "
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


class HashingEmbedder:
    """Character-trigram counts hashed into a fixed number of buckets."""

    def __init__(self, dimension: int = 256):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self.name = f"hashing-trigram-{dimension}"

    def _bucket(self, gram: str) -> int:
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        if not text or not text.strip():
            raise EmptyInput("cannot embed empty text")
        counts = np.zeros(self.dimension, dtype=np.float64)
        for gram in char_trigrams(text):
            counts[self._bucket(gram)] += 1.0
        return (counts / np.linalg.norm(counts)).astype(np.float32)


class HttpEmbeddingProvider:
    """Client for ``POST /embed {"texts": [...]} -> {"vectors": [...]}``.

    A service may return one vector per text or a list of token vectors per
    text; token vectors are mean-pooled.
    """

    def __init__(self, base_url: str, dimension: int, timeout: float = 30.0, name: str | None = None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.dimension = dimension
        self.name = name or f"http:{self.base_url}"
        self._client = httpx.Client(timeout=timeout)

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        import httpx

        try:
            resp = self._client.post(f"{self.base_url}/embed", json={"texts": list(texts)})
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"{self.name}: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnavailable(f"{self.name}: HTTP {resp.status_code}")
        try:
            vectors = resp.json()["vectors"]
            if len(vectors) != len(texts):
                raise ValueError(f"{len(vectors)} vectors for {len(texts)} texts")
            out = []
            for v in vectors:
                arr = np.asarray(v, dtype=np.float64)
                if arr.ndim == 2:
                    arr = arr.mean(axis=0)
                out.append(arr.astype(np.float32))
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderUnavailable(f"{self.name}: malformed response: {exc}") from exc
        return out

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]


class VectorIndex:
    """Exact cosine-similarity index over ``(id, float32 vector)`` records.

    Search is an exhaustive scan; ties are broken by ascending id so results
    never depend on insertion order.
    """

    metric = "cosine"

    def __init__(self, dimension: int):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._ids: list[str] = []
        self._rows: list[np.ndarray] = []
        self._id_set: set[str] = set()
        self._matrix: np.ndarray | None = None

    def add(self, id: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float32)
        if vec.shape != (self.dimension,):
            raise DimensionMismatch(f"vector of shape {vec.shape} in a {self.dimension}-dim index")
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"non-finite vector for id {id!r}")
        if id in self._id_set:
            raise DuplicateId(f"duplicate id {id!r}")
        self._ids.append(id)
        self._id_set.add(id)
        self._rows.append(vec.copy())
        self._matrix = None

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self._rows:
                self._matrix = np.stack(self._rows)
            else:
                self._matrix = np.zeros((0, self.dimension), dtype=np.float32)
        return self._matrix

    def vector(self, id: str) -> np.ndarray:
        return self._rows[self._ids.index(id)]

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, id: object) -> bool:
        return id in self._id_set

    def records(self) -> Iterable[tuple[str, np.ndarray]]:
        return zip(self._ids, self._rows)

    def scores(self, query) -> np.ndarray:
        """Cosine similarity of ``query`` against every record, in insertion order."""
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (self.dimension,):
            raise DimensionMismatch(f"query of shape {q.shape} against a {self.dimension}-dim index")
        m = self.matrix.astype(np.float64)
        qn = np.linalg.norm(q)
        norms = np.linalg.norm(m, axis=1)
        denom = norms * qn
        # einsum keeps each row's dot product independent of its position
        dots = np.einsum("ij,j->i", m, q)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)
        return out

    def search(self, query, k: int) -> list[tuple[str, float]]:
        if k < 0:
            raise ValueError("k must be non-negative")
        scores = self.scores(query)
        if k == 0 or not self._ids:
            return []
        order = np.lexsort((np.array(self._ids), -scores))[:k]
        return [(self._ids[i], float(scores[i])) for i in order]

    # persistence ----------------------------------------------------------

    def save(self, location: str | os.PathLike) -> None:
        save_index(self, location)

    @classmethod
    def load(cls, location: str | os.PathLike) -> "VectorIndex":
        return load_index(location)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self._ids == other._ids
            and all(a.tobytes() == b.tobytes() for a, b in zip(self._rows, other._rows))
        )


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def index_to_text(index: VectorIndex) -> str:
    header = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "dim": index.dimension,
        "metric": "cosine",
        "count": len(index),
    }
    lines = [_dumps(header)]
    for id, vec in index.records():
        raw = vec.astype("<f4").tobytes()
        lines.append(_dumps({"id": id, "vec": base64.b64encode(raw).decode("ascii")}))
    return "\n".join(lines) + "\n"


def save_index(index: VectorIndex, location: str | os.PathLike) -> None:
    path = Path(location)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(index_to_text(index), encoding="utf-8")
    os.replace(tmp, path)


def load_index(location: str | os.PathLike) -> VectorIndex:
    path = Path(location)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptIndex(f"{path}: not utf-8") from exc
    return index_from_text(text, str(path))


def index_from_text(text: str, source: str = "<index>") -> VectorIndex:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptIndex(f"{source}: empty file")
    try:
        header = json.loads(lines[0])
        if not isinstance(header, dict):
            raise ValueError("header is not an object")
    except ValueError as exc:
        raise CorruptIndex(f"{source}: bad header: {exc}") from exc
    if header.get("format") != INDEX_FORMAT:
        raise CorruptIndex(f"{source}: bad magic {header.get('format')!r}")
    if header.get("version") != INDEX_VERSION:
        raise CorruptIndex(f"{source}: unsupported version {header.get('version')!r}")
    if header.get("metric") != "cosine":
        raise CorruptIndex(f"{source}: unsupported metric {header.get('metric')!r}")
    dim, count = header.get("dim"), header.get("count")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim <= 0:
        raise CorruptIndex(f"{source}: bad dimension {dim!r}")
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise CorruptIndex(f"{source}: bad count {count!r}")
    if len(lines) - 1 != count:
        raise CorruptIndex(f"{source}: header promises {count} records, found {len(lines) - 1}")

    index = VectorIndex(dim)
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            id = rec["id"]
            raw = base64.b64decode(rec["vec"], validate=True)
            if not isinstance(id, str):
                raise ValueError("id is not a string")
        except (ValueError, KeyError, TypeError) as exc:
            raise CorruptIndex(f"{source}:{lineno}: bad record: {exc}") from exc
        if len(raw) != 4 * dim:
            raise CorruptIndex(f"{source}:{lineno}: record has {len(raw) // 4} floats, header says {dim}")
        vec = np.frombuffer(raw, dtype="<f4").astype(np.float32)
        try:
            index.add(id, vec)
        except (ValueError, DuplicateId) as exc:
            raise CorruptIndex(f"{source}:{lineno}: {exc}") from exc
    return index

