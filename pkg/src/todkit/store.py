"""Few-shot example storage: encoding, exact retrieval and corruption.

The embedder is a pluggable contract with two shipped implementations: a
remote embedding service client and a deterministic local fallback based on
hashed character trigrams, so the whole test suite runs hermetically.
Retrieval is an exact brute-force cosine scan; per-domain pools are small
(tens of examples) by design, so an approximate index would only add risk.
"""

from __future__ import annotations

import hashlib
import json
import random
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Protocol, Sequence, Union

import numpy as np

from .core import (CUSTOMER, SPEAKER_LABELS, BeliefState, DialogueHistory,
                   DomainSchema, StateUpdate, normalize_value)


class Embedder(Protocol):
    name: str
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


class HashedTrigramEmbedder:
    """L2-normalized hashed character-trigram frequency vectors.

    Fully deterministic across processes (crc32 bucketing, no Python hash
    randomization), which keeps stores and retrievals reproducible.
    """

    def __init__(self, dimension: int = 512) -> None:
        self.dimension = dimension
        self.name = f"hashed-trigram-{dimension}"

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        lowered = text.lower()
        grams = ([lowered[i:i + 3] for i in range(len(lowered) - 2)]
                 if len(lowered) >= 3 else ([lowered] if lowered else []))
        for gram in grams:
            vec[zlib.crc32(gram.encode("utf-8")) % self.dimension] += 1.0
        norm = float(np.linalg.norm(vec))
        return vec / norm if norm > 0 else vec


class RemoteEmbedder:
    """Client for a JSON-over-HTTP embedding service.

    Wire shape: POST {"texts": [...]} -> {"embeddings": [[...], ...]}.
    """

    def __init__(self, url: str, dimension: int, timeout: float = 30.0,
                 headers: Optional[Mapping[str, str]] = None) -> None:
        self.url = url
        self.dimension = dimension
        self.timeout = timeout
        self.headers = dict(headers or {})
        self.name = f"remote:{url}"

    def embed(self, text: str) -> np.ndarray:
        import requests

        response = requests.post(self.url, json={"texts": [text]},
                                 headers=self.headers, timeout=self.timeout)
        response.raise_for_status()
        vector = np.asarray(response.json()["embeddings"][0], dtype=np.float64)
        if vector.shape != (self.dimension,):
            raise ValueError(
                f"embedding service returned dimension {vector.shape}, "
                f"expected ({self.dimension},)")
        return vector


def make_context_key(history: DialogueHistory, utterance: str,
                     window: int = 2) -> str:
    """Speaker-labeled context of the last ``window`` utterances, the current
    user utterance included."""
    if window < 1:
        raise ValueError("window must be >= 1")
    lines = [f"{SPEAKER_LABELS[speaker]}: {text}"
             for speaker, text in history.window(window - 1)]
    lines.append(f"{SPEAKER_LABELS[CUSTOMER]}: {utterance}")
    return "\n".join(lines)


@dataclass(frozen=True)
class StoredExample:
    id: str
    domain: str
    context_key: str
    gold_update: StateUpdate
    gold_state: BeliefState
    gold_response_delex: str
    key_vector: tuple[float, ...] = ()
    is_negative: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "domain": self.domain,
            "context_key": self.context_key,
            "gold_update": self.gold_update.to_dict(),
            "gold_state": self.gold_state.to_dict(),
            "gold_response_delex": self.gold_response_delex,
            "key_vector": list(self.key_vector),
            "is_negative": self.is_negative,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StoredExample":
        return cls(
            id=data["id"],
            domain=data["domain"],
            context_key=data["context_key"],
            gold_update=StateUpdate.from_dict(data["gold_update"]),
            gold_state=BeliefState.from_dict(data.get("gold_state", {})),
            gold_response_delex=data.get("gold_response_delex", ""),
            key_vector=tuple(data.get("key_vector", ())),
            is_negative=bool(data.get("is_negative", False)),
        )


class UncorruptibleExampleError(ValueError):
    """No slot of the example has any alternative value to swap in."""


def corrupt_example(example: StoredExample, schema: DomainSchema, seed: int,
                    pool_values: Optional[Mapping[str, Sequence[str]]] = None,
                    ) -> StoredExample:
    """Negative variant of an example: same slots, >=1 value replaced.

    Replacements come from the slot's canonical enumeration, or from values
    of the same slot observed elsewhere in the pool for open slots. Raises
    UncorruptibleExampleError when no slot has an alternative; callers skip
    such examples.
    """
    pairs = dict(example.gold_update.pairs) if example.gold_update else {}
    if not pairs:
        raise UncorruptibleExampleError(f"example {example.id} has no pairs")
    rng = random.Random(seed)
    alternatives: dict[str, list[str]] = {}
    for slot, value in pairs.items():
        spec = schema.slot(slot)
        candidates: list[str] = list(spec.values) if spec and spec.values else []
        if not candidates and pool_values:
            candidates = list(pool_values.get(slot, ()))
        distinct = [c for c in candidates
                    if normalize_value(c) != normalize_value(value)]
        if distinct:
            alternatives[slot] = distinct
    if not alternatives:
        raise UncorruptibleExampleError(
            f"example {example.id}: no replaceable slot values")
    slots = sorted(alternatives)
    chosen = rng.sample(slots, rng.randint(1, len(slots)))
    for slot in chosen:
        pairs[slot] = rng.choice(alternatives[slot])
    return replace(example,
                   gold_update=StateUpdate(example.gold_update.domain, pairs),
                   is_negative=True)


class ContextStore:
    """Per-domain pools of embedded examples with exact cosine retrieval.

    Immutable after construction; concurrent reads are safe.
    """

    def __init__(self, examples: Sequence[StoredExample], embedder: Embedder) -> None:
        self.embedder = embedder
        self._by_domain: dict[str, list[StoredExample]] = {}
        self._matrices: dict[str, np.ndarray] = {}
        for ex in examples:
            if len(ex.key_vector) != embedder.dimension:
                raise ValueError(
                    f"example {ex.id}: vector dimension {len(ex.key_vector)} "
                    f"!= embedder dimension {embedder.dimension}")
            self._by_domain.setdefault(ex.domain, []).append(ex)
        for domain, bucket in self._by_domain.items():
            self._matrices[domain] = np.array([e.key_vector for e in bucket],
                                              dtype=np.float64)

    @property
    def examples(self) -> list[StoredExample]:
        return [ex for domain in sorted(self._by_domain)
                for ex in self._by_domain[domain]]

    def domains(self) -> list[str]:
        return sorted(self._by_domain)

    def bucket(self, domain: str) -> list[StoredExample]:
        return list(self._by_domain.get(domain, ()))

    def __len__(self) -> int:
        return sum(len(b) for b in self._by_domain.values())

    def retrieve(self, key: str, domain: str, k: int) -> list[StoredExample]:
        """Top-k same-domain examples by cosine similarity, descending.

        Exact brute-force scan; ties break by storage order for determinism.
        """
        if k < 0:
            raise ValueError("k must be >= 0")
        bucket = self._by_domain.get(domain)
        if not bucket or k == 0:
            return []
        query = np.asarray(self.embedder.embed(key), dtype=np.float64)
        matrix = self._matrices[domain]
        qn = float(np.linalg.norm(query))
        norms = np.linalg.norm(matrix, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            sims = matrix @ query / np.where(norms * qn > 0, norms * qn, np.inf)
        order = sorted(range(len(bucket)), key=lambda i: (-sims[i], i))
        return [bucket[i] for i in order[:k]]

    def pool_values(self, domain: str) -> dict[str, list[str]]:
        """Distinct values observed per slot across a domain's pool."""
        values: dict[str, list[str]] = {}
        for ex in self._by_domain.get(domain, ()):
            if not ex.gold_update:
                continue
            for slot, value in ex.gold_update.pairs.items():
                bucket = values.setdefault(slot, [])
                if value not in bucket:
                    bucket.append(value)
        return values

    def make_negative(self, example: StoredExample, schema: DomainSchema,
                      seed: int) -> StoredExample:
        return corrupt_example(example, schema, seed,
                               pool_values=self.pool_values(example.domain))

    def save(self, path: Union[str, Path]) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"meta": {
                "embedder": self.embedder.name,
                "dimension": self.embedder.dimension,
            }}, sort_keys=True) + "\n")
            for ex in self.examples:
                fh.write(json.dumps(ex.to_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Union[str, Path], embedder: Embedder) -> "ContextStore":
        path = Path(path)
        examples = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                if "meta" in record:
                    meta = record["meta"]
                    if meta.get("dimension") != embedder.dimension:
                        raise ValueError(
                            f"store was built with dimension {meta.get('dimension')}, "
                            f"embedder has {embedder.dimension}")
                    continue
                examples.append(StoredExample.from_dict(record))
        return cls(examples, embedder)

    def fingerprint(self) -> str:
        payload = json.dumps([ex.to_dict() for ex in self.examples],
                             sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()


@dataclass
class Snippet:
    """A candidate store entry extracted from a single-domain dialogue."""

    id: str
    domain: str
    context_key: str
    gold_update: StateUpdate
    gold_state: BeliefState
    gold_response_delex: str
    multi_domain: bool = False


def build_store(snippets: Iterable[Snippet], pool_size_per_domain: int,
                embedder: Embedder, seed: int = 0) -> ContextStore:
    """Sample up to ``pool_size_per_domain`` single-domain snippets per domain
    (seeded, reproducible) and embed their context keys."""
    by_domain: dict[str, list[Snippet]] = {}
    for snippet in snippets:
        if snippet.multi_domain:
            continue
        by_domain.setdefault(snippet.domain, []).append(snippet)
    examples: list[StoredExample] = []
    for domain in sorted(by_domain):
        pool = by_domain[domain]
        rng = random.Random((seed, domain).__repr__())
        if len(pool) > pool_size_per_domain:
            pool = rng.sample(pool, pool_size_per_domain)
        for snippet in sorted(pool, key=lambda s: s.id):
            vector = embedder.embed(snippet.context_key)
            examples.append(StoredExample(
                id=snippet.id,
                domain=snippet.domain,
                context_key=snippet.context_key,
                gold_update=snippet.gold_update,
                gold_state=snippet.gold_state,
                gold_response_delex=snippet.gold_response_delex,
                key_vector=tuple(float(x) for x in vector),
            ))
    return ContextStore(examples, embedder)
