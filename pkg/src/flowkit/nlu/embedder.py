"""Deterministic sentence embedding.

The default embedder hashes word unigrams and character trigrams into a
fixed 1024-dimensional count vector (FNV-1a 64-bit, modulo the dimension)
and L2-normalizes it.  It is dependency-light, reproducible across machines
and languages, and fast enough to embed whole training banks inline.

Any object matching :class:`Embedder` can be plugged in instead, e.g. a
neural sentence encoder.
"""

from __future__ import annotations

import re
from typing import Iterator, Protocol

import numpy as np

DIM = 1024

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_SPLIT_RE = re.compile(r"[^a-z0-9]+")


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def features(text: str) -> Iterator[str]:
    """Word unigrams plus character trigrams of each token."""
    for token in _SPLIT_RE.split(text.lower()):
        if not token:
            continue
        yield token
        for i in range(len(token) - 2):
            yield token[i : i + 3]


class Embedder(Protocol):
    dim: int

    def embed(self, text: str) -> np.ndarray: ...


class HashingEmbedder:
    """Hashed unigram+trigram term-frequency embedder (unit L2 norm)."""

    def __init__(self, dim: int = DIM):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=np.float64)
        for feature in features(text):
            vec[fnv1a_64(feature.encode("utf-8")) % self.dim] += 1.0
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            return vec
        return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero vectors yield 0.0."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


DEFAULT_EMBEDDER = HashingEmbedder()


def embed(text: str) -> np.ndarray:
    return DEFAULT_EMBEDDER.embed(text)
