"""Text embedding interface and the bundled deterministic embedder.

Production deployments plug in a real sentence encoder; every component in
this package only relies on the small contract below: a fixed output
dimension and L2-normalized vectors, with identical text mapping to
identical vectors.
"""

from __future__ import annotations

import re
from typing import Protocol, runtime_checkable

import numpy as np

from .hashing import fnv1a64_text

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


@runtime_checkable
class Embedder(Protocol):
    """Maps text into a shared d-dimensional semantic space.

    Implementations must be deterministic for identical input and return
    L2-normalized float vectors of dimension ``dim`` (norm 1 within 1e-6,
    except for the degenerate no-token input, which maps to the zero vector).
    """

    @property
    def dim(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...


class HashedTokenEmbedder:
    """Deterministic bag-of-tokens embedder used in tests and offline runs.

    Tokenizes on non-alphanumeric characters after lowercasing, hashes each
    token with FNV-1a into one of ``dim`` buckets (sign taken from the hash
    parity), accumulates, and L2-normalizes. Shared tokens between two texts
    produce shared vector mass, so token overlap translates into cosine
    similarity.
    """

    def __init__(self, dim: int = 256):
        if dim < 1:
            raise ValueError("embedding dimension must be >= 1")
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self._dim, dtype=np.float64)
        for token in _TOKEN_SPLIT.split(text.lower()):
            if not token:
                continue
            h = fnv1a64_text(token)
            sign = 1.0 if h % 2 == 0 else -1.0
            vec[h % self._dim] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
        return vec
