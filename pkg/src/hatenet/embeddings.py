"""Pretrained word-vector tables and fixed-size post matrices.

Vector files use the standard text layout: one token per line followed by
its coordinates, whitespace separated; an optional leading ``count dim``
header line is tolerated.  A deterministic synthetic table is provided
for tests and demos so no multi-gigabyte downloads are needed.
"""

from __future__ import annotations

import hashlib
import logging

import numpy as np

from .errors import EmptyTableError
from .text import TokenSequence

log = logging.getLogger(__name__)


class EmbeddingTable:
    """Immutable token -> vector map with a fixed dimension."""

    def __init__(self, dim: int, vectors: dict[str, np.ndarray], name: str):
        self.dim = int(dim)
        self.vectors = vectors
        self.name = name

    def get(self, token: str) -> "np.ndarray | None":
        return self.vectors.get(token)

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, token: str) -> bool:
        return token in self.vectors


class SyntheticTable(EmbeddingTable):
    """Deterministic pseudo-random unit vectors for any queried token.

    The vector depends only on (seed, token) via a stable digest, so the
    same token maps to the same vector across runs and platforms.
    """

    def __init__(self, seed: int, dim: int):
        super().__init__(dim, {}, f"synthetic:{seed}:{dim}")
        self.seed = int(seed)

    def get(self, token: str) -> np.ndarray:
        vec = self.vectors.get(token)
        if vec is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            entropy = [self.seed] + [
                int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)
            ]
            rng = np.random.default_rng(entropy)
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self.vectors[token] = vec
        return vec

    def __contains__(self, token: str) -> bool:
        return True


def synthetic_table(seed: int, dim: int) -> SyntheticTable:
    if dim < 1:
        raise ValueError(f"embedding dim must be >= 1, got {dim}")
    return SyntheticTable(seed, dim)


def load_table(path: str, dim: int) -> EmbeddingTable:
    """Read a text vector file; malformed lines are skipped and counted.

    Raises EmptyTableError when no usable vector remains.
    """
    vectors: dict[str, np.ndarray] = {}
    skipped = 0
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) <= 2:
                try:
                    [int(p) for p in parts]
                    continue  # header line: vocabulary size / dimension
                except ValueError:
                    pass
            if len(parts) != dim + 1:
                log.warning("%s:%d: expected %d values, got %d; line skipped",
                            path, lineno, dim, len(parts) - 1)
                skipped += 1
                continue
            token = parts[0]
            try:
                vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError:
                log.warning("%s:%d: non-numeric vector component; line skipped",
                            path, lineno)
                skipped += 1
                continue
            if token not in vectors:  # duplicates keep the first occurrence
                vectors[token] = vec
    if not vectors:
        raise EmptyTableError(f"no usable vectors in {path}")
    if skipped:
        log.warning("%s: skipped %d malformed line(s)", path, skipped)
    table = EmbeddingTable(dim, vectors, name=path)
    table.skipped = skipped
    return table


class TokenMatrix:
    """L x dim matrix for one post, zero rows on the left as padding."""

    def __init__(self, values: np.ndarray, n_real: int):
        self.values = values
        self.n_real = n_real

    @property
    def shape(self):
        return self.values.shape


def embed(seq: TokenSequence, table: EmbeddingTable, L: int = 100) -> TokenMatrix:
    """Map a token sequence to an L x dim matrix, zero left padding.

    Posts longer than L keep their first L tokens.  Lookup tries the
    stemmed token, then the pre-stem surface form, then falls back to
    the zero vector (inert under downstream max pooling).
    """
    if L < 1:
        raise ValueError(f"sequence length must be >= 1, got {L}")
    values = np.zeros((L, table.dim), dtype=np.float64)
    tokens = seq.tokens[:L]
    surfaces = seq.surfaces[:L]
    n_real = len(tokens)
    offset = L - n_real
    for i, token in enumerate(tokens):
        vec = table.get(token)
        if vec is None and i < len(surfaces):
            vec = table.get(surfaces[i])
        if vec is not None:
            values[offset + i] = vec
    return TokenMatrix(values, n_real)
