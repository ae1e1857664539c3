"""Static word-embedding table with cosine nearest-neighbor queries.

Tables load from the plain-text word2vec format (a ``<count> <dim>`` header
line followed by one ``word v1 ... vd`` line per entry).  Neighbor search is
a brute-force scan over the normalized matrix; queries per word are rare
enough that no approximate index is warranted.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("stopword list must be non-empty")

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words

    @classmethod
    def english(cls) -> "StopwordList":
        return cls(frozenset(_ENGLISH_STOPWORDS))


class EmbeddingTable:
    """Immutable word -> dense vector table; queries are thread-safe."""

    def __init__(self, words: list[str], vectors: np.ndarray) -> None:
        if vectors.ndim != 2 or len(words) != vectors.shape[0]:
            raise EmbeddingError("one vector per word required")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingError("embedding vectors must be finite")
        self.words = list(words)
        self.vectors = vectors.astype(np.float64)
        self.dimension = int(vectors.shape[1])
        self._index = {w: i for i, w in enumerate(self.words)}
        if len(self._index) != len(self.words):
            raise EmbeddingError("duplicate words in embedding table")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.any(norms == 0.0):
            raise EmbeddingError("zero vector in embedding table")
        self._unit = self.vectors / norms[:, None]

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __len__(self) -> int:
        return len(self.words)

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self._index[word]]

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        path = Path(path)
        lines = path.read_text(encoding="utf-8").splitlines()
        if not lines:
            raise EmbeddingError(f"{path}: empty embedding file")
        try:
            count, dim = (int(x) for x in lines[0].split())
        except ValueError as exc:
            raise EmbeddingError(f"{path}: bad header {lines[0]!r}") from exc
        words: list[str] = []
        rows: list[list[float]] = []
        for lineno, line in enumerate(lines[1 : count + 1], start=2):
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                raise EmbeddingError(f"{path}:{lineno}: expected {dim} components")
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        if len(words) != count:
            raise EmbeddingError(f"{path}: header declares {count} words, found {len(words)}")
        return cls(words, np.array(rows, dtype=np.float64))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise EmbeddingError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise EmbeddingError("cosine undefined for the zero vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


SIMILARITY_DECIMALS = 12


def top_k_neighbors(
    table: EmbeddingTable, word: str, k: int
) -> list[tuple[str, float]] | None:
    """The k nearest in-vocabulary words, or None for an unknown query.

    Similarities are rounded to 12 decimals before ranking so that
    mathematical ties break lexicographically instead of by floating-point
    noise; rankings are then reproducible across runs and compute paths.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if word not in table:
        return None
    query = table._unit[table._index[word]]
    sims = table._unit @ query
    ranked = sorted(
        (
            (other, round(float(sims[i]), SIMILARITY_DECIMALS))
            for i, other in enumerate(table.words)
            if other != word
        ),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:k]


# A fixed, versioned English stopword list shipped in-repo so that results
# never depend on an external resource.
_ENGLISH_STOPWORDS = (
    "a about above after again against all am an and any are as at be because been "
    "before being below between both but by can did do does doing down during each "
    "few for from further had has have having he her here hers herself him himself "
    "his how i if in into is it its itself just me more most my myself no nor not "
    "now of off on once only or other our ours ourselves out over own same she "
    "should so some such than that the their theirs them themselves then there "
    "these they this those through to too under until up very was we were what "
    "when where which while who whom why will with you your yours yourself "
    "yourselves"
).split()
