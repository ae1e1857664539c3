"""Word-level augmentation by embedding-neighbor or masked-LM substitution.

Both methods walk the eligible positions of the user utterance, draw a
candidate pool per position (nearest neighbors or fill-mask suggestions),
try the pool in seeded random order, and keep the first candidate the
consistency filter accepts.  When every candidate is rejected the original
word stands, so the worst case returns an unchanged copy of the turn.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from ..corpus import Turn, replace_turn_texts
from ..delex import relexicalize
from ..embeddings import EmbeddingTable, StopwordList, top_k_neighbors
from ..filtering import Predictor, check
from ..text import detokenize, is_placeholder, tokenize

_PUNCTUATION = {".", ",", "?", "!"}


@dataclass(frozen=True)
class SubstitutionPolicy:
    k: int = 10
    max_positions_fraction: float = 1.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("candidate pool size k must be >= 1")
        if not 0.0 < self.max_positions_fraction <= 1.0:
            raise ValueError("max_positions_fraction must be in (0, 1]")


def eligible_positions(tokens: Sequence[str], stopwords: StopwordList) -> list[int]:
    """Positions that may be substituted: no placeholders, stopwords, punctuation."""
    return [
        i
        for i, token in enumerate(tokens)
        if not is_placeholder(token) and token not in _PUNCTUATION and token not in stopwords
    ]


def _attempted_positions(
    positions: list[int], fraction: float, rng: random.Random
) -> list[int]:
    if fraction >= 1.0 or not positions:
        return positions
    count = max(1, round(fraction * len(positions)))
    return sorted(rng.sample(positions, min(count, len(positions))))


def _rebuild_turn(turn: Turn, tokens: list[str]) -> Turn:
    user_delex = detokenize(tokens)
    if user_delex == turn.user_delex:
        return turn
    user = relexicalize(user_delex, turn.delex_map.user)
    return replace_turn_texts(turn, user=user, user_delex=user_delex)


def substitute_embedding(
    turn: Turn,
    table: EmbeddingTable,
    stopwords: StopwordList,
    policy: SubstitutionPolicy,
    predictor: Predictor,
    context: Sequence[str] = (),
) -> Turn:
    """Neighbor substitution over the user utterance, filter-gated."""
    rng = random.Random(policy.rng_seed)
    tokens = tokenize(turn.user_delex)
    positions = [i for i in eligible_positions(tokens, stopwords) if tokens[i].lower() in table]
    for position in _attempted_positions(positions, policy.max_positions_fraction, rng):
        neighbors = top_k_neighbors(table, tokens[position].lower(), policy.k)
        if not neighbors:
            continue
        pool = [word for word, _ in neighbors]
        rng.shuffle(pool)
        _try_pool(turn, tokens, position, pool, predictor, context)
    return _rebuild_turn(turn, tokens)


def substitute_masked_lm(
    turn: Turn,
    backend,
    stopwords: StopwordList,
    policy: SubstitutionPolicy,
    predictor: Predictor,
    context: Sequence[str] = (),
) -> Turn:
    """Masked-LM substitution; the pool is the backend's fill-mask top k."""
    rng = random.Random(policy.rng_seed)
    tokens = tokenize(turn.user_delex)
    positions = eligible_positions(tokens, stopwords)
    for position in _attempted_positions(positions, policy.max_positions_fraction, rng):
        original = tokens[position]
        masked = detokenize(
            [backend.mask_token if i == position else t for i, t in enumerate(tokens)]
        )
        candidates = backend.fill_mask(masked, policy.k)
        pool = [token for token, _ in candidates if token != original]
        if not pool:
            continue
        rng.shuffle(pool)
        _try_pool(turn, tokens, position, pool, predictor, context)
    return _rebuild_turn(turn, tokens)


def _try_pool(
    turn: Turn,
    tokens: list[str],
    position: int,
    pool: list[str],
    predictor: Predictor,
    context: Sequence[str],
) -> None:
    for candidate in pool:
        trial = list(tokens)
        trial[position] = candidate
        decision = check(predictor, context, turn, detokenize(trial))
        if decision.accepted:
            tokens[position] = candidate
            return
