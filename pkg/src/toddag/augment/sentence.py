"""Sentence-level augmentation: back-translation, paraphrasing, rotation.

Every operation either returns a synthetic turn or None, where None means
the augmentation was rejected (a damaged placeholder, a lost slot value, no
rotatable structure).  Callers keep the original turn in place of a
rejection so corpus expansion counts stay exact.
"""

from __future__ import annotations

import itertools
import logging
import random
import re
from typing import Sequence

from ..corpus import Turn, replace_turn_texts
from ..delex import (
    DelexEntry,
    DelexMap,
    ProtectedText,
    delexicalize,
    protect,
    relexicalize,
    restore,
)
from ..parses import DependencyParse, ParseError
from ..text import detokenize, find_placeholders, tokenize

log = logging.getLogger(__name__)

PARAPHRASE_COUNT = 2

CHAT_PROMPT_TEMPLATE = (
    "Paraphrase the following sentence twice. "
    "Maintain as much information as possible intact. "
    "The sentence to paraphrase is : {}"
)

DEFAULT_ROTATABLE = ("nsubj", "obj", "iobj", "obl", "advmod")

_SENTENCE_END = {".", "?", "!"}


def back_translate(turn: Turn, translator, pivot: str = "fr") -> Turn | None:
    """Translate the protected user utterance to ``pivot`` and back."""
    protected = protect(turn.user_delex)
    outbound = translator.translate(protected.text, "en", pivot)
    inbound = translator.translate(outbound, pivot, "en")
    restored = restore(ProtectedText(text=inbound, marker_map=protected.marker_map))
    if restored is None:
        return None
    user = relexicalize(restored, turn.delex_map.user)
    return replace_turn_texts(turn, user=user, user_delex=restored)


def paraphrase(turn: Turn, backend, rng: random.Random) -> Turn | None:
    """Request two paraphrases, pick one, keep it only if slots survive."""
    candidates = backend.paraphrase(turn.user_delex, PARAPHRASE_COUNT)
    if not candidates:
        return None
    selected = rng.choice(candidates)
    if sorted(find_placeholders(selected)) != sorted(find_placeholders(turn.user_delex)):
        return None
    user = relexicalize(selected, turn.delex_map.user)
    return replace_turn_texts(turn, user=user, user_delex=selected)


# ---------------------------------------------------------------------------
# fragment rotation


def split_sentences(tokens: Sequence[str]) -> list[list[str]]:
    """Split a token sequence at terminal punctuation tokens."""
    sentences: list[list[str]] = []
    current: list[str] = []
    for token in tokens:
        current.append(token)
        if token in _SENTENCE_END:
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


def _fragments(parse: DependencyParse, rotatable: Sequence[str]) -> list[tuple[int, int]]:
    """Contiguous spans (0-based, half-open) of rotatable root subtrees."""
    root = parse.root
    spans: list[tuple[int, int]] = []
    for child in parse.children(root):
        if parse.tokens[child - 1].deprel not in rotatable:
            continue
        nodes = parse.subtree(child)
        low, high = min(nodes), max(nodes)
        if high - low + 1 != len(nodes):  # discontinuous subtree: leave in place
            continue
        if low <= root <= high:
            continue
        spans.append((low - 1, high))
    return sorted(spans)


def _rotate_sentence(
    tokens: list[str], parse: DependencyParse, rng: random.Random, rotatable: Sequence[str]
) -> list[str] | None:
    if parse.forms() != tokens:
        raise ParseError(
            f"parse tokens {parse.forms()} do not match sentence tokens {tokens}"
        )
    spans = _fragments(parse, rotatable)
    if len(spans) < 2:
        return None
    order = list(range(len(spans)))
    while True:
        rng.shuffle(order)
        if order != sorted(order):
            break
    fragments = [tokens[lo:hi] for lo, hi in spans]
    rotated: list[str] = []
    cursor = 0
    for slot, (lo, hi) in enumerate(spans):
        rotated.extend(tokens[cursor:lo])
        rotated.extend(fragments[order[slot]])
        cursor = hi
    rotated.extend(tokens[cursor:])
    return rotated


def enumerate_rotations(
    tokens: list[str], parse: DependencyParse, rotatable: Sequence[str] = DEFAULT_ROTATABLE
) -> list[list[str]]:
    """All non-identity fragment orderings of one sentence (test oracle aid)."""
    spans = _fragments(parse, rotatable)
    if len(spans) < 2:
        return []
    fragments = [tokens[lo:hi] for lo, hi in spans]
    outputs = []
    for order in itertools.permutations(range(len(spans))):
        if list(order) == sorted(order):
            continue
        rotated: list[str] = []
        cursor = 0
        for slot, (lo, hi) in enumerate(spans):
            rotated.extend(tokens[cursor:lo])
            rotated.extend(fragments[order[slot]])
            cursor = hi
        rotated.extend(tokens[cursor:])
        outputs.append(rotated)
    return outputs


def fragment_rotate(
    turn: Turn,
    parses: Sequence[DependencyParse],
    rng: random.Random,
    rotatable: Sequence[str] = DEFAULT_ROTATABLE,
) -> Turn | None:
    """Reorder rotatable root fragments, sentence by sentence.

    Utterances split at terminal punctuation; each sentence with at least two
    rotatable fragments is rotated independently.  Rejects when no sentence
    is rotatable.
    """
    tokens = tokenize(turn.user_delex)
    sentences = split_sentences(tokens)
    if len(parses) != len(sentences):
        raise ParseError(
            f"{len(sentences)} sentences but {len(parses)} parses for turn {turn.index}"
        )
    rotated_any = False
    output: list[str] = []
    for sentence, parse in zip(sentences, parses):
        rotated = _rotate_sentence(sentence, parse, rng, rotatable)
        if rotated is None:
            output.extend(sentence)
        else:
            rotated_any = True
            output.extend(rotated)
    if not rotated_any:
        return None
    user_delex = detokenize(output)
    user = relexicalize(user_delex, turn.delex_map.user)
    return replace_turn_texts(turn, user=user, user_delex=user_delex)


# ---------------------------------------------------------------------------
# LLM paraphrasing


def parse_paraphrase_reply(reply: str) -> tuple[str, str] | None:
    """Extract exactly two paraphrases: numbering, then bullets, then lines."""
    numbered = re.split(r"(?:^|\n|\s)[12][.)]\s*", reply)
    parts = [part.strip() for part in numbered if part.strip()]
    if len(parts) == 2:
        return parts[0], parts[1]
    bullets = [
        line.strip()[1:].strip()
        for line in reply.splitlines()
        if line.strip().startswith("-")
    ]
    if len(bullets) == 2 and all(bullets):
        return bullets[0], bullets[1]
    lines = [line.strip() for line in reply.splitlines() if line.strip()]
    if len(lines) == 2:
        return lines[0], lines[1]
    return None


def _claim_value_spans(text: str, entries: Sequence[DelexEntry]) -> list[DelexEntry] | None:
    """Re-anchor delex entries in ``text``; None when a value went missing."""
    claimed: list[tuple[int, int]] = []
    new_entries: list[DelexEntry] = []
    for entry in entries:
        found = None
        for match in re.finditer(re.escape(entry.value), text):
            overlap = any(match.start() < e and s < match.end() for s, e in claimed)
            if not overlap:
                found = (match.start(), match.end())
                break
        if found is None:
            return None
        claimed.append(found)
        new_entries.append(
            DelexEntry(
                placeholder=entry.placeholder,
                value=entry.value,
                start=found[0],
                end=found[1],
            )
        )
    return sorted(new_entries, key=lambda e: e.start)


def llm_paraphrase(turn: Turn, backend, rng: random.Random) -> Turn | None:
    """Prompt a chat backend to paraphrase the lexical utterance twice."""
    reply = backend.chat(CHAT_PROMPT_TEMPLATE.format(turn.user))
    pair = parse_paraphrase_reply(reply)
    if pair is None:
        log.info("chat reply not parseable into two paraphrases: %r", reply)
        return None
    selected = rng.choice(pair)
    entries = _claim_value_spans(selected, turn.delex_map.user.entries)
    if entries is None:
        return None
    new_map = DelexMap(tuple(entries))
    user_delex = delexicalize(selected, new_map)
    return replace_turn_texts(turn, user=selected, user_delex=user_delex, user_map=new_map)
