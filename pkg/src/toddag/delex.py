"""Delexicalization, relexicalization and placeholder protection.

An utterance is delexicalized by replacing recorded character spans with
placeholder tokens; relexicalization restores the surface values by matching
placeholder occurrences to map entries in order.  Before handing text to a
transform that may mangle unknown tokens (translation, paraphrasing),
placeholders are protected by replacing each occurrence with a numeric
marker ``#k``; restoring rejects the text when any marker was lost or
duplicated, which callers treat as "discard this augmentation".
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .text import PLACEHOLDER_RE

MARKER_RE = re.compile(r"#\d+")


class DelexError(ValueError):
    """A delexicalization map does not fit the text it is applied to."""


@dataclass(frozen=True)
class DelexEntry:
    """One delexicalized span: placeholder token, surface value, char span."""

    placeholder: str
    value: str
    start: int
    end: int


@dataclass(frozen=True)
class DelexMap:
    entries: tuple[DelexEntry, ...] = ()

    def placeholders(self) -> list[str]:
        return [e.placeholder for e in self.entries]

    def values(self) -> list[str]:
        return [e.value for e in self.entries]


@dataclass(frozen=True)
class ProtectedText:
    """Delexicalized text with placeholders swapped for ``#k`` markers."""

    text: str
    marker_map: dict[str, str]


def validate_map(delex_map: DelexMap) -> None:
    prev_end = -1
    for entry in delex_map.entries:
        if not PLACEHOLDER_RE.fullmatch(entry.placeholder):
            raise DelexError(f"malformed placeholder token: {entry.placeholder!r}")
        if entry.start < 0 or entry.end <= entry.start:
            raise DelexError(f"bad span {entry.start}..{entry.end} for {entry.placeholder}")
        if entry.start < prev_end:
            raise DelexError(
                f"overlapping or unsorted span {entry.start}..{entry.end} for {entry.placeholder}"
            )
        prev_end = entry.end


def delexicalize(utterance: str, delex_map: DelexMap) -> str:
    """Replace each mapped span of ``utterance`` with its placeholder."""
    validate_map(delex_map)
    pieces: list[str] = []
    cursor = 0
    for entry in delex_map.entries:
        if entry.end > len(utterance):
            raise DelexError(f"span {entry.start}..{entry.end} outside utterance")
        surface = utterance[entry.start : entry.end]
        if surface != entry.value:
            raise DelexError(
                f"span {entry.start}..{entry.end} reads {surface!r}, map records {entry.value!r}"
            )
        pieces.append(utterance[cursor : entry.start])
        pieces.append(entry.placeholder)
        cursor = entry.end
    pieces.append(utterance[cursor:])
    return "".join(pieces)


def relexicalize(delex_text: str, delex_map: DelexMap) -> str:
    """Replace placeholder occurrences with surface values.

    The i-th occurrence of a placeholder token consumes the i-th map entry
    carrying that token, so repeated slots keep their values even when a
    transform reordered the utterance.
    """
    queues: dict[str, list[str]] = {}
    for entry in delex_map.entries:
        queues.setdefault(entry.placeholder, []).append(entry.value)

    def _substitute(match: re.Match[str]) -> str:
        token = match.group()
        queue = queues.get(token)
        if not queue:
            raise DelexError(f"placeholder {token} has no remaining map entry")
        return queue.pop(0)

    return PLACEHOLDER_RE.sub(_substitute, delex_text)


def protect(delex_text: str) -> ProtectedText:
    """Number placeholder occurrences left to right as ``#1``, ``#2``, ..."""
    marker_map: dict[str, str] = {}
    counter = 0

    def _substitute(match: re.Match[str]) -> str:
        nonlocal counter
        counter += 1
        marker = f"#{counter}"
        marker_map[marker] = match.group()
        return marker

    text = PLACEHOLDER_RE.sub(_substitute, delex_text)
    return ProtectedText(text=text, marker_map=marker_map)


def restore(protected: ProtectedText) -> str | None:
    """Swap markers back to placeholders; None rejects a damaged text."""
    found = MARKER_RE.findall(protected.text)
    for marker in protected.marker_map:
        if found.count(marker) != 1:
            return None
    return MARKER_RE.sub(
        lambda m: protected.marker_map.get(m.group(), m.group()), protected.text
    )
