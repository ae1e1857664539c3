"""Tokenization and placeholder conventions shared across the toolkit.

Tokens are produced by splitting on whitespace after detaching terminal
punctuation (``.``, ``,``, ``?``, ``!``) into tokens of their own.  Casing is
preserved.  Slot placeholders are single tokens of the form ``[value_<slot>]``.
"""

from __future__ import annotations

import re

PLACEHOLDER_RE = re.compile(r"\[value_[a-z0-9_]+\]")

_TERMINAL_PUNCT = ".,?!"


def placeholder_for(slot: str) -> str:
    return f"[value_{slot}]"


def slot_of_placeholder(token: str) -> str | None:
    """Slot name encoded in a placeholder token, or None for ordinary words."""
    if PLACEHOLDER_RE.fullmatch(token):
        return token[len("[value_") : -1]
    return None


def is_placeholder(token: str) -> bool:
    return PLACEHOLDER_RE.fullmatch(token) is not None


def find_placeholders(text: str) -> list[str]:
    """All placeholder tokens in ``text``, in order of occurrence."""
    return PLACEHOLDER_RE.findall(text)


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    for chunk in text.split():
        tail: list[str] = []
        while len(chunk) > 1 and chunk[-1] in _TERMINAL_PUNCT:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def detokenize(tokens: list[str]) -> str:
    return " ".join(tokens)
