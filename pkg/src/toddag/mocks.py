"""Deterministic in-process backends for tests and dry runs.

Mocks satisfy the same call interfaces as the HTTP clients and run their
payloads through the same schema validators, so anything that passes against
a mock holds against a conforming live service.  A scripted mock maps a
request fingerprint to a canned response; unscripted requests fall back to
the configured default behavior (echo, empty, or error).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Literal

from .backends import (
    TransportError,
    RequestError,
    validate_chat_response,
    validate_fill_mask_response,
    validate_paraphrase_response,
    validate_translate_response,
)

DefaultBehavior = Literal["echo", "empty", "error"]


def fingerprint(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


@dataclass
class MockScript:
    responses: dict[str, dict] = field(default_factory=dict)
    default: DefaultBehavior = "echo"

    def lookup(self, payload: dict) -> dict | None:
        return self.responses.get(fingerprint(payload))


class _ScriptedMixin:
    def __init__(self, script: MockScript | None = None) -> None:
        self.script = script or MockScript()
        self.requests_seen: list[dict] = []

    def _respond(self, payload: dict, echo_response: dict, empty_response: dict) -> dict:
        self.requests_seen.append(payload)
        scripted = self.script.lookup(payload)
        if scripted is not None:
            return scripted
        if self.script.default == "echo":
            return echo_response
        if self.script.default == "empty":
            return empty_response
        raise TransportError("mock backend scripted to fail")


class MockFillMask(_ScriptedMixin):
    """Echo default returns no candidates: a mask has no text to echo."""

    def __init__(self, script: MockScript | None = None, mask_token: str = "<mask>") -> None:
        super().__init__(script)
        self.mask_token = mask_token

    def fill_mask(self, text: str, top_k: int) -> list[tuple[str, float]]:
        if text.count(self.mask_token) != 1:
            raise RequestError(
                f"text must contain the mask token {self.mask_token!r} exactly once"
            )
        payload = {"text": text, "mask_token": self.mask_token, "top_k": top_k}
        response = self._respond(payload, {"candidates": []}, {"candidates": []})
        return validate_fill_mask_response(response, top_k)


class CannedFillMask:
    """Returns one fixed candidate list for every masked position."""

    def __init__(self, candidates: list[tuple[str, float]], mask_token: str = "<mask>") -> None:
        self.mask_token = mask_token
        self._candidates = list(candidates)

    def fill_mask(self, text: str, top_k: int) -> list[tuple[str, float]]:
        if text.count(self.mask_token) != 1:
            raise RequestError(
                f"text must contain the mask token {self.mask_token!r} exactly once"
            )
        response = {
            "candidates": [{"token": t, "score": s} for t, s in self._candidates[:top_k]]
        }
        return validate_fill_mask_response(response, top_k)


class MockParaphrase(_ScriptedMixin):
    def paraphrase(self, text: str, n: int) -> list[str]:
        if n < 1:
            raise RequestError("n must be >= 1")
        payload = {"text": text, "n": n}
        response = self._respond(
            payload, {"paraphrases": [text] * n}, {"paraphrases": []}
        )
        return validate_paraphrase_response(response, n)


class MockTranslate(_ScriptedMixin):
    """Identity translation by default."""

    def translate(self, text: str, src: str, tgt: str) -> str:
        payload = {"text": text, "src": src, "tgt": tgt}
        response = self._respond(payload, {"text": text}, {"text": ""})
        return validate_translate_response(response)


class WordReverseTranslate:
    """Mock whose round trip reverses word order; markers survive as tokens.

    The outbound leg passes through so that translate-there-and-back nets a
    single reversal.
    """

    def __init__(self, reverse_on_tgt: str = "en") -> None:
        self._reverse_on_tgt = reverse_on_tgt

    def translate(self, text: str, src: str, tgt: str) -> str:
        if tgt != self._reverse_on_tgt:
            return text
        return " ".join(reversed(text.split()))


class MarkerDropTranslate:
    """Round-trip mock that loses protection markers (forces rejection)."""

    def __init__(self, pattern: str = r"#\d+\s?") -> None:
        self._pattern = re.compile(pattern)

    def translate(self, text: str, src: str, tgt: str) -> str:
        return self._pattern.sub("", text, count=1).strip()


class FlakyTranslate:
    """Fails the first ``failures`` calls, then behaves as identity."""

    def __init__(self, failures: int) -> None:
        self.remaining_failures = failures
        self.calls = 0

    def translate(self, text: str, src: str, tgt: str) -> str:
        self.calls += 1
        if self.remaining_failures > 0:
            self.remaining_failures -= 1
            raise TransportError("mock transport failure")
        return text


_SENTENCE_MARKER = "The sentence to paraphrase is : "


class MockChat(_ScriptedMixin):
    """Echo default answers the prompt's sentence twice, numbered."""

    def chat(self, prompt: str) -> str:
        payload = {"prompt": prompt}
        if self.script.lookup(payload) is None and self.script.default == "echo":
            sentence = prompt.split(_SENTENCE_MARKER, 1)[-1].strip()
            echo = {"text": f"1. {sentence}\n2. {sentence}"}
        else:
            echo = {"text": ""}
        response = self._respond(payload, echo, {"text": ""})
        return validate_chat_response(response)


class PredictorBackend:
    """Adapts an in-process predictor to the wire client interface."""

    def __init__(self, predictor) -> None:
        self._predictor = predictor

    def predict(self, context, utterance):
        state, acts = self._predictor.predict(context, utterance)
        return (
            {d: dict(p) for d, p in state.slots.items()},
            [{"act": a.act, "domain": a.domain, "slot": a.slot} for a in acts],
        )
