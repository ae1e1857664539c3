"""JSON-over-HTTP clients for the model backend wire protocol.

All model-backed capabilities (fill-mask, paraphrase, translate, chat,
predict) sit behind versioned ``/v1`` endpoints with fixed field names.
Clients validate every response against the capability's schema before
returning, enforce a per-endpoint in-flight limit, and retry transport
failures with backoff.  Retries reuse the same client-generated request id
so a server can deduplicate side effects.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from typing import Sequence

import requests


class BackendError(Exception):
    """Base class for backend failures."""


class TransportError(BackendError):
    """The endpoint could not be reached within the retry budget."""


class SchemaError(BackendError):
    """The endpoint answered with a payload that violates the protocol."""


class RequestError(BackendError):
    """The request violates a client-side precondition; never sent."""


@dataclass(frozen=True)
class BackendEndpoint:
    base_url: str
    timeout_ms: int = 10_000
    retries: int = 2
    max_in_flight: int = 4
    bearer_token: str | None = None

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise ValueError("retry budget must be >= 0")
        if self.max_in_flight < 1:
            raise ValueError("max in-flight requests must be >= 1")


# ---------------------------------------------------------------------------
# response schema validators, shared by clients, mocks and conformance tests


def validate_fill_mask_response(payload: object, top_k: int) -> list[tuple[str, float]]:
    if not isinstance(payload, dict) or not isinstance(payload.get("candidates"), list):
        raise SchemaError(f"fill_mask response must carry a candidates list: {payload!r}")
    candidates: list[tuple[str, float]] = []
    previous = None
    for item in payload["candidates"]:
        if not isinstance(item, dict) or "token" not in item or "score" not in item:
            raise SchemaError(f"bad fill_mask candidate: {item!r}")
        token, score = item["token"], item["score"]
        if not isinstance(token, str) or not isinstance(score, (int, float)):
            raise SchemaError(f"bad fill_mask candidate types: {item!r}")
        if not 0.0 <= float(score) <= 1.0:
            raise SchemaError(f"fill_mask score out of [0, 1]: {score!r}")
        if previous is not None and float(score) > previous:
            raise SchemaError("fill_mask candidates must be sorted by score descending")
        previous = float(score)
        candidates.append((token, float(score)))
    if len(candidates) > top_k:
        raise SchemaError(f"fill_mask returned {len(candidates)} > top_k={top_k} candidates")
    return candidates


def validate_paraphrase_response(payload: object, n: int) -> list[str]:
    if not isinstance(payload, dict) or not isinstance(payload.get("paraphrases"), list):
        raise SchemaError(f"paraphrase response must carry a paraphrases list: {payload!r}")
    texts = payload["paraphrases"]
    if not all(isinstance(t, str) for t in texts):
        raise SchemaError("paraphrases must be strings")
    if len(texts) > n:
        raise SchemaError(f"paraphrase returned {len(texts)} > n={n} texts")
    return list(texts)


def validate_translate_response(payload: object) -> str:
    if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
        raise SchemaError(f"translate response must carry a text string: {payload!r}")
    return payload["text"]


def validate_chat_response(payload: object) -> str:
    if not isinstance(payload, dict) or not isinstance(payload.get("text"), str):
        raise SchemaError(f"chat response must carry a text string: {payload!r}")
    if not payload["text"].strip():
        raise SchemaError("chat reply is empty")
    return payload["text"]


def validate_predict_response(payload: object) -> tuple[dict, list]:
    if (
        not isinstance(payload, dict)
        or not isinstance(payload.get("state"), dict)
        or not isinstance(payload.get("acts"), list)
    ):
        raise SchemaError(f"predict response must carry state and acts: {payload!r}")
    return payload["state"], payload["acts"]


def validate_health_response(payload: object) -> dict:
    if (
        not isinstance(payload, dict)
        or payload.get("status") != "ok"
        or not isinstance(payload.get("capabilities"), list)
    ):
        raise SchemaError(f"bad health response: {payload!r}")
    return payload


# ---------------------------------------------------------------------------
# transport


class JsonHttpClient:
    """POST/GET JSON with retries, backoff and an in-flight bound."""

    def __init__(self, endpoint: BackendEndpoint, backoff_s: float = 0.2) -> None:
        self.endpoint = endpoint
        self._backoff_s = backoff_s
        self._slots = threading.BoundedSemaphore(endpoint.max_in_flight)
        self._session = requests.Session()

    def _headers(self, request_id: str) -> dict[str, str]:
        headers = {"X-Request-Id": request_id}
        if self.endpoint.bearer_token:
            headers["Authorization"] = f"Bearer {self.endpoint.bearer_token}"
        return headers

    def post(self, path: str, payload: dict) -> object:
        url = self.endpoint.base_url.rstrip("/") + path
        request_id = uuid.uuid4().hex
        timeout = self.endpoint.timeout_ms / 1000.0
        last_error: Exception | None = None
        for attempt in range(self.endpoint.retries + 1):
            if attempt:
                time.sleep(self._backoff_s * attempt)
            try:
                with self._slots:
                    response = self._session.post(
                        url, json=payload, headers=self._headers(request_id), timeout=timeout
                    )
            except requests.RequestException as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = BackendError(f"{url} answered {response.status_code}")
                continue
            if response.status_code != 200:
                raise BackendError(f"{url} answered {response.status_code}: {response.text!r}")
            try:
                return response.json()
            except ValueError as exc:
                raise SchemaError(f"{url} answered non-JSON payload") from exc
        raise TransportError(f"{url} unreachable after {self.endpoint.retries + 1} attempts") from last_error

    def get(self, path: str) -> object:
        url = self.endpoint.base_url.rstrip("/") + path
        timeout = self.endpoint.timeout_ms / 1000.0
        try:
            response = self._session.get(url, timeout=timeout)
        except requests.RequestException as exc:
            raise TransportError(f"{url} unreachable") from exc
        if response.status_code != 200:
            raise BackendError(f"{url} answered {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise SchemaError(f"{url} answered non-JSON payload") from exc


def health(endpoint: BackendEndpoint) -> dict:
    return validate_health_response(JsonHttpClient(endpoint).get("/v1/health"))


# ---------------------------------------------------------------------------
# capability clients


class FillMaskClient:
    def __init__(self, endpoint: BackendEndpoint, mask_token: str = "<mask>") -> None:
        self._http = JsonHttpClient(endpoint)
        self.mask_token = mask_token

    def fill_mask(self, text: str, top_k: int) -> list[tuple[str, float]]:
        if text.count(self.mask_token) != 1:
            raise RequestError(
                f"text must contain the mask token {self.mask_token!r} exactly once"
            )
        payload = self._http.post(
            "/v1/fill_mask", {"text": text, "mask_token": self.mask_token, "top_k": top_k}
        )
        return validate_fill_mask_response(payload, top_k)


class ParaphraseClient:
    def __init__(self, endpoint: BackendEndpoint) -> None:
        self._http = JsonHttpClient(endpoint)

    def paraphrase(self, text: str, n: int) -> list[str]:
        if n < 1:
            raise RequestError("n must be >= 1")
        payload = self._http.post("/v1/paraphrase", {"text": text, "n": n})
        return validate_paraphrase_response(payload, n)


class TranslateClient:
    def __init__(self, endpoint: BackendEndpoint) -> None:
        self._http = JsonHttpClient(endpoint)

    def translate(self, text: str, src: str, tgt: str) -> str:
        payload = self._http.post("/v1/translate", {"text": text, "src": src, "tgt": tgt})
        return validate_translate_response(payload)


class ChatClient:
    def __init__(self, endpoint: BackendEndpoint) -> None:
        self._http = JsonHttpClient(endpoint)

    def chat(self, prompt: str) -> str:
        payload = self._http.post("/v1/chat", {"prompt": prompt})
        return validate_chat_response(payload)


class PredictClient:
    def __init__(self, endpoint: BackendEndpoint) -> None:
        self._http = JsonHttpClient(endpoint)

    def predict(self, context: Sequence[str], utterance: str) -> tuple[dict, list]:
        payload = self._http.post(
            "/v1/predict", {"context": list(context), "utterance": utterance}
        )
        return validate_predict_response(payload)
