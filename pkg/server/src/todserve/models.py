"""Model adapters behind the wire protocol.

Builtin adapters are deterministic and dependency-free so the server can
run hermetically; ``hf:`` adapters back a capability with a Hugging Face
pipeline when the optional dependencies and weights are available; the
``remote:`` chat adapter passes prompts through to an external API.

A model that cannot be constructed raises ModelLoadError with a diagnostic,
which the server turns into a refusal to start.
"""

from __future__ import annotations

import json
import os
import urllib.request

from .config import ServerConfig, credential_variable


class ModelLoadError(RuntimeError):
    """The configured model cannot be constructed."""


class ModelError(RuntimeError):
    """A per-request model failure (reported as HTTP 5xx)."""


CHAT_PROMPT_TEMPLATE = (
    "Paraphrase the following sentence twice. "
    "Maintain as much information as possible intact. "
    "The sentence to paraphrase is : {}"
)

_SENTENCE_MARKER = "The sentence to paraphrase is : "

# ranked unigram suggestions for the builtin fill-mask model
_FREQUENT_WORDS = (
    ("want", 0.30),
    ("need", 0.24),
    ("looking", 0.18),
    ("book", 0.12),
    ("find", 0.09),
    ("get", 0.07),
)

_PARAPHRASE_PREFIXES = ("", "well , ", "so , ")


class FrequencyFillMask:
    """Suggests common verbs for any masked position, scores descending."""

    def fill(self, text: str, mask_token: str, top_k: int) -> list[tuple[str, float]]:
        return list(_FREQUENT_WORDS[:top_k])


class PrefixParaphrase:
    """Deterministic paraphrases that prepend discourse markers."""

    def paraphrase(self, text: str, n: int) -> list[str]:
        return [prefix + text for prefix in _PARAPHRASE_PREFIXES[:n]]


class IdentityTranslate:
    def translate(self, text: str, src: str, tgt: str) -> str:
        return text


class ReverseTranslate:
    """Reverses word order on every call; a round trip is the identity."""

    def translate(self, text: str, src: str, tgt: str) -> str:
        return " ".join(reversed(text.split()))


class EchoChat:
    """Answers the prompt's sentence twice, numbered."""

    def chat(self, prompt: str) -> str:
        sentence = prompt.split(_SENTENCE_MARKER, 1)[-1].strip() or prompt.strip()
        return f"1. {sentence}\n2. {sentence}"


class RemoteChat:
    """Pass-through to a remote chat API expecting {"prompt"} -> {"text"}."""

    def __init__(self, url: str, api_key: str, timeout_s: float = 30.0) -> None:
        self._url = url
        self._api_key = api_key
        self._timeout_s = timeout_s

    def chat(self, prompt: str) -> str:
        request = urllib.request.Request(
            self._url,
            data=json.dumps({"prompt": prompt}).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self._api_key}",
            },
        )
        try:
            with urllib.request.urlopen(request, timeout=self._timeout_s) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except Exception as exc:
            raise ModelError(f"remote chat call failed: {exc}") from exc
        text = payload.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ModelError("remote chat returned no text")
        return text


_BUILTINS = {
    "fill_mask": {"frequency": FrequencyFillMask},
    "paraphrase": {"prefix": PrefixParaphrase},
    "translate": {"identity": IdentityTranslate, "reverse": ReverseTranslate},
    "chat": {"echo": EchoChat},
}

_HF_TASKS = {
    "fill_mask": "fill-mask",
    "paraphrase": "text2text-generation",
    "translate": "translation",
}


class HfFillMask:
    def __init__(self, pipeline) -> None:
        self._pipeline = pipeline

    def fill(self, text: str, mask_token: str, top_k: int) -> list[tuple[str, float]]:
        model_mask = getattr(self._pipeline.tokenizer, "mask_token", mask_token)
        outputs = self._pipeline(text.replace(mask_token, model_mask), top_k=top_k)
        return [(o["token_str"].strip(), float(o["score"])) for o in outputs]


class HfParaphrase:
    def __init__(self, pipeline) -> None:
        self._pipeline = pipeline

    def paraphrase(self, text: str, n: int) -> list[str]:
        outputs = self._pipeline(text, num_return_sequences=n, num_beams=max(n, 2))
        return [o["generated_text"] for o in outputs][:n]


class HfTranslate:
    def __init__(self, pipeline) -> None:
        self._pipeline = pipeline

    def translate(self, text: str, src: str, tgt: str) -> str:
        outputs = self._pipeline(text, src_lang=src, tgt_lang=tgt)
        return outputs[0]["translation_text"]


def _load_hf(capability: str, model_name: str):
    if capability not in _HF_TASKS:
        raise ModelLoadError(f"hf backing is not available for capability {capability!r}")
    try:
        from transformers import pipeline
    except ImportError as exc:
        raise ModelLoadError(
            f"capability {capability!r} wants hf:{model_name} but transformers "
            f"is not installed (pip install toddag-server[hf])"
        ) from exc
    try:
        loaded = pipeline(_HF_TASKS[capability], model=model_name)
    except Exception as exc:
        raise ModelLoadError(
            f"could not load hf model {model_name!r} for {capability!r}: {exc}"
        ) from exc
    wrapper = {"fill_mask": HfFillMask, "paraphrase": HfParaphrase, "translate": HfTranslate}
    return wrapper[capability](loaded)


def load_model(capability: str, model_id: str, config: ServerConfig):
    scheme, _, name = model_id.partition(":")
    if scheme == "builtin":
        registry = _BUILTINS.get(capability, {})
        if name not in registry:
            raise ModelLoadError(
                f"no builtin model {name!r} for {capability!r}; "
                f"available: {sorted(registry)}"
            )
        return registry[name]()
    if scheme == "hf":
        return _load_hf(capability, name)
    if scheme == "remote":
        if capability != "chat":
            raise ModelLoadError("remote backing is implemented for the chat capability only")
        api_key = os.environ.get(credential_variable(capability), "")
        return RemoteChat(name, api_key)
    raise ModelLoadError(f"unknown model scheme in {model_id!r}")


def load_all(config: ServerConfig) -> dict[str, object]:
    return {
        capability: load_model(capability, model_id, config)
        for capability, model_id in config.models.items()
    }
