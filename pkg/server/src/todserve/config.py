"""Server configuration.

A config maps each enabled capability to a model identifier:

* ``builtin:<name>`` — deterministic in-process models, no dependencies;
* ``hf:<model>`` — Hugging Face pipeline backing (needs the ``hf`` extra);
* ``remote:<url>`` — pass-through to a remote API; the credential comes
  from the ``TODSERVE_<CAPABILITY>_API_KEY`` environment variable.

Credentials are only required for capabilities that are actually enabled
with a remote model.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

CAPABILITIES = ("fill_mask", "paraphrase", "translate", "chat")


class ConfigError(ValueError):
    pass


def credential_variable(capability: str) -> str:
    return f"TODSERVE_{capability.upper()}_API_KEY"


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8777
    models: dict[str, str] = field(default_factory=dict)
    max_batch_size: int = 8
    chat_render_template: bool = False

    def __post_init__(self) -> None:
        if not self.models:
            raise ConfigError("at least one capability must be enabled")
        unknown = set(self.models) - set(CAPABILITIES)
        if unknown:
            raise ConfigError(f"unknown capabilities: {sorted(unknown)}")
        if self.max_batch_size < 1:
            raise ConfigError("max_batch_size must be >= 1")
        for capability, model_id in self.models.items():
            if model_id.startswith("remote:") and not os.environ.get(
                credential_variable(capability)
            ):
                raise ConfigError(
                    f"capability {capability!r} uses a remote model but "
                    f"{credential_variable(capability)} is not set"
                )

    @property
    def capabilities(self) -> list[str]:
        return [c for c in CAPABILITIES if c in self.models]

    @classmethod
    def load(cls, path: str | Path) -> "ServerConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            host=raw.get("host", "127.0.0.1"),
            port=int(raw.get("port", 8777)),
            models={str(k): str(v) for k, v in raw.get("models", {}).items()},
            max_batch_size=int(raw.get("max_batch_size", 8)),
            chat_render_template=bool(raw.get("chat_render_template", False)),
        )
