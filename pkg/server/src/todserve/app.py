"""HTTP server exposing the model capabilities under /v1.

The server is stateless per request: handlers parse the payload, call the
configured model adapter, and render the protocol response.  Client errors
(missing fields, malformed mask usage) are 400s; model failures surface as
500s with a machine-readable reason.
"""

from __future__ import annotations

import argparse
import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import ServerConfig
from .models import CHAT_PROMPT_TEMPLATE, ModelError, ModelLoadError, load_all

log = logging.getLogger(__name__)


class BadRequest(ValueError):
    pass


def _require(payload: dict, key: str, kind) -> object:
    if key not in payload:
        raise BadRequest(f"missing field {key!r}")
    value = payload[key]
    if not isinstance(value, kind):
        raise BadRequest(f"field {key!r} must be {kind.__name__}")
    return value


class ProtocolHandler(BaseHTTPRequestHandler):
    server_version = "toddag-server/0.1"

    def log_message(self, format, *args):
        log.debug("%s " + format, self.address_string(), *args)

    def _send_json(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path != "/v1/health":
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        self._send_json(200, {"status": "ok", "capabilities": self.server.config.capabilities})

    def do_POST(self):
        capability = self.path.removeprefix("/v1/")
        if self.path != f"/v1/{capability}" or capability not in self.server.handlers:
            self._send_json(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", 0))
            payload = json.loads(self.rfile.read(length)) if length else {}
            if not isinstance(payload, dict):
                raise BadRequest("payload must be a JSON object")
            response = self.server.handlers[capability](payload)
        except BadRequest as exc:
            self._send_json(400, {"error": str(exc)})
        except ModelError as exc:
            self._send_json(500, {"error": str(exc)})
        except Exception as exc:  # defensive: adapters may fail arbitrarily
            log.exception("unhandled error serving %s", capability)
            self._send_json(500, {"error": f"{type(exc).__name__}: {exc}"})
        else:
            self._send_json(200, response)


class ProtocolServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, config: ServerConfig, models: dict[str, object]) -> None:
        super().__init__((config.host, config.port), ProtocolHandler)
        self.config = config
        self.models = models
        self.handlers = {
            "fill_mask": self._fill_mask,
            "paraphrase": self._paraphrase,
            "translate": self._translate,
            "chat": self._chat,
        }
        self.handlers = {
            capability: handler
            for capability, handler in self.handlers.items()
            if capability in models
        }

    # -- capability handlers ------------------------------------------------

    def _fill_mask(self, payload: dict) -> dict:
        text = _require(payload, "text", str)
        mask_token = _require(payload, "mask_token", str)
        top_k = _require(payload, "top_k", int)
        if top_k < 1:
            raise BadRequest("top_k must be >= 1")
        if text.count(mask_token) != 1:
            raise BadRequest("text must contain the mask token exactly once")
        candidates = self.models["fill_mask"].fill(text, mask_token, top_k)
        candidates = sorted(candidates, key=lambda c: -c[1])[:top_k]
        return {
            "candidates": [
                {"token": token, "score": min(max(float(score), 0.0), 1.0)}
                for token, score in candidates
            ]
        }

    def _paraphrase(self, payload: dict) -> dict:
        text = _require(payload, "text", str)
        n = _require(payload, "n", int)
        if n < 1:
            raise BadRequest("n must be >= 1")
        return {"paraphrases": list(self.models["paraphrase"].paraphrase(text, n))[:n]}

    def _translate(self, payload: dict) -> dict:
        text = _require(payload, "text", str)
        src = _require(payload, "src", str)
        tgt = _require(payload, "tgt", str)
        return {"text": self.models["translate"].translate(text, src, tgt)}

    def _chat(self, payload: dict) -> dict:
        prompt = _require(payload, "prompt", str)
        if self.config.chat_render_template:
            prompt = CHAT_PROMPT_TEMPLATE.format(prompt)
        return {"text": self.models["chat"].chat(prompt)}


class RunningServer:
    def __init__(self, server: ProtocolServer, thread: threading.Thread) -> None:
        self._server = server
        self._thread = thread

    @property
    def address(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def shutdown(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)


def serve(config: ServerConfig) -> RunningServer:
    """Load all configured models and start serving; raises on load failure."""
    try:
        models = load_all(config)
    except ModelLoadError as exc:
        raise SystemExit(f"refusing to start: {exc}") from exc
    server = ProtocolServer(config, models)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    log.info("serving %s on %s:%s", config.capabilities, *server.server_address)
    return RunningServer(server, thread)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="toddag-server")
    parser.add_argument("--config", required=True, help="server config JSON")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO)
    running = serve(ServerConfig.load(args.config))
    print(f"listening on {running.address}")
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        running.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
