"""Local HTTP server speaking the OpenAI-compatible subset the client uses.

Responses come from a wrapped ``MockBackend``, so HTTP runs and in-process
mock runs agree exactly. Used for integration tests and throughput checks::

    with MockOpenAIServer(MockBackend(responses={"hi": "안녕"}), latency_ms=20) as srv:
        backend = OpenAICompatibleBackend(srv.base_url)
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .base import GenerationParams
from .mock import MockBackend


def _chat_payload(backend: MockBackend, body: dict[str, Any], model: str) -> dict[str, Any]:
    messages = body.get("messages") or []
    prompt = messages[-1]["content"] if messages else ""
    params = GenerationParams(
        temperature=float(body.get("temperature", 1.0)),
        top_p=float(body.get("top_p", 1.0)),
        max_tokens=int(body.get("max_tokens", 16)),
        n=int(body.get("n", 1)),
        seed=body.get("seed"),
    )
    choices = []
    for i, cand in enumerate(backend.chat(prompt, params)):
        logprobs = None
        if body.get("logprobs") and cand.token_logprobs is not None:
            logprobs = {"content": [{"token": t, "logprob": lp, "top_logprobs": []} for t, lp in cand.token_logprobs]}
        choices.append(
            {
                "index": i,
                "message": {"role": "assistant", "content": cand.text},
                "logprobs": logprobs,
                "finish_reason": "stop",
            }
        )
    return {"id": "chatcmpl-mock", "object": "chat.completion", "model": model, "choices": choices}


def _completion_payload(backend: MockBackend, body: dict[str, Any], model: str) -> dict[str, Any]:
    text = body.get("prompt", "")
    if isinstance(text, list):
        text = text[0] if text else ""
    if body.get("echo") and int(body.get("max_tokens", 16)) == 0:
        split = backend.split_scored_text(text)
        tokens, values, offsets = [text], [None], [0]
        if split is not None:
            prompt, continuation = split
            _, per_token = backend.score_continuation(prompt, continuation)
            tokens, values, offsets = [prompt], [None], [0]
            pos = len(prompt)
            for tok, lp in per_token:
                tokens.append(tok)
                values.append(lp)
                offsets.append(pos)
                pos += len(tok)
        logprobs = {
            "tokens": tokens,
            "token_logprobs": values,
            "text_offset": offsets,
            "top_logprobs": [None] + [{t: v} for t, v in zip(tokens[1:], values[1:])],
        }
        choice = {"index": 0, "text": text, "logprobs": logprobs, "finish_reason": "length"}
    else:
        k = int(body.get("logprobs") or 1)
        top = backend.next_token_topk(text, k)
        best_tok, best_lp = top[0]
        logprobs = {
            "tokens": [best_tok],
            "token_logprobs": [best_lp],
            "text_offset": [len(text)],
            "top_logprobs": [{t: lp for t, lp in top}],
        }
        choice = {"index": 0, "text": best_tok, "logprobs": logprobs, "finish_reason": "length"}
    return {"id": "cmpl-mock", "object": "text_completion", "model": model, "choices": [choice]}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    # headers and body go out as two writes; without this, Nagle plus delayed
    # ACK adds ~40 ms to every keep-alive request
    disable_nagle_algorithm = True
    server: _Server

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send(self, status: int, payload: dict[str, Any]) -> None:
        data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _delay(self) -> None:
        if self.server.latency_ms:
            time.sleep(self.server.latency_ms / 1000.0)

    def do_GET(self):
        self._delay()
        if self.path.rstrip("/") == "/v1/models":
            self._send(200, {"object": "list", "data": [{"id": self.server.model, "object": "model"}]})
        else:
            self._send(404, {"error": {"message": f"no route {self.path}"}})

    def do_POST(self):
        length = int(self.headers.get("Content-Length") or 0)
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8") or "{}")
        except ValueError:
            self._send(400, {"error": {"message": "invalid JSON body"}})
            return
        self._delay()
        self.server.requests.append((self.path, body))
        route = self.path.rstrip("/")
        try:
            if route == "/v1/chat/completions":
                self._send(200, _chat_payload(self.server.backend, body, self.server.model))
            elif route == "/v1/completions":
                self._send(200, _completion_payload(self.server.backend, body, self.server.model))
            else:
                self._send(404, {"error": {"message": f"no route {self.path}"}})
        except (ValueError, KeyError, TypeError) as exc:
            self._send(400, {"error": {"message": str(exc)}})


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, backend: MockBackend, latency_ms: float, model: str):
        super().__init__(addr, _Handler)
        self.backend = backend
        self.latency_ms = latency_ms
        self.model = model
        self.requests: list[tuple[str, dict[str, Any]]] = []


class MockOpenAIServer:
    def __init__(
        self,
        backend: MockBackend,
        latency_ms: float = 0.0,
        host: str = "127.0.0.1",
        port: int = 0,
        model: str = "mock-model",
    ):
        self._server = _Server((host, port), backend, latency_ms, model)
        self._thread: threading.Thread | None = None

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def requests(self) -> list[tuple[str, dict[str, Any]]]:
        return self._server.requests

    def start(self) -> MockOpenAIServer:
        self._thread = threading.Thread(target=self._server.serve_forever, name="mock-openai", daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join()

    def __enter__(self) -> MockOpenAIServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def main(argv: list[str] | None = None) -> int:
    """Serve a fixture-scripted mock: ``python -m kheval.backends.server --dataset fixture_mcq``."""
    import argparse

    from ..datasets import FIXTURES, load_fixture, load_jsonl

    parser = argparse.ArgumentParser(description=main.__doc__)
    parser.add_argument("--dataset", default="fixture_mcq", help=f"one of {FIXTURES} or a JSONL path")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--latency_ms", type=float, default=0.0)
    args = parser.parse_args(argv)
    samples = load_fixture(args.dataset) if args.dataset in FIXTURES else load_jsonl(args.dataset)
    server = MockOpenAIServer(MockBackend.from_samples(samples), args.latency_ms, args.host, args.port)
    print(f"serving {len(samples)} scripted samples at {server.base_url}", flush=True)
    try:
        server._server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server._server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
