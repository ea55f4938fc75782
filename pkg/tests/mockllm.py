"""Deterministic mock LLM backends for pipeline, server, and CLI tests.

GoldOracle answers every prompt shape the pipeline can send by reading the
gold annotations back: segmentation prompts get the gold <SEP> rendering,
classification prompts get the gold label for the quoted argument. Wrappers
inject scripted failures on top.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Iterable

import httpx

from argmine.corpus import AnnotatedEssay
from argmine.prompts import SEP, TaskKind, render_shot_example, split_segments

ReplyFn = Callable[[str], str]


class GoldOracle:
    """Maps any pipeline prompt back to its gold answer."""

    def __init__(self, essays: Iterable[AnnotatedEssay], finetuned_task: TaskKind | None = None):
        self.by_text = {ae.essay.normalized_text: ae for ae in essays}
        # The bare fine-tuned input carries no task marker; a real fine-tuned
        # checkpoint knows its task, so the mock must be told.
        self.finetuned_task = finetuned_task

    def reply(self, body: str) -> str:
        if "#ESSAY:" in body:
            if "#QUERY:" in body:
                return self._few_shot_classification(body)
            return self._few_shot_segmentation(body)
        if SEP in body:
            return self._finetuned_classification(body)
        return self._finetuned_segmentation(body)

    def _lookup(self, essay_text: str) -> AnnotatedEssay:
        if essay_text not in self.by_text:
            raise AssertionError(f"mock oracle got unknown essay: {essay_text[:60]!r}")
        return self.by_text[essay_text]

    def _few_shot_segmentation(self, body: str) -> str:
        start = body.rindex("#ESSAY:\n") + len("#ESSAY:\n")
        end = body.index("\n\n#TASK:", start)
        return render_shot_example(self._lookup(body[start:end]), TaskKind.SEGMENTATION)

    def _few_shot_classification(self, body: str) -> str:
        start = body.rindex("#ESSAY:\n") + len("#ESSAY:\n")
        end = body.index("\n\n#QUERY:", start)
        segmented = body[start:end]
        ae = self._lookup(segmented.replace(" <SEP>", ""))
        target = body.rsplit('#ARGUMENT: "', 1)[1]
        assert target.endswith('"')
        target = target[:-1]
        index = split_segments(segmented).index(target)
        span = ae.spans[index]
        if "key: TYPE AND QUALITY." in body:
            return json.dumps({"TYPE AND QUALITY": [span.arg_type.value, span.quality.value]})
        if "key: TYPE." in body:
            return json.dumps({"TYPE": [span.arg_type.value]})
        if "key: QUALITY." in body:
            return json.dumps({"QUALITY": [span.quality.value]})
        raise AssertionError("classification prompt without a recognizable key")

    def _finetuned_segmentation(self, body: str) -> str:
        return render_shot_example(self._lookup(body), TaskKind.SEGMENTATION)

    def _finetuned_classification(self, body: str) -> str:
        assert self.finetuned_task is not None, "construct GoldOracle with finetuned_task"
        ae = self._lookup(body.replace(" <SEP>", ""))
        return render_shot_example(ae, self.finetuned_task)


def transport_for(reply_fn: ReplyFn, log: list[str] | None = None) -> httpx.MockTransport:
    """In-process Ollama-flavored transport; optionally logs prompt bodies."""
    lock = threading.Lock()

    def handler(request: httpx.Request) -> httpx.Response:
        if request.method != "POST":  # health probes
            return httpx.Response(200, text="ok")
        payload = json.loads(request.content)
        body = payload["prompt"]
        if log is not None:
            with lock:
                log.append(body)
        return httpx.Response(200, json={"response": reply_fn(body)})

    return httpx.MockTransport(handler)


GARBAGE = "I can't help you with this task."


def failing_on(reply_fn: ReplyFn, needle: str, garbage: str = GARBAGE) -> ReplyFn:
    """Permanently malformed output for prompts containing `needle`."""

    def reply(body: str) -> str:
        if needle in body:
            return garbage
        return reply_fn(body)

    return reply


def flaky(reply_fn: ReplyFn, fail_times: int, garbage: str = GARBAGE) -> ReplyFn:
    """Malformed output for the first `fail_times` calls per distinct prompt."""
    counts: dict[str, int] = {}
    lock = threading.Lock()

    def reply(body: str) -> str:
        with lock:
            counts[body] = counts.get(body, 0) + 1
            n = counts[body]
        if n <= fail_times:
            return garbage
        return reply_fn(body)

    return reply


def always_garbage(_body: str) -> str:
    return GARBAGE


def constant_quality(label: str) -> ReplyFn:
    def reply(_body: str) -> str:
        return json.dumps({"QUALITY": [label]})

    return reply


class MockLLMServer:
    """Real HTTP server speaking the Ollama /api/generate protocol."""

    def __init__(self, reply_fn: ReplyFn):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length))
                try:
                    text = outer.reply_fn(payload["prompt"])
                except Exception as exc:  # surface oracle bugs as HTTP 500s
                    self.send_response(500)
                    self.end_headers()
                    self.wfile.write(str(exc).encode())
                    return
                body = json.dumps({"response": text}).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def do_GET(self):
                self.send_response(200)
                self.send_header("Content-Length", "2")
                self.end_headers()
                self.wfile.write(b"ok")

            def log_message(self, *args):
                pass

        self.reply_fn = reply_fn
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "MockLLMServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
