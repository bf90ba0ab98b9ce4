"""Scripted completion endpoint for tests and offline runs.

Speaks the same wire format as a real completion API:

    POST {"model", "prompt", "max_tokens", "temperature"}
        -> {"choices": [{"text": ...}]}
    POST {"prompt", "n"}   (augmentation request)
        -> {"choices": [{"text": "line\\nline\\n..."}]}

Behaviors: "constant" always answers `constant_text`; "echo" finds the
prompt's INPUT line and answers with whichever known label name occurs in
it ("unknown" otherwise); "gibberish" answers text containing no label
name; "flaky" returns HTTP 500 on every odd-numbered request and behaves
like echo on the rest; "empty" answers an empty choice list. Augmentation
requests always get n paraphrase lines, except under "empty".
"""

from __future__ import annotations

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

BEHAVIORS = ("constant", "echo", "gibberish", "flaky", "empty")

GIBBERISH_TEXT = "zzkq vrmpl ostren dulb"


def _input_line(prompt: str) -> str:
    last = ""
    for line in prompt.splitlines():
        if line.startswith("INPUT: "):
            last = line[len("INPUT: "):]
    return last


def _find_label(text: str, label_names) -> str:
    for name in label_names:
        pattern = r"(?<![0-9A-Za-z])" + re.escape(name) + r"(?![0-9A-Za-z])"
        if re.search(pattern, text, re.IGNORECASE):
            return name
    return "unknown"


class MockCompletionServer:
    """Threaded local HTTP server with a scripted behavior.

    Use as a context manager or call start()/stop(). `url` is available
    after start. Every accepted request payload lands in `request_log`.
    """

    def __init__(self, behavior: str = "echo", label_names=(), constant_text: str = "",
                 port: int = 0):
        if behavior not in BEHAVIORS:
            raise ValueError(f"behavior must be one of {BEHAVIORS}, got {behavior!r}")
        if behavior == "constant" and not constant_text:
            raise ValueError("constant behavior needs constant_text")
        self.behavior = behavior
        self.label_names = tuple(label_names)
        self.constant_text = constant_text
        self._requested_port = port
        self._lock = threading.Lock()
        self.request_log = []
        self.n_requests = 0
        self.n_failures = 0
        self._httpd = None
        self._thread = None
        self.url = None

    def _completion_text(self, prompt: str) -> str:
        if self.behavior == "constant":
            return self.constant_text
        if self.behavior == "gibberish":
            return GIBBERISH_TEXT
        # echo, and the non-failing half of flaky
        return _find_label(_input_line(prompt), self.label_names)

    def _augment_text(self, prompt: str, n: int) -> str:
        source = _input_line(prompt) or prompt.splitlines()[-1]
        return "\n".join(f"variant {i + 1} of {source}" for i in range(n))

    def _handle(self, payload: dict):
        """Returns (http status, response body dict)."""
        with self._lock:
            self.n_requests += 1
            seq = self.n_requests
            self.request_log.append(payload)
        if self.behavior == "empty":
            return 200, {"choices": []}
        if self.behavior == "flaky" and seq % 2 == 1:
            with self._lock:
                self.n_failures += 1
            return 500, {"error": "scripted failure"}
        prompt = str(payload.get("prompt", ""))
        if "n" in payload:
            text = self._augment_text(prompt, int(payload["n"]))
        else:
            text = self._completion_text(prompt)
        return 200, {"choices": [{"text": text}]}

    def start(self) -> "MockCompletionServer":
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                try:
                    payload = json.loads(self.rfile.read(length).decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    status, body = 400, {"error": "bad json"}
                else:
                    status, body = outer._handle(payload)
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, fmt, *args):
                pass  # keep test output clean

        self._httpd = ThreadingHTTPServer(("127.0.0.1", self._requested_port), Handler)
        self.port = self._httpd.server_address[1]
        self.url = f"http://127.0.0.1:{self.port}/complete"
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._thread.join(timeout=5)
            self._httpd = None
            self._thread = None

    def __enter__(self) -> "MockCompletionServer":
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve_forever(behavior: str, label_names, constant_text: str, port: int):
    """Foreground mode for the CLI; blocks until interrupted."""
    server = MockCompletionServer(behavior=behavior, label_names=label_names,
                                  constant_text=constant_text, port=port)
    server.start()
    print(f"mock endpoint listening on {server.url} (behavior={behavior})", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0
