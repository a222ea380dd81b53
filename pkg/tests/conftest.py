import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from uhrqa.imgcore import GrayBuffer, ImageBuffer

# one line per acceptance criterion, emitted after the run so pytest's
# output capture cannot swallow them
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def gray(arr) -> GrayBuffer:
    return GrayBuffer(np.asarray(arr, dtype=np.uint8))


def rgb(arr) -> ImageBuffer:
    a = np.asarray(arr, dtype=np.uint8)
    if a.ndim == 2:
        a = a[:, :, None]
    return ImageBuffer(a)


def noise_gray(h, w, seed=0, low=0, high=256) -> GrayBuffer:
    rng = np.random.default_rng(seed)
    return gray(rng.integers(low, high, size=(h, w), dtype=np.int64))


def noise_rgb(h, w, seed=0) -> ImageBuffer:
    rng = np.random.default_rng(seed)
    return rgb(rng.integers(0, 256, size=(h, w, 3), dtype=np.int64))


class StubState:
    """Scriptable behavior for the stub endpoint server."""

    def __init__(self):
        self.chat_responses: list = []   # queue of (status, text) or text
        self.chat_default: str = ""
        self.requests: list = []         # recorded request bodies by path
        self.embed_fn = None             # body dict -> vector list
        self.score_value = 5.0

    def next_chat(self):
        if self.chat_responses:
            item = self.chat_responses.pop(0)
        else:
            item = self.chat_default
        if isinstance(item, tuple):
            return item
        return 200, item


class _Handler(BaseHTTPRequestHandler):
    state: StubState = None

    def log_message(self, *a):
        pass

    def do_POST(self):
        n = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(n)) if n else {}
        self.state.requests.append((self.path, body))
        if self.path.endswith("/v1/chat/completions"):
            status, text = self.state.next_chat()
            if status != 200:
                self._reply(status, {"error": "stubbed failure"})
            else:
                self._reply(200, {"choices": [{"message": {"content": text}}]})
        elif self.path.endswith("/embed"):
            vec = self.state.embed_fn(body) if self.state.embed_fn \
                else [1.0, 0.0, 0.0, 0.0]
            self._reply(200, {"vector": vec})
        elif self.path.endswith("/score"):
            self._reply(200, {"score": self.state.score_value})
        else:
            self._reply(404, {"error": "not found"})

    def _reply(self, status, obj):
        payload = json.dumps(obj).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


@pytest.fixture
def stub_server():
    state = StubState()
    handler = type("Handler", (_Handler,), {"state": state})
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    url = f"http://127.0.0.1:{server.server_address[1]}"
    yield url, state
    server.shutdown()
    server.server_close()


def judge_json(scores: dict, reasoning="ok") -> str:
    obj = dict(scores)
    obj["reasoning"] = reasoning
    return "Here is my assessment.\n<json>" + json.dumps(obj) + "</json>"
