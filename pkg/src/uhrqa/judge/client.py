"""Chat-completion transport and response parsing for MLLM judging.

Prompt templates live as UTF-8 text assets next to this module; placeholders
are substituted with plain string replacement (the templates contain literal
JSON braces, so ``str.format`` is unusable).
"""

from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from importlib import resources

import requests

TEMPLATE_IDS = ("global_fidelity", "local_fidelity", "ics")

GLOBAL_KEYS = ("SC-global", "PI", "LC", "CH")
LOCAL_KEYS = ("NGE", "GA", "TF", "MGC", "SC-local")
ICS_KEYS = ("IEV", "AAA", "SRA")

_TEMPLATE_KEYS = {
    "global_fidelity": (GLOBAL_KEYS, (1, 5)),
    "local_fidelity": (LOCAL_KEYS, (1, 5)),
    "ics": (ICS_KEYS, (1, 10)),
}

_JSON_SPAN = re.compile(r"<json>(.*?)</json>", re.DOTALL)

API_KEY_ENV = "JUDGE_API_KEY"


class JudgeError(Exception):
    pass


class JudgeTransportError(JudgeError):
    """Endpoint unreachable or persistently failing."""


class JudgeParseError(JudgeError):
    """Response does not carry a valid scored JSON block."""


@dataclass
class JudgeResult:
    scores: dict[str, int]
    reasoning: str
    raw: str


@dataclass
class RetryPolicy:
    base_delay: float = 1.0
    factor: float = 2.0
    max_attempts: int = 5


def load_template(template_id: str) -> str:
    if template_id not in TEMPLATE_IDS:
        raise ValueError(f"unknown template id {template_id!r}")
    ref = resources.files("uhrqa.judge").joinpath(f"prompts/{template_id}.txt")
    return ref.read_text(encoding="utf-8")


def render_prompt(template_id: str, vars: dict) -> list[dict]:
    """Build the chat message list for one judging call.

    ``vars`` supplies ``images`` (base64 PNG/JPEG strings, attached in the
    given order) plus the template's placeholders: ``long_caption`` for ics,
    ``relative_coords`` (normalized [x_min, y_min, x_max, y_max]) for
    local_fidelity. For local_fidelity the patch image comes first and the
    downsampled global image second.
    """
    text = load_template(template_id)
    if template_id == "ics":
        if "long_caption" not in vars:
            raise ValueError("ics template requires 'long_caption'")
        text = text.replace("{long_caption}", str(vars["long_caption"]))
    elif template_id == "local_fidelity":
        coords = vars.get("relative_coords")
        if coords is None:
            raise ValueError("local_fidelity template requires 'relative_coords'")
        coords = [float(c) for c in coords]
        if len(coords) != 4:
            raise ValueError("relative_coords must have 4 elements")
        rendered = "[" + ", ".join(f"{c:g}" for c in coords) + "]"
        text = text.replace("{relative_coords}", rendered)
    content: list[dict] = [{"type": "text", "text": text}]
    for b64 in vars.get("images", []):
        content.append({"type": "image_url",
                        "image_url": {"url": f"data:image/png;base64,{b64}"}})
    return [{"role": "user", "content": content}]


def chat_complete(endpoint: str, model: str, messages: list[dict],
                  retry_policy: RetryPolicy | None = None,
                  timeout: float = 120.0,
                  session: requests.Session | None = None,
                  sleep=time.sleep) -> str:
    """POST to {endpoint}/v1/chat/completions and return the first choice's
    message content.

    Transport errors and HTTP 429/5xx are retried with exponential backoff;
    temperature is pinned to 0 so retries are idempotent.
    """
    policy = retry_policy or RetryPolicy()
    url = endpoint.rstrip("/") + "/v1/chat/completions"
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(API_KEY_ENV)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    body = {"model": model, "messages": messages, "temperature": 0}
    post = (session or requests).post
    last_error = None
    for attempt in range(policy.max_attempts):
        if attempt:
            sleep(policy.base_delay * policy.factor ** (attempt - 1))
        try:
            resp = post(url, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as e:
            last_error = e
            continue
        if resp.status_code == 429 or resp.status_code >= 500:
            last_error = JudgeTransportError(f"HTTP {resp.status_code}")
            continue
        if resp.status_code != 200:
            raise JudgeTransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as e:
            raise JudgeParseError(f"malformed completion response: {e}") from e
    raise JudgeTransportError(
        f"exhausted {policy.max_attempts} attempts: {last_error}")


def extract_judge_json(raw: str, template_id: str) -> JudgeResult:
    """Parse and validate the first <json>...</json> span of a judge reply."""
    keys, (lo, hi) = _TEMPLATE_KEYS.get(template_id, (None, (0, 0)))
    if keys is None:
        raise ValueError(f"unknown template id {template_id!r}")
    m = _JSON_SPAN.search(raw)
    if not m:
        raise JudgeParseError("no <json> tag in response")
    try:
        obj = json.loads(m.group(1))
    except json.JSONDecodeError as e:
        raise JudgeParseError(f"invalid JSON in <json> block: {e}") from e
    if not isinstance(obj, dict):
        raise JudgeParseError("<json> block is not an object")
    scores = {}
    for key in keys:
        if key not in obj:
            raise JudgeParseError(f"missing key {key!r}")
        v = obj[key]
        if not isinstance(v, int) or isinstance(v, bool):
            raise JudgeParseError(f"score {key!r} is not an integer")
        if not (lo <= v <= hi):
            raise JudgeParseError(f"score {key}={v} outside [{lo}, {hi}]")
        scores[key] = v
    reasoning = obj.get("reasoning", "")
    if not isinstance(reasoning, str):
        raise JudgeParseError("reasoning is not a string")
    return JudgeResult(scores=scores, reasoning=reasoning, raw=raw)


class JudgeClient:
    """Thread-safe judge endpoint client with a bounded in-flight gate."""

    def __init__(self, endpoint: str, model: str, max_in_flight: int = 4,
                 retry_policy: RetryPolicy | None = None, timeout: float = 120.0):
        self.endpoint = endpoint
        self.model = model
        self.retry_policy = retry_policy or RetryPolicy()
        self.timeout = timeout
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._session = requests.Session()

    def complete(self, messages: list[dict]) -> str:
        with self._gate:
            return chat_complete(self.endpoint, self.model, messages,
                                 self.retry_policy, self.timeout, self._session)

    def judge(self, template_id: str, vars: dict) -> JudgeResult:
        raw = self.complete(render_prompt(template_id, vars))
        return extract_judge_json(raw, template_id)
