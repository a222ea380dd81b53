"""HTTP clients for the pluggable external scorers.

Neural models (embedders, aesthetic predictors, perceptual metrics) are
opaque endpoints; the toolkit only ships their wire protocols. The embedder
speaks POST /embed with {"id", "image_b64"} or {"text"} and answers
{"vector": [...]}.
"""

from __future__ import annotations

import base64

import numpy as np
import requests

from .imgcore import ImageBuffer, encode_pnm


class EndpointError(Exception):
    pass


class EmbedderClient:
    def __init__(self, endpoint: str, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self._session = requests.Session()
        self.timeout = timeout

    def _post(self, body: dict) -> np.ndarray:
        try:
            resp = self._session.post(self.endpoint + "/embed", json=body,
                                      timeout=self.timeout)
        except requests.RequestException as e:
            raise EndpointError(f"embedder unreachable: {e}") from e
        if resp.status_code != 200:
            raise EndpointError(f"embedder HTTP {resp.status_code}")
        try:
            return np.asarray(resp.json()["vector"], dtype=np.float64)
        except (ValueError, KeyError) as e:
            raise EndpointError(f"malformed embedder response: {e}") from e

    def embed_image(self, image_id: str, img: ImageBuffer) -> np.ndarray:
        b64 = base64.b64encode(encode_pnm(img)).decode("ascii")
        return self._post({"id": image_id, "image_b64": b64})

    def embed_text(self, text: str) -> np.ndarray:
        return self._post({"text": text})


class ScorerClient:
    """Single-score endpoint (aesthetic predictors): POST /score with
    {"id", "image_b64"} answering {"score": number}."""

    def __init__(self, endpoint: str, timeout: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self._session = requests.Session()
        self.timeout = timeout

    def score_image(self, image_id: str, img: ImageBuffer) -> float:
        b64 = base64.b64encode(encode_pnm(img)).decode("ascii")
        try:
            resp = self._session.post(self.endpoint + "/score",
                                      json={"id": image_id, "image_b64": b64},
                                      timeout=self.timeout)
        except requests.RequestException as e:
            raise EndpointError(f"scorer unreachable: {e}") from e
        if resp.status_code != 200:
            raise EndpointError(f"scorer HTTP {resp.status_code}")
        try:
            return float(resp.json()["score"])
        except (ValueError, KeyError) as e:
            raise EndpointError(f"malformed scorer response: {e}") from e
