"""JSON-over-HTTP client for externally hosted model services.

Every endpoint is a flat ``POST {base_url}/{endpoint}``. Responses are
schema-checked before they leave this module.
"""

from __future__ import annotations

import logging
import os
import threading
from typing import Any, Callable

import requests

from ..errors import BackendError, OutOfRange
from .base import BackendEndpoint, WireBackend

logger = logging.getLogger(__name__)


class LiveBackend(WireBackend):
    def __init__(self, endpoint: BackendEndpoint):
        self.base_url = endpoint.base_url.rstrip("/")
        self.timeout = endpoint.timeout
        self.retries = endpoint.retries
        self.token = endpoint.token or os.environ.get("RVOS_BACKEND_TOKEN")
        self._slots = threading.BoundedSemaphore(endpoint.max_in_flight)

    def _post(self, endpoint: str, payload: dict):
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        url = f"{self.base_url}/{endpoint}"
        with self._slots:
            try:
                resp = requests.post(url, json=payload, timeout=self.timeout, headers=headers)
            except (requests.Timeout, requests.ConnectionError) as exc:
                raise BackendError("timeout", f"{url}: {exc}") from exc
        if resp.status_code >= 400:
            raise BackendError("http", f"{url}: {resp.text[:200]}", status=resp.status_code)
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError("malformed", f"{url}: body is not JSON") from exc

    def _exchange(self, endpoint: str, request: dict, decode: Callable[[Any], Any]):
        # timeouts and out-of-range answers are retried; malformed or HTTP errors are not
        attempt = 0
        while True:
            try:
                return decode(self._post(endpoint, request))
            except (OutOfRange, BackendError) as exc:
                retryable = isinstance(exc, OutOfRange) or exc.kind == "timeout"
                if not retryable or attempt >= self.retries:
                    raise
                attempt += 1
                logger.warning("/%s attempt %d failed (%s); retrying", endpoint, attempt, exc)
