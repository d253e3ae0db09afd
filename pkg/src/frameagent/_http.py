"""Shared HTTP POST helper for the backend endpoints."""

from __future__ import annotations

import time
from typing import Any

import requests

from .errors import BackendError


def post_json(
    url: str,
    payload: dict[str, Any],
    headers: dict[str, str] | None = None,
    timeout: float = 60.0,
    retries: int = 3,
    backoff: float = 0.5,
) -> tuple[Any, int]:
    """POST payload as JSON and return (parsed body, attempts used).

    Only transport errors, 429, and 5xx count as transient and are retried
    with exponential backoff. Authentication rejections and other client
    errors raise immediately.
    """
    last = "no attempt made"
    for attempt in range(1, retries + 1):
        try:
            resp = requests.post(url, json=payload, headers=headers or {}, timeout=timeout)
        except requests.RequestException as exc:
            last = f"transport error: {exc}"
        else:
            if resp.status_code in (401, 403):
                raise BackendError(f"authentication failed (HTTP {resp.status_code}) for {url}")
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
            elif resp.status_code >= 400:
                raise BackendError(
                    f"HTTP {resp.status_code} from {url}: {resp.text[:200]}"
                )
            else:
                try:
                    return resp.json(), attempt
                except ValueError as exc:
                    raise BackendError(f"non-JSON response from {url}: {exc}") from exc
        if attempt < retries:
            time.sleep(backoff * (2 ** (attempt - 1)))
    raise BackendError(f"exhausted {retries} attempts for {url}: {last}")
