"""Rate-limited HTTP with retries.

The limiter is the one synchronization point shared by every client that
uses the same ``HttpClient``.  Clock and sleep are injectable so tests can
drive it with a fake clock.
"""
from __future__ import annotations

import logging
import math
import random
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Mapping, Protocol

import requests

from ..errors import NotFound, TransportError, ValidationError

log = logging.getLogger(__name__)

EUTILS_BASE_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/"
COLIL_ENDPOINT_URL = "http://colil.dbcls.jp/sparql"
RETRY_STATUS = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class FetchConfig:
    eutils_base_url: str = EUTILS_BASE_URL
    colil_endpoint_url: str = COLIL_ENDPOINT_URL
    api_key: str | None = None
    rate_limit: float | None = None
    retries: int = 3
    timeout: float = 30.0
    backoff: float = 0.5

    def __post_init__(self) -> None:
        if self.rate_limit is None:
            # NCBI asks for at most 3 requests/s, or 10/s with a key
            object.__setattr__(self, "rate_limit", 10.0 if self.api_key else 3.0)
        if not self.rate_limit > 0:
            raise ValidationError(f"rate_limit must be positive, got {self.rate_limit}")
        if self.retries < 0:
            raise ValidationError(f"retries must be >= 0, got {self.retries}")
        if self.timeout <= 0:
            raise ValidationError(f"timeout must be positive, got {self.timeout}")


@dataclass(frozen=True)
class RawFetchResult:
    pmid: str
    payload: bytes
    fetched_at: datetime
    source: str

    def __post_init__(self) -> None:
        if not self.payload:
            raise ValidationError("empty payload")
        if self.source not in ("eutils", "colil"):
            raise ValidationError(f"unknown source {self.source!r}")


class RateLimiter:
    """At most ``rate`` acquisitions in any one-second window.

    Two rules are enforced together: consecutive acquisitions are spaced at
    least ``1/rate`` apart, and a sliding window never holds more than
    ``max(1, floor(rate))`` timestamps.  The second rule guards against
    float round-off in the first.
    """

    def __init__(
        self,
        rate: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if not rate > 0:
            raise ValidationError(f"rate must be positive, got {rate}")
        self.rate = float(rate)
        self.interval = 1.0 / self.rate
        self.cap = max(1, math.floor(self.rate))
        self.clock = clock
        self.sleep = sleep
        self._lock = threading.Lock()
        self._recent: deque[float] = deque()
        self._last: float | None = None

    def _wait_time(self, now: float) -> float:
        wait = 0.0
        if self._last is not None:
            wait = max(wait, self._last + self.interval - now)
        while self._recent and self._recent[0] <= now - 1.0:
            self._recent.popleft()
        if len(self._recent) >= self.cap:
            wait = max(wait, self._recent[0] + 1.0 - now)
        return wait

    def acquire(self) -> float:
        """Block until a request may go out; returns the time it was granted."""
        with self._lock:
            while True:
                now = self.clock()
                wait = self._wait_time(now)
                if wait <= 0.0:
                    break
                self.sleep(wait)
            self._last = now
            self._recent.append(now)
            return now


class Session(Protocol):
    def get(self, url: str, params: Mapping[str, Any] | None = None, **kwargs: Any) -> Any: ...


@dataclass
class HttpClient:
    config: FetchConfig = field(default_factory=FetchConfig)
    session: Session | None = None
    limiter: RateLimiter | None = None
    rng: random.Random = field(default_factory=lambda: random.Random(0))
    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], float] = time.monotonic

    def __post_init__(self) -> None:
        if self.session is None:
            self.session = requests.Session()
        if self.limiter is None:
            self.limiter = RateLimiter(self.config.rate_limit, clock=self.clock, sleep=self.sleep)

    def _delay(self, attempt: int, response: Any) -> float:
        retry_after = None
        headers = getattr(response, "headers", None) or {}
        if "Retry-After" in headers:
            try:
                retry_after = float(headers["Retry-After"])
            except (TypeError, ValueError):
                retry_after = None
        base = self.config.backoff * (2 ** attempt)
        jitter = self.rng.uniform(0.0, base)
        return max(retry_after or 0.0, base + jitter)

    def get(self, url: str, params: Mapping[str, Any] | None = None, headers: Mapping[str, str] | None = None) -> bytes:
        """GET with rate limiting and jittered retries on 429/5xx and network errors."""
        last_error = "no attempt made"
        for attempt in range(self.config.retries + 1):
            self.limiter.acquire()
            response = None
            try:
                response = self.session.get(url, params=params, headers=headers, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                status = response.status_code
                if 200 <= status < 300:
                    return response.content
                if status == 404:
                    raise NotFound(f"{url} returned 404")
                if status not in RETRY_STATUS:
                    raise TransportError(f"{url} returned HTTP {status}")
                last_error = f"HTTP {status}"
            if attempt < self.config.retries:
                delay = self._delay(attempt, response)
                log.warning("%s: %s, retrying in %.2fs", url, last_error, delay)
                self.sleep(delay)
        raise TransportError(f"{url}: {last_error} after {self.config.retries + 1} attempts")


def now_utc() -> datetime:
    return datetime.now(timezone.utc)
