"""HTTP GET binding for OAI-PMH requests with 503 Retry-After handling."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from email.utils import parsedate_to_datetime
from typing import Callable, Sequence
from urllib.parse import quote

import httpx

from .protocol import BaseUrl

log = logging.getLogger(__name__)

USER_AGENT = "oaival/0.1 (OAI-PMH validator)"


@dataclass(frozen=True)
class RetryPolicy:
    max_successive_retry_after: int = 5
    max_single_wait: float = 60.0
    overall_deadline: float = 600.0
    request_timeout: float = 30.0
    max_redirects: int = 5

    def __post_init__(self):
        if self.max_successive_retry_after < 1:
            raise ValueError("max_successive_retry_after must be at least 1")
        if self.max_single_wait < 0 or self.overall_deadline <= 0 or self.request_timeout <= 0:
            raise ValueError("waits, deadline and timeout must be positive")
        if self.max_redirects < 0:
            raise ValueError("max_redirects must be non-negative")


@dataclass
class HttpExchange:
    request_url: str
    status_code: int
    headers: list[tuple[str, str]]
    body: bytes
    elapsed: float
    retries_performed: int = 0
    events: list[str] = field(default_factory=list)

    def header(self, name: str) -> str | None:
        name = name.lower()
        for key, value in self.headers:
            if key.lower() == name:
                return value
        return None

    @property
    def content_type(self) -> str | None:
        return self.header("content-type")


class TransportError(Exception):
    def __init__(self, message: str, request_url: str, *, retries: int = 0, events=None, elapsed: float = 0.0):
        super().__init__(message)
        self.request_url = request_url
        self.retries = retries
        self.events = list(events or [])
        self.elapsed = elapsed


class NoResponse(TransportError):
    """Connection refused, DNS failure, timeout or overall deadline exceeded."""


class ExcessiveRetryAfter(TransportError):
    """More successive 503 Retry-After replies than the policy tolerates."""


def build_request_url(base: BaseUrl | str, verb: str | None, args: Sequence[tuple[str, str]] = ()) -> str:
    """Append ``verb`` and ``args`` to ``base`` as a percent-encoded query string.

    Every key and value is encoded with no safe characters beyond the RFC 3986
    unreserved set, so ``"`` becomes ``%22`` and ``:`` becomes ``%3A``. A base
    that already carries a query is extended with ``&``.
    """
    base = str(base)
    pairs = [] if verb is None else [("verb", verb)]
    pairs.extend(args)
    query = "&".join(f"{quote(k, safe='')}={quote(v, safe='')}" for k, v in pairs)
    if not query:
        return base
    if "?" not in base:
        return f"{base}?{query}"
    if base.endswith(("?", "&")):
        return base + query
    return f"{base}&{query}"


def parse_retry_after(value: str | None, now: datetime | None = None) -> float:
    """Seconds to wait for a Retry-After header given as delta-seconds or an HTTP-date.

    Unparseable values count as one second.
    """
    if value is None:
        return 1.0
    value = value.strip()
    if value.isdigit():
        return float(int(value))
    try:
        when = parsedate_to_datetime(value)
    except (TypeError, ValueError, IndexError):
        return 1.0
    if when is None:
        return 1.0
    if when.tzinfo is None:
        when = when.replace(tzinfo=timezone.utc)
    now = now or datetime.now(timezone.utc)
    return max(0.0, (when - now).total_seconds())


def fetch(
    base: BaseUrl | str,
    verb: str | None,
    args: Sequence[tuple[str, str]] = (),
    policy: RetryPolicy = RetryPolicy(),
    *,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    monotonic: Callable[[], float] = time.monotonic,
) -> HttpExchange:
    """GET one OAI-PMH request, waiting out 503 Retry-After replies.

    Only successive 503 responses that carry Retry-After are retried. The
    call raises ExcessiveRetryAfter once their number exceeds
    ``policy.max_successive_retry_after`` and NoResponse on any connection
    failure, timeout or when the overall deadline would be passed.
    """
    url = build_request_url(base, verb, args)
    own_client = client is None
    if own_client:
        client = make_client(policy)
    events: list[str] = []
    start = monotonic()
    retries = 0
    try:
        while True:
            remaining = policy.overall_deadline - (monotonic() - start)
            if remaining <= 0:
                raise NoResponse(
                    f"overall deadline of {policy.overall_deadline:g}s exceeded",
                    url, retries=retries, events=events, elapsed=monotonic() - start,
                )
            timeout = min(policy.request_timeout, remaining)
            sent = monotonic()
            try:
                response = client.get(url, timeout=timeout, follow_redirects=True)
            except httpx.TooManyRedirects as exc:
                raise NoResponse(
                    f"more than {policy.max_redirects} redirects: {exc}",
                    url, retries=retries, events=events, elapsed=monotonic() - start,
                ) from None
            except httpx.TimeoutException:
                raise NoResponse(
                    f"no response within {timeout:g}s",
                    url, retries=retries, events=events, elapsed=monotonic() - start,
                ) from None
            except httpx.HTTPError as exc:
                raise NoResponse(
                    f"connection failed: {exc}",
                    url, retries=retries, events=events, elapsed=monotonic() - start,
                ) from None
            for hop in response.history:
                events.append(f"redirect {hop.status_code} -> {hop.headers.get('location', '?')}")
            retry_after = response.headers.get("retry-after")
            if response.status_code != 503 or retry_after is None:
                return HttpExchange(
                    request_url=url,
                    status_code=response.status_code,
                    headers=list(response.headers.multi_items()),
                    body=response.content,
                    elapsed=monotonic() - sent,
                    retries_performed=retries,
                    events=events,
                )
            if retries >= policy.max_successive_retry_after:
                raise ExcessiveRetryAfter(
                    f"{retries + 1} successive 503 Retry-After replies "
                    f"(limit {policy.max_successive_retry_after})",
                    url, retries=retries, events=events, elapsed=monotonic() - start,
                )
            wait = parse_retry_after(retry_after)
            if wait > policy.max_single_wait:
                events.append(f"Retry-After {wait:g}s clamped to {policy.max_single_wait:g}s")
                wait = policy.max_single_wait
            if monotonic() - start + wait > policy.overall_deadline:
                raise NoResponse(
                    f"waiting {wait:g}s for Retry-After would pass the overall deadline",
                    url, retries=retries, events=events, elapsed=monotonic() - start,
                )
            events.append(f"503 Retry-After {retry_after!r}: waited {wait:g}s")
            log.debug("503 from %s, sleeping %.1fs", url, wait)
            sleep(wait)
            retries += 1
    finally:
        if own_client:
            client.close()


def make_client(policy: RetryPolicy = RetryPolicy(), **kwargs) -> httpx.Client:
    return httpx.Client(
        timeout=policy.request_timeout,
        max_redirects=policy.max_redirects,
        headers={"User-Agent": USER_AGENT},
        **kwargs,
    )
