"""Minimal GitHub REST client: one rate-limit gate, Link pagination, disk cache."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Optional, Union
from urllib.parse import urlencode

import httpx

from ..fsutil import atomic_write_text
from .records import ApiAuthError, ApiUnavailable, RateLimited

log = logging.getLogger(__name__)

TOKEN_ENV = "XLB_GITHUB_TOKEN"
API_ROOT = "https://api.github.com"
SEARCH_CAP = 1000  # the search API never returns more than this per query


class RateLimitGate:
    """Serialises quota bookkeeping for every request made by one client.

    Remaining/reset are taken from the server's headers. When the quota is
    exhausted callers wait for the reset, unless the wait exceeds
    ``max_wait`` in which case :class:`RateLimited` is raised.
    """

    def __init__(self, max_wait: float = 900.0, clock: Callable[[], float] = time.time,
                 sleep: Callable[[float], None] = time.sleep) -> None:
        self.max_wait = max_wait
        self.clock = clock
        self.sleep = sleep
        self.remaining: Optional[int] = None
        self.reset_at: Optional[float] = None
        self._lock = threading.Lock()

    def wait_turn(self) -> None:
        with self._lock:
            if self.remaining is None or self.remaining > 0 or self.reset_at is None:
                return
            delay = self.reset_at - self.clock()
            if delay <= 0:
                self.remaining = None
                return
            if delay > self.max_wait:
                raise RateLimited(f"quota exhausted for {delay:.0f}s", retry_after=delay)
            log.info("rate limit reached; sleeping %.1fs", delay)
            self.sleep(delay)
            self.remaining = None

    def update(self, headers: Mapping[str, str]) -> None:
        with self._lock:
            if "x-ratelimit-remaining" in headers:
                try:
                    self.remaining = int(headers["x-ratelimit-remaining"])
                except ValueError:
                    pass
            if "x-ratelimit-reset" in headers:
                try:
                    self.reset_at = float(headers["x-ratelimit-reset"])
                except ValueError:
                    pass

    def backoff_for(self, response: httpx.Response) -> Optional[float]:
        """Seconds to wait before retrying a throttled response, or None if not throttled."""
        if response.status_code not in (403, 429):
            return None
        retry_after = response.headers.get("retry-after")
        if retry_after is not None:
            try:
                return max(0.0, float(retry_after))
            except ValueError:
                return 60.0
        if response.headers.get("x-ratelimit-remaining") == "0":
            reset = response.headers.get("x-ratelimit-reset")
            if reset is not None:
                return max(0.0, float(reset) - self.clock())
            return 60.0
        if response.status_code == 429:
            return 60.0
        return None


class ResponseCache:
    """JSON bodies of successful GETs, keyed by URL, one file each."""

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, url: str) -> Path:
        return self.root / (hashlib.sha256(url.encode("utf-8")).hexdigest() + ".json")

    def get(self, url: str) -> Optional[dict]:
        path = self._path(url)
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None

    def put(self, url: str, body: Any, next_url: Optional[str]) -> None:
        entry = {"url": url, "body": body, "next": next_url}
        atomic_write_text(self._path(url), json.dumps(entry, sort_keys=True))


class GitHubClient:
    def __init__(
        self,
        token: Optional[str] = None,
        *,
        cache_dir: Union[str, Path, None] = None,
        transport: Optional[httpx.BaseTransport] = None,
        base_url: str = API_ROOT,
        gate: Optional[RateLimitGate] = None,
        max_retries: int = 3,
        timeout: float = 30.0,
    ) -> None:
        token = token if token is not None else os.environ.get(TOKEN_ENV)
        if not token:
            raise ApiAuthError(f"no API token; set {TOKEN_ENV}")
        self.base_url = base_url.rstrip("/")
        self.gate = gate or RateLimitGate()
        self.cache = ResponseCache(cache_dir) if cache_dir is not None else None
        self.max_retries = max_retries
        self._http = httpx.Client(
            transport=transport,
            timeout=timeout,
            headers={
                "Authorization": f"Bearer {token}",
                "Accept": "application/vnd.github+json",
                "X-GitHub-Api-Version": "2022-11-28",
                "User-Agent": "xlb-miner",
            },
            follow_redirects=True,
        )

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "GitHubClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def url(self, path: str, params: Optional[Mapping[str, Any]] = None) -> str:
        url = path if path.startswith("http") else f"{self.base_url}/{path.lstrip('/')}"
        if params:
            url += ("&" if "?" in url else "?") + urlencode(sorted(params.items()))
        return url

    def _fetch(self, url: str) -> tuple[Any, Optional[str]]:
        if self.cache is not None:
            hit = self.cache.get(url)
            if hit is not None:
                return hit["body"], hit.get("next")
        attempt = 0
        while True:
            self.gate.wait_turn()
            try:
                response = self._http.get(url)
            except httpx.TransportError as exc:
                if attempt >= self.max_retries:
                    raise ApiUnavailable(f"GET {url}: {exc}") from exc
                self.gate.sleep(min(2 ** attempt, 30))
                attempt += 1
                continue
            self.gate.update(response.headers)
            if response.status_code == 401:
                raise ApiAuthError(f"GET {url}: credentials rejected")
            wait = self.gate.backoff_for(response)
            if wait is not None:
                if attempt >= self.max_retries or wait > self.gate.max_wait:
                    raise RateLimited(f"GET {url}: rate limited", retry_after=wait)
                log.info("throttled on %s; retrying in %.1fs", url, wait)
                self.gate.sleep(wait)
                attempt += 1
                continue
            if response.status_code == 403:
                raise ApiAuthError(f"GET {url}: forbidden")
            if response.status_code >= 500:
                if attempt >= self.max_retries:
                    raise ApiUnavailable(f"GET {url}: HTTP {response.status_code}")
                self.gate.sleep(min(2 ** attempt, 30))
                attempt += 1
                continue
            if response.status_code >= 400:
                raise ApiUnavailable(f"GET {url}: HTTP {response.status_code}")
            body = response.json()
            next_url = response.links.get("next", {}).get("url")
            if self.cache is not None:
                self.cache.put(url, body, next_url)
            return body, next_url

    def get(self, path: str, params: Optional[Mapping[str, Any]] = None) -> Any:
        return self._fetch(self.url(path, params))[0]

    def paginate(self, path: str, params: Optional[Mapping[str, Any]] = None,
                 item_key: Optional[str] = None) -> Iterator[Any]:
        """Yield items across all pages, following Link ``rel="next"``."""
        url: Optional[str] = self.url(path, params)
        while url:
            body, url = self._fetch(url)
            items = body.get(item_key, []) if item_key else body
            yield from items

    # -- endpoints -----------------------------------------------------------

    def search_repositories(self, language: str, min_stars: int, max_stars: Optional[int] = None) -> Iterator[dict]:
        """Repositories of a primary language with stars in range, sliced under the search cap."""
        for lo, hi in self._star_slices(language, min_stars, max_stars):
            stars = f"{lo}..{hi}" if hi is not None else f">={lo}"
            q = f"language:{language} stars:{stars}"
            yield from self.paginate("/search/repositories",
                                     {"q": q, "sort": "stars", "order": "desc", "per_page": 100},
                                     item_key="items")

    def _count(self, language: str, lo: int, hi: Optional[int]) -> int:
        stars = f"{lo}..{hi}" if hi is not None else f">={lo}"
        body = self.get("/search/repositories", {"q": f"language:{language} stars:{stars}", "per_page": 1})
        return int(body.get("total_count", 0))

    def _star_slices(self, language: str, lo: int, hi: Optional[int]) -> list[tuple[int, Optional[int]]]:
        pending = [(lo, hi)]
        out = []
        while pending:
            a, b = pending.pop()
            n = self._count(language, a, b)
            if n <= SEARCH_CAP or (b is not None and a >= b):
                out.append((a, b))
                continue
            top = b if b is not None else max(a * 4, a + 1000)
            if b is None:
                pending += [(top + 1, None), (a, top)]
            else:
                mid = (a + b) // 2
                pending += [(mid + 1, b), (a, mid)]
        return sorted(out, key=lambda r: r[0])

    def languages(self, full_name: str) -> dict[str, int]:
        return dict(self.get(f"/repos/{full_name}/languages"))

    def closed_issues(self, full_name: str) -> Iterator[dict]:
        return self.paginate(f"/repos/{full_name}/issues", {"state": "closed", "per_page": 100})
