"""Cache-first access to the Wikipedia REST API and DBpedia, with a throttled live transport."""
from __future__ import annotations

import os
import hashlib
import json
import time
import threading
from dataclasses import dataclass
from datetime import date
from urllib.parse import quote

import requests

import infra.config as config
import infra.logger as logger
from graph.model import DBR, RDF_TYPE, Iri
from infra.errors import IoFailure, PreconditionError, ValidationError
from infra.storage import atomic_write_text
from rules.engine import LookupFailure

FIXTURE_ONLY = "fixture-only"
LIVE_WITH_CACHE = "live-with-cache"

SUMMARY_ENDPOINT = "wikipedia-summary"
TYPES_ENDPOINT = "dbpedia-types"
OBJECTS_ENDPOINT = "dbpedia-objects"


class NotInFixture(ValidationError):
    def __init__(self, key: str, endpoint: str):
        self.key = key
        self.endpoint = endpoint
        super().__init__(f"No {endpoint} fixture for {key}")


class HttpError(IoFailure):
    def __init__(self, status: int | None, url: str):
        self.status = status
        self.url = url
        super().__init__(f"HTTP {status} for {url}")


@dataclass(frozen=True)
class FetchPolicy:
    mode: str = FIXTURE_ONLY
    rate_limit: float = config.RATE_LIMIT
    cache_dir: str = config.CACHE_DIR
    max_retries: int = 5

    def __post_init__(self):
        if self.mode not in (FIXTURE_ONLY, LIVE_WITH_CACHE):
            raise ValidationError(f"Unknown fetch mode '{self.mode}'")
        if self.mode == LIVE_WITH_CACHE and self.rate_limit <= 0:
            raise ValidationError("rate_limit must be > 0 in live mode")

    @property
    def live(self) -> bool:
        return self.mode == LIVE_WITH_CACHE


@dataclass(frozen=True)
class AbstractRecord:
    plain: str
    html: str
    page_id: int | None
    created_date: date | None = None


class RateLimiter:
    """Spaces calls at least 1/rate seconds apart across all threads."""

    def __init__(self, rate: float, clock=time.monotonic, sleep=time.sleep):
        self._interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._next_slot = None
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next_slot is not None and now < self._next_slot:
                self._sleep(self._next_slot - now)
                now = self._clock()
            self._next_slot = max(now, self._next_slot or now) + self._interval


class ResponseCache:
    """One JSON record per (endpoint, key) under ``cache_dir/endpoint/``, named by a hash of both."""

    def __init__(self, cache_dir: str):
        self.cache_dir = cache_dir

    def path(self, endpoint: str, key: str) -> str:
        digest = hashlib.sha256(f"{endpoint}\n{key}".encode("utf-8")).hexdigest()
        return os.path.join(self.cache_dir, endpoint, digest + ".json")

    def get(self, endpoint: str, key: str) -> dict | None:
        path = self.path(endpoint, key)
        if not os.path.exists(path):
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)["payload"]
        except (OSError, ValueError, KeyError) as e:
            logger.warning(f"⚠️ Ignoring unreadable cache record {path}: {e}")
            return None

    def put(self, endpoint: str, key: str, payload: dict) -> None:
        record = {"endpoint": endpoint, "key": key, "payload": payload}
        atomic_write_text(self.path(endpoint, key),
                          json.dumps(record, sort_keys=True, ensure_ascii=False, indent=2) + "\n")


def _resource_name(entity: Iri) -> str:
    if entity.value.startswith(DBR):
        return entity.value[len(DBR):]
    return entity.local_name


class Fetcher:
    def __init__(self, policy: FetchPolicy, session=None, clock=time.monotonic, sleep=time.sleep):
        self.policy = policy
        self.cache = ResponseCache(policy.cache_dir)
        self._session = session
        self._sleep = sleep
        self._limiter = RateLimiter(policy.rate_limit, clock, sleep) if policy.live else None
        self.network_calls = 0

    @property
    def session(self):
        if self._session is None:
            self._session = requests.Session()
            self._session.headers.update({"User-Agent": config.USER_AGENT, "Accept": "application/json"})
        return self._session

    def get_json(self, url: str, params: dict | None = None) -> dict:
        """Throttled GET. 429/503 answers are retried with backoff, never surfaced as errors
        unless the retry budget runs out."""
        status = None
        for attempt in range(self.policy.max_retries + 1):
            self._limiter.acquire()
            self.network_calls += 1
            try:
                resp = self.session.get(url, params=params, timeout=30)
            except requests.RequestException as e:
                logger.warning(f"🌐 Request error for {url}: {e}. Retrying...")
                self._sleep(min(2 ** attempt, 60))
                continue

            status = resp.status_code
            if status == 200:
                return resp.json()
            if status in (429, 503):
                retry_after = resp.headers.get("Retry-After", "")
                delay = float(retry_after) if retry_after.isdigit() else min(2 ** attempt, 60)
                logger.info(f"⏳ Rate limited by {url} (HTTP {status}); backing off {delay:.0f}s")
                self._sleep(delay)
                continue
            raise HttpError(status, url)
        raise HttpError(status, url)

    def cached(self, endpoint: str, key: str, loader) -> dict:
        payload = self.cache.get(endpoint, key)
        if payload is not None:
            return payload
        if not self.policy.live:
            raise NotInFixture(key, endpoint)
        payload = loader()
        self.cache.put(endpoint, key, payload)
        return payload

    # --- Wikipedia ---

    def _load_summary(self, entity: Iri) -> dict:
        title = quote(_resource_name(entity), safe="")
        data = self.get_json(f"{config.WIKIPEDIA_REST_URL.rstrip('/')}/page/summary/{title}")
        page_id = data.get("pageid")
        return {
            "plain": data.get("extract", ""),
            "html": data.get("extract_html", ""),
            "page_id": page_id,
            "created_date": self._load_creation_date(page_id) if page_id else None,
        }

    def _load_creation_date(self, page_id: int) -> str | None:
        data = self.get_json(config.WIKIPEDIA_API_URL, params={
            "action": "query", "prop": "revisions", "pageids": page_id,
            "rvlimit": 1, "rvdir": "newer", "rvprop": "timestamp",
            "format": "json", "formatversion": 2,
        })
        try:
            return data["query"]["pages"][0]["revisions"][0]["timestamp"][:10]
        except (KeyError, IndexError, TypeError):
            logger.warning(f"⚠️ No first revision found for page {page_id}")
            return None

    def fetch_abstract(self, entity: Iri) -> AbstractRecord:
        if not isinstance(entity, Iri):
            raise PreconditionError(f"fetch_abstract expects an IRI, got {entity!r}")
        payload = self.cached(SUMMARY_ENDPOINT, entity.value, lambda: self._load_summary(entity))
        created = payload.get("created_date")
        return AbstractRecord(
            plain=payload.get("plain", ""),
            html=payload.get("html", ""),
            page_id=payload.get("page_id"),
            created_date=date.fromisoformat(created) if created else None,
        )

    # --- DBpedia ---

    def _load_resource(self, entity: Iri) -> dict:
        name = quote(_resource_name(entity), safe="")
        data = self.get_json(f"{config.DBPEDIA_URL.rstrip('/')}/data/{name}.json")
        return data.get(entity.value, {})

    def type_lookup(self, entity: Iri) -> set:
        if not isinstance(entity, Iri):
            raise PreconditionError(f"type_lookup expects an IRI, got {entity!r}")

        def load():
            values = self._load_resource(entity).get(RDF_TYPE, [])
            return {"types": sorted(v["value"] for v in values if v.get("type") == "uri")}

        payload = self.cached(TYPES_ENDPOINT, entity.value, load)
        return {Iri(t) for t in payload.get("types", [])}

    def objects(self, subject: Iri, predicate: Iri) -> set:
        """TripleLookup over live DBpedia, used by PROPAGATE rules."""
        key = f"{subject.value} {predicate.value}"

        def load():
            values = self._load_resource(subject).get(predicate.value, [])
            return {"objects": sorted(v["value"] for v in values if v.get("type") == "uri")}

        try:
            payload = self.cached(OBJECTS_ENDPOINT, key, load)
        except (NotInFixture, HttpError) as e:
            raise LookupFailure(subject, str(e))
        return {Iri(o) for o in payload.get("objects", [])}
