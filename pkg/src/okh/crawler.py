"""Seed-list driven manifest harvester.

Fetches manifests listed in a seed CSV, parses and validates them, stamps
provenance, and deduplicates mirrors.  Politeness is enforced per host:
requests to one host are serialized and spaced by a configurable delay.
Setting OKH_OFFLINE=1 confines the crawler to loopback hosts.
"""

from __future__ import annotations

import csv
import io
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any
from urllib.parse import urljoin, urlsplit

import requests

from .canon import sha256_hex
from .manifest import (
    Manifest,
    ManifestError,
    MissingRequiredKey,
    ParseFailure,
    ValidationReport,
    canonical_id,
    manifest_from_wire,
    manifest_to_wire,
    parse_manifest,
    validate_manifest,
)

DEFAULT_MAX_BODY = 1024 * 1024


class SeedListError(Exception):
    pass


class MissingUrlColumn(SeedListError):
    pass


class FetchError(Exception):
    code = "fetch-error"

    def __init__(self, message: str, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class FetchTimeout(FetchError):
    code = "timeout"


class TooLarge(FetchError):
    code = "too-large"


class TooManyRedirects(FetchError):
    code = "too-many-redirects"


class HttpStatusError(FetchError):
    def __init__(self, status: int):
        super().__init__(f"unexpected HTTP status {status}", code=f"http-{status}")
        self.status = status


class ConnectionFailed(FetchError):
    code = "connection-failed"


@dataclass(frozen=True)
class ManifestSource:
    url: str
    label: str | None = None


@dataclass(frozen=True)
class FetchPolicy:
    per_host_delay: float = 1.0
    request_timeout: float = 10.0
    max_body: int = DEFAULT_MAX_BODY
    max_redirects: int = 5
    parallelism: int = 8

    def __post_init__(self):
        for name in ("per_host_delay", "request_timeout", "max_body", "max_redirects"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class FetchResult:
    body: bytes
    final_url: str
    fetched_at: str
    elapsed: float


@dataclass(frozen=True)
class Provenance:
    fetched_from: str
    fetched_at: str
    content_hash: str

    def to_wire(self) -> dict[str, str]:
        return {
            "fetched_from": self.fetched_from,
            "fetched_at": self.fetched_at,
            "content_hash": self.content_hash,
        }


@dataclass(frozen=True)
class ProjectRecord:
    id: str
    manifest: Manifest
    provenance: Provenance
    validation: ValidationReport

    @property
    def valid(self) -> bool:
        return self.validation.valid

    def to_wire(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "manifest": manifest_to_wire(self.manifest),
            "provenance": self.provenance.to_wire(),
            "validation": self.validation.to_wire(),
        }

    @staticmethod
    def from_wire(data: dict[str, Any]) -> "ProjectRecord":
        prov = data["provenance"]
        return ProjectRecord(
            id=data["id"],
            manifest=manifest_from_wire(data["manifest"]),
            provenance=Provenance(
                prov["fetched_from"], prov["fetched_at"], prov["content_hash"]
            ),
            validation=ValidationReport.from_wire(data.get("validation", {})),
        )


@dataclass
class CrawlReport:
    attempted: int = 0
    succeeded: int = 0
    parse_failed: int = 0
    invalid: int = 0
    network_failed: int = 0
    deduplicated: int = 0
    failures: list[tuple[str, str]] = field(default_factory=list)

    def check_arithmetic(self) -> bool:
        return self.attempted == (
            self.succeeded + self.parse_failed + self.invalid + self.network_failed
        )

    def to_wire(self) -> dict[str, Any]:
        return {
            "attempted": self.attempted,
            "succeeded": self.succeeded,
            "parse_failed": self.parse_failed,
            "invalid": self.invalid,
            "network_failed": self.network_failed,
            "deduplicated": self.deduplicated,
            "failures": [[url, code] for url, code in self.failures],
        }


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def load_seed_list(text: str) -> tuple[list[ManifestSource], list[str]]:
    """Read a seed CSV; returns (sources, malformed-row diagnostics).

    The header must contain a `url` column; the first other column, when
    non-empty, becomes the source label.  Bad rows are reported, not fatal.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MissingUrlColumn("seed list is empty")
    columns = [c.strip().casefold() for c in header]
    if "url" not in columns:
        raise MissingUrlColumn("seed list has no 'url' column")
    url_idx = columns.index("url")
    label_idx = next((i for i in range(len(columns)) if i != url_idx), None)

    sources: list[ManifestSource] = []
    malformed: list[str] = []
    for n, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= url_idx:
            malformed.append(f"row {n}: missing url cell")
            continue
        url = row[url_idx].strip()
        parts = urlsplit(url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            malformed.append(f"row {n}: not an absolute http(s) URL: {url!r}")
            continue
        label = None
        if label_idx is not None and len(row) > label_idx and row[label_idx].strip():
            label = row[label_idx].strip()
        sources.append(ManifestSource(url=url, label=label))
    return sources, malformed


_LOOPBACK_HOSTS = ("localhost",)


def _offline_mode() -> bool:
    return os.environ.get("OKH_OFFLINE") == "1"


def _host_is_loopback(host: str) -> bool:
    return host in _LOOPBACK_HOSTS or host.startswith("127.") or host == "::1"


class HostThrottle:
    """Serializes requests per host and spaces them by a minimum delay.

    The lock for a host is held for the whole request, so two requests to
    one host never overlap; `trace` records (host, start) pairs for
    politeness assertions.
    """

    def __init__(self, delay: float):
        self.delay = delay
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self.trace: list[tuple[str, float]] = []

    def _lock_for(self, host: str) -> threading.Lock:
        with self._guard:
            if host not in self._locks:
                self._locks[host] = threading.Lock()
            return self._locks[host]

    def __enter__(self):  # pragma: no cover - context form unused
        raise TypeError("use throttle.slot(host)")

    class _Slot:
        def __init__(self, throttle: "HostThrottle", host: str):
            self._throttle = throttle
            self._host = host

        def __enter__(self):
            t = self._throttle
            lock = t._lock_for(self._host)
            lock.acquire()
            self._lock = lock
            last = t._last.get(self._host)
            if last is not None:
                wait = last + t.delay - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
            start = time.monotonic()
            t._last[self._host] = start
            with t._guard:
                t.trace.append((self._host, start))
            return self

        def __exit__(self, *exc):
            self._lock.release()
            return False

    def slot(self, host: str) -> "HostThrottle._Slot":
        return HostThrottle._Slot(self, host)


_thread_state = threading.local()


def _session() -> requests.Session:
    sess = getattr(_thread_state, "session", None)
    if sess is None:
        sess = requests.Session()
        sess.trust_env = False  # never pick up proxy env vars
        _thread_state.session = sess
    return sess


def _read_limited(resp: requests.Response, max_body: int) -> bytes:
    chunks: list[bytes] = []
    size = 0
    for chunk in resp.iter_content(chunk_size=65536):
        size += len(chunk)
        if size > max_body:
            raise TooLarge(f"body exceeds {max_body} bytes")
        chunks.append(chunk)
    return b"".join(chunks)


def fetch_manifest(
    src: ManifestSource,
    policy: FetchPolicy,
    throttle: HostThrottle | None = None,
) -> FetchResult:
    """Fetch one manifest, following at most max_redirects redirects and
    aborting oversized bodies.  Every hop honors the per-host throttle."""
    if throttle is None:
        throttle = HostThrottle(policy.per_host_delay)
    url = src.url
    started = time.monotonic()
    fetched_at = _utc_now()
    redirects = 0
    while True:
        parts = urlsplit(url)
        host = parts.hostname or ""
        if _offline_mode() and not _host_is_loopback(host):
            raise ConnectionFailed(f"offline mode forbids non-loopback host {host!r}")
        try:
            with throttle.slot(host):
                resp = _session().get(
                    url,
                    timeout=policy.request_timeout,
                    allow_redirects=False,
                    stream=True,
                )
                try:
                    if resp.is_redirect or resp.is_permanent_redirect:
                        redirects += 1
                        if redirects > policy.max_redirects:
                            raise TooManyRedirects(
                                f"more than {policy.max_redirects} redirects"
                            )
                        location = resp.headers.get("Location", "")
                        if not location:
                            raise ConnectionFailed("redirect without Location header")
                        url = urljoin(url, location)
                        continue
                    if not (200 <= resp.status_code < 300):
                        raise HttpStatusError(resp.status_code)
                    body = _read_limited(resp, policy.max_body)
                finally:
                    resp.close()
        except requests.Timeout as exc:
            raise FetchTimeout(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise ConnectionFailed(str(exc)) from exc
        return FetchResult(
            body=body,
            final_url=url,
            fetched_at=fetched_at,
            elapsed=time.monotonic() - started,
        )


def build_record(src_url: str, result: FetchResult) -> ProjectRecord:
    """Parse fetched bytes into a provenance-stamped record.

    Raises ParseFailure / MissingRequiredKey when the body is not a
    well-formed manifest."""
    try:
        text = result.body.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseFailure(f"not valid UTF-8: {exc}") from exc
    m = parse_manifest(text)
    return ProjectRecord(
        id=canonical_id(m),
        manifest=m,
        provenance=Provenance(
            fetched_from=src_url,
            fetched_at=result.fetched_at,
            content_hash=sha256_hex(result.body),
        ),
        validation=validate_manifest(m),
    )


def crawl(
    seeds: list[ManifestSource],
    policy: FetchPolicy | None = None,
    throttle: HostThrottle | None = None,
) -> tuple[list[ProjectRecord], CrawlReport]:
    """Fetch, parse, validate, and stamp every seed.

    Records with validation errors are kept but flagged invalid; fetch and
    parse failures land in the report.  Output is sorted by (id, source)
    regardless of completion order.  A caller-supplied throttle exposes
    the request trace for politeness checks."""
    if not seeds:
        raise ValueError("seed list must be non-empty")
    policy = policy or FetchPolicy()
    if throttle is None:
        throttle = HostThrottle(policy.per_host_delay)
    report = CrawlReport(attempted=len(seeds))
    records: list[ProjectRecord] = []
    lock = threading.Lock()

    def worker(src: ManifestSource) -> None:
        try:
            result = fetch_manifest(src, policy, throttle)
        except FetchError as exc:
            with lock:
                report.network_failed += 1
                report.failures.append((src.url, exc.code))
            return
        try:
            record = build_record(src.url, result)
        except MissingRequiredKey as exc:
            with lock:
                report.parse_failed += 1
                report.failures.append((src.url, f"missing-required-key:{exc.key}"))
            return
        except ManifestError:
            with lock:
                report.parse_failed += 1
                report.failures.append((src.url, "parse-failure"))
            return
        with lock:
            if record.valid:
                report.succeeded += 1
            else:
                report.invalid += 1
            records.append(record)

    with ThreadPoolExecutor(max_workers=policy.parallelism) as pool:
        list(pool.map(worker, seeds))

    records.sort(key=lambda r: (r.id, r.provenance.fetched_from))
    return records, report


def _version_key(version: str | None) -> tuple:
    """Natural ordering key: numeric segments compare as integers."""
    if not version:
        return ()
    import re

    parts = re.findall(r"\d+|\D+", version)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts)


def dedupe(records: list[ProjectRecord]) -> list[ProjectRecord]:
    """Collapse records sharing a canonical id.

    The winner has the greatest version under natural ordering, then the
    latest fetch time.  Idempotent; output sorted by id."""
    groups: dict[str, list[ProjectRecord]] = {}
    for record in records:
        groups.setdefault(record.id, []).append(record)
    winners: list[ProjectRecord] = []
    for record_id in sorted(groups):
        group = groups[record_id]
        winners.append(
            max(
                group,
                key=lambda r: (
                    _version_key(r.manifest.version),
                    r.provenance.fetched_at,
                    r.provenance.fetched_from,
                ),
            )
        )
    return winners
