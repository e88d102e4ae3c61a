"""HTTP service binding the registry, compliance checker, and review
workflow behind a versioned JSON API.

Every response body is exactly the wire serialization of the underlying
module operation's result; errors map to {code, message} bodies through a
total error table.  The index is an immutable snapshot: requests read one
reference for their whole lifetime, and reindexing swaps the reference
atomically.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any, Callable
from urllib.parse import parse_qs, unquote, urlsplit

from . import compliance, index as index_mod, review
from .canon import wire_json
from .crawler import FetchPolicy
from .manifest import (
    ManifestError,
    MissingRequiredKey,
    ParseFailure,
)
from . import miniyaml

API_PREFIX = "/api/v1"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    listen_address: str = "127.0.0.1"
    listen_port: int = 8080
    index_dir: str = "index"
    case_store: str = "cases"
    rulesets: tuple[str, ...] = ()
    static_assets: str | None = None
    fetch_policy: FetchPolicy = field(default_factory=FetchPolicy)


def load_config(path: str | Path) -> ServiceConfig:
    """Read a service config file (same markup subset as manifests)."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = miniyaml.parse(text)
    except miniyaml.MarkupError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def scalar(key: str, default: str | None = None) -> str | None:
        value = doc.get(key, default)
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{key}: expected a text value")
        return value

    port_text = scalar("listen-port", "8080")
    try:
        port = int(port_text)
    except ValueError:
        raise ConfigError(f"listen-port: not a number: {port_text!r}")
    if not 1 <= port <= 65535:
        raise ConfigError(f"listen-port: {port} outside [1, 65535]")

    rulesets = doc.get("rulesets", [])
    if isinstance(rulesets, str):
        rulesets = [rulesets]
    if not isinstance(rulesets, list) or any(not isinstance(r, str) for r in rulesets):
        raise ConfigError("rulesets: expected an inline list of paths")

    policy_kwargs: dict[str, Any] = {}
    for key, attr, cast in (
        ("per-host-delay", "per_host_delay", float),
        ("request-timeout", "request_timeout", float),
        ("max-body", "max_body", int),
        ("max-redirects", "max_redirects", int),
        ("parallelism", "parallelism", int),
    ):
        raw = scalar(key)
        if raw is not None:
            try:
                policy_kwargs[attr] = cast(raw)
            except ValueError:
                raise ConfigError(f"{key}: not a number: {raw!r}")

    config = ServiceConfig(
        listen_address=scalar("listen-address", "127.0.0.1"),
        listen_port=port,
        index_dir=scalar("index-dir", "index"),
        case_store=scalar("case-store", "cases"),
        rulesets=tuple(rulesets),
        static_assets=scalar("static-assets"),
        fetch_policy=FetchPolicy(**policy_kwargs),
    )
    if not Path(config.index_dir).is_dir():
        raise ConfigError(f"index-dir: not a readable directory: {config.index_dir}")
    for ruleset in config.rulesets:
        if not Path(ruleset).is_file():
            raise ConfigError(f"rulesets: not a readable file: {ruleset}")
    if config.static_assets is not None and not Path(config.static_assets).is_dir():
        raise ConfigError(f"static-assets: not a readable directory: {config.static_assets}")
    return config


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code


# Total mapping from module error types to HTTP status + stable code.
ERROR_MAP: tuple[tuple[type[Exception], int, str], ...] = (
    (ParseFailure, 400, "PARSE_FAILURE"),
    (MissingRequiredKey, 400, "MISSING_REQUIRED_KEY"),
    (ManifestError, 400, "MANIFEST_ERROR"),
    (compliance.RulesetParseError, 400, "RULESET_PARSE_ERROR"),
    (compliance.DuplicateCriterionId, 400, "DUPLICATE_CRITERION_ID"),
    (compliance.RightWithoutMandatoryCriterion, 400, "RIGHT_WITHOUT_MANDATORY_CRITERION"),
    (compliance.UnknownEvidenceClass, 400, "UNKNOWN_EVIDENCE_CLASS"),
    (index_mod.DuplicateId, 409, "DUPLICATE_ID"),
    (index_mod.UnknownId, 404, "UNKNOWN_ID"),
    (index_mod.CorruptIndex, 500, "CORRUPT_INDEX"),
    (review.SubjectInvalid, 400, "SUBJECT_INVALID"),
    (review.WrongState, 409, "WRONG_STATE"),
    (review.DuplicateReviewer, 409, "DUPLICATE_REVIEWER"),
    (review.ConflictOfInterest, 409, "CONFLICT_OF_INTEREST"),
    (review.NotAReviewer, 403, "NOT_A_REVIEWER"),
    (review.NotPermitted, 403, "NOT_PERMITTED"),
    (review.UnknownCriterion, 404, "UNKNOWN_CRITERION"),
    (review.UnknownIssue, 404, "UNKNOWN_ISSUE"),
    (review.MissingRationale, 400, "MISSING_RATIONALE"),
    (review.UnknownCase, 404, "UNKNOWN_CASE"),
    (review.UnknownAttestation, 404, "UNKNOWN_ATTESTATION"),
    # Base-class fallbacks keep the mapping total; subclasses match first.
    (compliance.ComplianceError, 400, "COMPLIANCE_ERROR"),
    (review.ReviewError, 409, "REVIEW_ERROR"),
    (index_mod.RegistryIndexError, 500, "INDEX_ERROR"),
    (ValueError, 400, "INVALID_ARGUMENT"),
)


def map_error(exc: Exception) -> tuple[int, str]:
    for klass, status, code in ERROR_MAP:
        if isinstance(exc, klass):
            return status, code
    return 500, "INTERNAL_ERROR"


@dataclass
class Request:
    method: str
    params: tuple[str, ...]
    query: dict[str, str]
    body: dict[str, Any]


class RegistryService:
    """Endpoint implementations over the module operations."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self._index_lock = threading.Lock()
        self._index = index_mod.load_index(config.index_dir)
        self.store = review.CaseStore(config.case_store)
        self.rulesets: dict[str, compliance.TsdcRuleset] = {}
        for path in config.rulesets:
            ruleset = compliance.load_tsdc(Path(path).read_text(encoding="utf-8"))
            self.rulesets[ruleset.ruleset_id] = ruleset
        if not self.rulesets:
            default = compliance.load_bundled_tsdc()
            self.rulesets[default.ruleset_id] = default

    # -- index snapshot --------------------------------------------------

    @property
    def index(self) -> index_mod.Index:
        with self._index_lock:
            return self._index

    def reindex(self) -> index_mod.Index:
        rebuilt = index_mod.load_index(self.config.index_dir)
        with self._index_lock:
            self._index = rebuilt
        return rebuilt

    # -- handlers ----------------------------------------------------------

    def handle_search(self, req: Request) -> Any:
        ix = self.index
        filters: dict[str, str] = {}
        if "stage" in req.query:
            filters["development_stage"] = req.query["stage"]
        if "license_class" in req.query:
            filters["license_class"] = req.query["license_class"]
        if "keyword" in req.query:
            filters["keyword"] = req.query["keyword"]
        try:
            limit = int(req.query.get("limit", "10"))
        except ValueError:
            raise ApiError(400, "INVALID_ARGUMENT", "limit must be an integer")
        hits = index_mod.search(ix, req.query.get("q", ""), filters or None, limit)
        return [h.to_wire() for h in hits]

    def handle_project(self, req: Request) -> Any:
        ix = self.index
        record_id = req.params[0]
        if record_id not in ix.records:
            raise index_mod.UnknownId(record_id)
        return ix.records[record_id].to_wire()

    def handle_related(self, req: Request) -> Any:
        ix = self.index
        try:
            depth = int(req.query.get("depth", "1"))
        except ValueError:
            raise ApiError(400, "INVALID_ARGUMENT", "depth must be an integer")
        kind = req.query.get("kind")
        if kind is not None and kind not in index_mod.EDGE_KINDS:
            raise ApiError(400, "INVALID_ARGUMENT", f"unknown edge kind {kind!r}")
        items = index_mod.related(ix, req.params[0], kind=kind, depth=depth)
        return [item.to_wire() for item in items]

    def _ruleset(self, name: str | None) -> compliance.TsdcRuleset:
        if name is None:
            name = next(iter(self.rulesets))
        if name not in self.rulesets:
            raise ApiError(404, "UNKNOWN_RULESET", f"no ruleset {name!r}")
        return self.rulesets[name]

    def handle_compliance(self, req: Request) -> Any:
        ix = self.index
        record_id = req.params[0]
        if record_id not in ix.records:
            raise index_mod.UnknownId(record_id)
        record = ix.records[record_id]
        ruleset = self._ruleset(req.query.get("ruleset"))
        group = req.query.get("recipient", "specialist")
        inventory = compliance.derive_inventory(record.manifest)
        report = compliance.assess_compliance(record.manifest, inventory, ruleset, group)
        return report.to_wire()

    def handle_stats(self, req: Request) -> Any:
        return index_mod.stats(self.index)

    def handle_reindex(self, req: Request) -> Any:
        return index_mod.stats(self.reindex())

    # -- reviews -----------------------------------------------------------

    def handle_open_review(self, req: Request) -> Any:
        body = req.body
        for key in ("project_id", "submitter", "editor"):
            if key not in body:
                raise ApiError(400, "INVALID_ARGUMENT", f"missing field {key!r}")
        ix = self.index
        project_id = body["project_id"]
        if project_id not in ix.records:
            raise index_mod.UnknownId(project_id)
        record = ix.records[project_id]
        ruleset = self._ruleset(body.get("ruleset_id"))
        subject = review.ReviewSubject(
            project_id=project_id,
            content_hash=body.get("content_hash", record.provenance.content_hash),
            ruleset_id=ruleset.ruleset_id,
        )
        case = review.open_case(
            subject,
            body["submitter"],
            body["editor"],
            tuple(c.criterion_id for c in ruleset.criteria),
            subject_valid=record.valid,
        )
        self.store.save_new_case(case)
        return case.to_wire()

    def handle_get_review(self, req: Request) -> Any:
        return self.store.load_case(req.params[0]).to_wire()

    def _mutate_case(self, case_id: str, fn: Callable[[review.ReviewCase], review.ReviewCase]):
        with self.store.lock_for(case_id):
            case = self.store.load_case(case_id)
            updated = fn(case)
            self.store.append_events(case_id, list(updated.events[len(case.events):]))
            return updated

    def _require(self, body: dict[str, Any], *keys: str) -> list[str]:
        values = []
        for key in keys:
            if key not in body:
                raise ApiError(400, "INVALID_ARGUMENT", f"missing field {key!r}")
            values.append(body[key])
        return values

    def handle_assign(self, req: Request) -> Any:
        (reviewer,) = self._require(req.body, "reviewer")
        return self._mutate_case(
            req.params[0], lambda c: review.assign_reviewer(c, reviewer)
        ).to_wire()

    def handle_post_issue(self, req: Request) -> Any:
        reviewer, criterion_id, text = self._require(
            req.body, "reviewer", "criterion_id", "text"
        )
        return self._mutate_case(
            req.params[0], lambda c: review.post_issue(c, reviewer, criterion_id, text)
        ).to_wire()

    def handle_resolve_issue(self, req: Request) -> Any:
        actor, resolution = self._require(req.body, "actor", "resolution")
        case_id, issue_id = req.params
        return self._mutate_case(
            case_id, lambda c: review.resolve_issue(c, actor, issue_id, resolution)
        ).to_wire()

    def handle_verdict(self, req: Request) -> Any:
        reviewer, verdict = self._require(req.body, "reviewer", "verdict")
        return self._mutate_case(
            req.params[0], lambda c: review.reviewer_verdict(c, reviewer, verdict)
        ).to_wire()

    def handle_request_changes(self, req: Request) -> Any:
        (editor,) = self._require(req.body, "editor")
        return self._mutate_case(
            req.params[0], lambda c: review.request_revisions(c, editor)
        ).to_wire()

    def handle_resubmit(self, req: Request) -> Any:
        (submitter,) = self._require(req.body, "submitter")
        return self._mutate_case(
            req.params[0], lambda c: review.resubmit(c, submitter)
        ).to_wire()

    def handle_decide(self, req: Request) -> Any:
        (editor,) = self._require(req.body, "editor")
        rationale = req.body.get("rationale", "")
        return self._mutate_case(
            req.params[0], lambda c: review.decide(c, editor, rationale)
        ).to_wire()

    def handle_publish(self, req: Request) -> Any:
        case_id = req.params[0]
        with self.store.lock_for(case_id):
            case = self.store.load_case(case_id)
            published, record = review.publish_attestation(case)
            self.store.append_events(case_id, list(published.events[len(case.events):]))
            self.store.append_attestation(record)
        return record.to_wire()

    def handle_attestation(self, req: Request) -> Any:
        return self.store.load_attestation(req.params[0])

    def handle_transitions(self, req: Request) -> Any:
        return review.transition_table()


ROUTES: tuple[tuple[str, str, str], ...] = (
    ("GET", r"/search", "handle_search"),
    ("GET", r"/projects/([^/]+)", "handle_project"),
    ("GET", r"/projects/([^/]+)/related", "handle_related"),
    ("GET", r"/projects/([^/]+)/compliance", "handle_compliance"),
    ("GET", r"/stats", "handle_stats"),
    ("POST", r"/reindex", "handle_reindex"),
    ("POST", r"/reviews", "handle_open_review"),
    ("GET", r"/reviews/transitions", "handle_transitions"),
    ("GET", r"/reviews/([^/]+)", "handle_get_review"),
    ("POST", r"/reviews/([^/]+)/assign", "handle_assign"),
    ("POST", r"/reviews/([^/]+)/issues", "handle_post_issue"),
    ("POST", r"/reviews/([^/]+)/issues/([^/]+)/resolve", "handle_resolve_issue"),
    ("POST", r"/reviews/([^/]+)/verdicts", "handle_verdict"),
    ("POST", r"/reviews/([^/]+)/request-changes", "handle_request_changes"),
    ("POST", r"/reviews/([^/]+)/resubmit", "handle_resubmit"),
    ("POST", r"/reviews/([^/]+)/decide", "handle_decide"),
    ("POST", r"/reviews/([^/]+)/publish", "handle_publish"),
    ("GET", r"/attestations/([^/]+)", "handle_attestation"),
)

_COMPILED = tuple(
    (method, re.compile(f"^{re.escape(API_PREFIX)}{pattern}$"), name)
    for method, pattern, name in ROUTES
)

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".ico": "image/x-icon",
}


def dispatch(service: RegistryService, method: str, path: str, body_bytes: bytes) -> tuple[int, bytes]:
    """Route one request; returns (status, response-body bytes)."""
    parts = urlsplit(path)
    query = {k: v[0] for k, v in parse_qs(parts.query).items()}
    for route_method, pattern, handler_name in _COMPILED:
        match = pattern.match(parts.path)
        if not match:
            continue
        if route_method != method:
            continue
        try:
            body: dict[str, Any] = {}
            if body_bytes:
                try:
                    body = json.loads(body_bytes.decode("utf-8"))
                except (ValueError, UnicodeDecodeError):
                    raise ApiError(400, "INVALID_ARGUMENT", "request body is not JSON")
            params = tuple(unquote(g) for g in match.groups())
            request = Request(method=method, params=params, query=query, body=body)
            result = getattr(service, handler_name)(request)
            return 200, wire_json(result).encode("utf-8")
        except ApiError as exc:
            return exc.status, wire_json({"code": exc.code, "message": str(exc)}).encode("utf-8")
        except Exception as exc:  # noqa: BLE001 - mapped centrally
            status, code = map_error(exc)
            return status, wire_json({"code": code, "message": str(exc)}).encode("utf-8")
    if parts.path.startswith(API_PREFIX):
        return 404, wire_json({"code": "UNKNOWN_ENDPOINT", "message": parts.path}).encode("utf-8")
    return 404, wire_json({"code": "NOT_FOUND", "message": parts.path}).encode("utf-8")


def make_server(config: ServiceConfig) -> tuple[ThreadingHTTPServer, RegistryService]:
    service = RegistryService(config)
    static_root = Path(config.static_assets) if config.static_assets else None

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def _serve_static(self) -> None:
            assert static_root is not None
            rel = urlsplit(self.path).path.lstrip("/") or "index.html"
            candidate = (static_root / rel).resolve()
            if not str(candidate).startswith(str(static_root.resolve())) or not candidate.is_file():
                self.send_response(404)
                self.end_headers()
                return
            body = candidate.read_bytes()
            self.send_response(200)
            content_type = _STATIC_TYPES.get(candidate.suffix, "application/octet-stream")
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _handle(self, method: str) -> None:
            path = self.path
            if not urlsplit(path).path.startswith(API_PREFIX) and method == "GET" and static_root:
                self._serve_static()
                return
            length = int(self.headers.get("Content-Length") or 0)
            body = self.rfile.read(length) if length else b""
            status, payload = dispatch(service, method, path, body)
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(payload)

        def do_GET(self):
            self._handle("GET")

        def do_POST(self):
            self._handle("POST")

    httpd = ThreadingHTTPServer((config.listen_address, config.listen_port), Handler)
    return httpd, service


def serve(config: ServiceConfig) -> None:
    """Run the HTTP service until interrupted."""
    httpd, _ = make_server(config)
    address, port = httpd.server_address[:2]
    print(f"serving on http://{address}:{port}{API_PREFIX}")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
