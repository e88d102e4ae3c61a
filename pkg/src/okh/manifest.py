"""Open Know-How manifest data model.

A manifest is a small metadata file that lives next to (or points at) a
hardware project's documentation.  This module owns the fixed key map,
parsing from the restricted markup, semantic validation, the canonical
byte form used for hashing and diffing, and the canonical project
identity used to deduplicate the registry.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Any
from urllib.parse import urlsplit

from . import miniyaml

MAX_MANIFEST_BYTES = 1024 * 1024

# Canonical key order; also the serialization order.
KEY_ORDER = (
    "okhv",
    "title",
    "description",
    "contact",
    "license",
    "documentation-language",
    "documentation-home",
    "bom",
    "project-homepage",
    "intended-use",
    "keywords",
    "development-stage",
    "health-and-safety",
    "quality-instructions",
    "maintenance-instructions",
    "version",
    "variant-of",
    "derivative-of",
)

CONTACT_KEY_ORDER = ("name", "email", "affiliation")

# Required keys, in canonical order; the first absent one is reported.
REQUIRED_KEYS = ("okhv", "title", "contact.name", "license", "documentation-home")

DEVELOPMENT_STAGES = ("idea", "prototype", "product")

_SCALAR_KEYS = frozenset(KEY_ORDER) - {"contact", "keywords"}

# Keys whose values must be absolute http(s) URLs when present.
_URL_KEYS = (
    "documentation-home",
    "bom",
    "project-homepage",
    "health-and-safety",
    "quality-instructions",
    "maintenance-instructions",
    "variant-of",
    "derivative-of",
)


class ManifestError(Exception):
    pass


class ParseFailure(ManifestError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column


class MissingRequiredKey(ManifestError):
    def __init__(self, key: str):
        super().__init__(f"missing required key '{key}'")
        self.key = key


@dataclass(frozen=True)
class ContactInfo:
    name: str
    email: str | None = None
    affiliation: str | None = None
    # Unrecognized contact subkeys, preserved for round-tripping.
    extra: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Manifest:
    okhv: str
    title: str
    contact: ContactInfo
    license: str
    documentation_home: str | None
    description: str | None = None
    documentation_language: str | None = None
    bom: str | None = None
    project_homepage: str | None = None
    intended_use: str | None = None
    keywords: tuple[str, ...] | None = None
    development_stage: str | None = None
    health_and_safety: str | None = None
    quality_instructions: str | None = None
    maintenance_instructions: str | None = None
    version: str | None = None
    variant_of: str | None = None
    derivative_of: str | None = None
    # Unrecognized top-level keys in document order, preserved verbatim.
    unknown: tuple[tuple[str, Any], ...] = ()


SEVERITY_ERROR = "error"
SEVERITY_WARNING = "warning"


@dataclass(frozen=True)
class ValidationIssue:
    severity: str
    field: str
    code: str
    message: str

    def to_wire(self) -> dict[str, str]:
        return {
            "severity": self.severity,
            "field": self.field,
            "code": self.code,
            "message": self.message,
        }


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def valid(self) -> bool:
        return not any(i.severity == SEVERITY_ERROR for i in self.issues)

    def errors(self) -> tuple[ValidationIssue, ...]:
        return tuple(i for i in self.issues if i.severity == SEVERITY_ERROR)

    def warnings(self) -> tuple[ValidationIssue, ...]:
        return tuple(i for i in self.issues if i.severity == SEVERITY_WARNING)

    def to_wire(self) -> dict[str, Any]:
        return {"issues": [i.to_wire() for i in self.issues]}

    @staticmethod
    def from_wire(data: dict[str, Any]) -> "ValidationReport":
        return ValidationReport(
            tuple(
                ValidationIssue(i["severity"], i["field"], i["code"], i["message"])
                for i in data.get("issues", [])
            )
        )


def _field_for_key(key: str) -> str:
    return key.replace("-", "_")


def parse_manifest(text: str) -> Manifest:
    """Parse manifest text into a Manifest.

    Shape errors (malformed markup, wrong value kinds, oversized input)
    raise ParseFailure; an absent required key raises MissingRequiredKey.
    Semantic problems are left to `validate_manifest`.
    """
    if len(text.encode("utf-8")) > MAX_MANIFEST_BYTES:
        raise ParseFailure(f"manifest exceeds {MAX_MANIFEST_BYTES} bytes")
    try:
        doc = miniyaml.parse(text)
    except miniyaml.MarkupError as exc:
        raise ParseFailure(str(exc), exc.line, exc.column) from exc

    contact_doc = doc.get("contact")
    for req in REQUIRED_KEYS:
        if req == "contact.name":
            if not isinstance(contact_doc, dict) or "name" not in contact_doc:
                raise MissingRequiredKey("contact.name")
        elif req not in doc:
            raise MissingRequiredKey(req)

    if not isinstance(contact_doc, dict):
        raise ParseFailure("contact: expected a nested mapping")
    extra = tuple(
        (k, v) for k, v in contact_doc.items() if k not in CONTACT_KEY_ORDER
    )
    contact = ContactInfo(
        name=contact_doc["name"],
        email=contact_doc.get("email"),
        affiliation=contact_doc.get("affiliation"),
        extra=extra,
    )

    fields: dict[str, Any] = {"contact": contact}
    unknown: list[tuple[str, Any]] = []
    for key, value in doc.items():
        if key == "contact":
            continue
        if key == "keywords":
            if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
                raise ParseFailure("keywords: expected an inline list of text")
            fields["keywords"] = tuple(value)
        elif key in _SCALAR_KEYS:
            if not isinstance(value, str):
                raise ParseFailure(f"{key}: expected a text value")
            fields[_field_for_key(key)] = value
        else:
            unknown.append((key, value))
    fields["unknown"] = tuple(unknown)
    return Manifest(**fields)


def serialize_manifest(m: Manifest) -> str:
    """Emit the canonical manifest text: fixed key order, nested contact
    block, inline lists.  Byte-deterministic for equal manifests."""
    doc: miniyaml.Document = {}
    for key in KEY_ORDER:
        if key == "contact":
            block: dict[str, str] = {"name": m.contact.name}
            if m.contact.email is not None:
                block["email"] = m.contact.email
            if m.contact.affiliation is not None:
                block["affiliation"] = m.contact.affiliation
            for k, v in m.contact.extra:
                block[k] = v
            doc["contact"] = block
        elif key == "keywords":
            if m.keywords is not None:
                doc["keywords"] = list(m.keywords)
        else:
            value = getattr(m, _field_for_key(key))
            if value is not None:
                doc[key] = value
    for key, value in m.unknown:
        doc[key] = value
    return miniyaml.emit(doc)


def manifest_to_wire(m: Manifest) -> dict[str, Any]:
    """Manifest as a JSON-ready dict keyed by document key names."""
    out: dict[str, Any] = {}
    for key in KEY_ORDER:
        if key == "contact":
            block: dict[str, str] = {"name": m.contact.name}
            if m.contact.email is not None:
                block["email"] = m.contact.email
            if m.contact.affiliation is not None:
                block["affiliation"] = m.contact.affiliation
            for k, v in m.contact.extra:
                block[k] = v
            out["contact"] = block
        elif key == "keywords":
            if m.keywords is not None:
                out["keywords"] = list(m.keywords)
        else:
            value = getattr(m, _field_for_key(key))
            if value is not None:
                out[key] = value
    for key, value in m.unknown:
        out[key] = value
    return out


def manifest_from_wire(data: dict[str, Any]) -> Manifest:
    contact_doc = data.get("contact", {})
    extra = tuple((k, v) for k, v in contact_doc.items() if k not in CONTACT_KEY_ORDER)
    contact = ContactInfo(
        name=contact_doc.get("name", ""),
        email=contact_doc.get("email"),
        affiliation=contact_doc.get("affiliation"),
        extra=extra,
    )
    fields: dict[str, Any] = {"contact": contact}
    unknown: list[tuple[str, Any]] = []
    for key, value in data.items():
        if key == "contact":
            continue
        if key == "keywords":
            fields["keywords"] = tuple(value)
        elif key in _SCALAR_KEYS:
            fields[_field_for_key(key)] = value
        else:
            unknown.append((key, value))
    fields["unknown"] = tuple(unknown)
    return Manifest(**fields)


def _is_absolute_http_url(value: str) -> bool:
    try:
        parts = urlsplit(value)
    except ValueError:
        return False
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def normalize_url(url: str) -> str:
    """Canonical URL form: lowercased scheme/host, default port dropped,
    trailing slashes and fragment stripped, query preserved."""
    try:
        parts = urlsplit(url)
    except ValueError:
        return url
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").lower()
    port = parts.port
    if port is not None and not (
        (scheme == "http" and port == 80) or (scheme == "https" and port == 443)
    ):
        host = f"{host}:{port}"
    path = parts.path.rstrip("/")
    normalized = f"{scheme}://{host}{path}" if scheme else f"{host}{path}"
    if parts.query:
        normalized += f"?{parts.query}"
    return normalized


def canonical_id(m: Manifest) -> str:
    """Stable identity for deduplication: the normalized documentation
    URL, or a content hash when no documentation link exists."""
    if m.documentation_home:
        return normalize_url(m.documentation_home)
    seed = f"{m.title.strip()}\n{m.contact.name}".encode("utf-8")
    return "sha256:" + hashlib.sha256(seed).hexdigest()[:32]


# Field order used to sort validation issues (document order, then code).
_FIELD_RANK = {key: n for n, key in enumerate(KEY_ORDER)}
_FIELD_RANK["contact.name"] = _FIELD_RANK["contact"]
_FIELD_RANK["contact.email"] = _FIELD_RANK["contact"]


def _issue_rank(issue: ValidationIssue) -> tuple[int, str]:
    base = issue.field.split(".", 1)[0]
    return (_FIELD_RANK.get(base, len(KEY_ORDER)), issue.code)


def validate_manifest(m: Manifest) -> ValidationReport:
    """Check every manifest invariant; diagnostics are data, not failures.

    Each violated invariant yields exactly one error issue; unrecognized
    keys yield warnings.  A conformant manifest yields an empty report.
    """
    issues: list[ValidationIssue] = []

    def err(field: str, code: str, message: str) -> None:
        issues.append(ValidationIssue(SEVERITY_ERROR, field, code, message))

    def warn(field: str, code: str, message: str) -> None:
        issues.append(ValidationIssue(SEVERITY_WARNING, field, code, message))

    if not m.title.strip():
        err("title", "EMPTY_TITLE", "title must be non-empty")

    if not m.contact.name.strip():
        err("contact.name", "EMPTY_CONTACT_NAME", "contact name must be non-empty")
    if m.contact.email is not None and m.contact.email.count("@") != 1:
        err("contact.email", "EMAIL_FORMAT", "email must contain exactly one '@'")
    for k, _ in m.contact.extra:
        warn(f"contact.{k}", "UNKNOWN_KEY", f"unrecognized contact key '{k}'")

    for key in _URL_KEYS:
        value = getattr(m, _field_for_key(key))
        if key == "documentation-home":
            if value is None or not _is_absolute_http_url(value):
                err(key, "INVALID_URL", "must be an absolute http(s) URL")
        elif value is not None and not _is_absolute_http_url(value):
            err(key, "INVALID_URL", "must be an absolute http(s) URL")

    if m.keywords is not None:
        seen: set[str] = set()
        for kw in m.keywords:
            if not kw.strip():
                err("keywords", "EMPTY_KEYWORD", "keywords must be non-empty")
                continue
            folded = kw.casefold()
            if folded in seen:
                err("keywords", "DUPLICATE_KEYWORD", f"duplicate keyword '{kw}'")
            seen.add(folded)

    if m.development_stage is not None and m.development_stage not in DEVELOPMENT_STAGES:
        err(
            "development-stage",
            "ENUM_VALUE",
            f"must be one of {', '.join(DEVELOPMENT_STAGES)}",
        )

    if m.documentation_home:
        home = normalize_url(m.documentation_home)
        for key in ("variant-of", "derivative-of"):
            value = getattr(m, _field_for_key(key))
            if value is not None and normalize_url(value) == home:
                err(key, "SELF_REFERENCE", "must differ from documentation-home")

    for key, _ in m.unknown:
        warn(key, "UNKNOWN_KEY", f"unrecognized key '{key}'")

    issues.sort(key=_issue_rank)
    return ValidationReport(tuple(issues))
