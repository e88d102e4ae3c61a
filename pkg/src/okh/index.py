"""Searchable registry over crawled project records.

Builds an inverted index with TF-IDF ranking over manifest text fields and
a typed relation graph (variant-of / derivative-of / version links).  An
Index is immutable once built; rebuilds replace it wholesale.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .canon import wire_json
from .compliance import check_license_openness
from .crawler import ProjectRecord
from .manifest import normalize_url

FORMAT_VERSION = 1

# Indexed fields and their search weights.
FIELD_WEIGHTS = {"title": 3.0, "keywords": 2.0, "intended_use": 2.0, "description": 1.0}
FIELDS = ("title", "description", "keywords", "intended_use")

EDGE_KINDS = ("version_of", "variant_of", "derivative_of")

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


class RegistryIndexError(Exception):
    pass


class DuplicateId(RegistryIndexError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id '{record_id}'")
        self.record_id = record_id


class UnknownId(RegistryIndexError):
    def __init__(self, record_id: str):
        super().__init__(f"unknown project id '{record_id}'")
        self.record_id = record_id


class CorruptIndex(RegistryIndexError):
    def __init__(self, filename: str, line: int, message: str):
        super().__init__(f"{filename}:{line}: {message}")
        self.filename = filename
        self.line = line


@dataclass(frozen=True)
class RelationEdge:
    src: str  # always a resolved record id
    dst: str  # resolved record id, or the target URL when unresolved
    kind: str
    resolved: bool

    def to_wire(self) -> dict[str, Any]:
        return {"from": self.src, "to": self.dst, "kind": self.kind, "resolved": self.resolved}

    @staticmethod
    def from_wire(data: dict[str, Any]) -> "RelationEdge":
        return RelationEdge(data["from"], data["to"], data["kind"], data["resolved"])


@dataclass(frozen=True)
class SearchHit:
    id: str
    score: float
    matched_fields: tuple[str, ...]
    snippet: str

    def to_wire(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "score": self.score,
            "matched_fields": list(self.matched_fields),
            "snippet": self.snippet,
        }


@dataclass(frozen=True)
class RelatedItem:
    ref: str
    kind: str
    distance: int
    resolved: bool

    def to_wire(self) -> dict[str, Any]:
        return {
            "ref": self.ref,
            "kind": self.kind,
            "distance": self.distance,
            "resolved": self.resolved,
        }


@dataclass(frozen=True)
class Index:
    records: dict[str, ProjectRecord]  # insertion order: sorted by id
    postings: dict[str, tuple[tuple[str, str, int], ...]]
    graph: tuple[RelationEdge, ...]
    built_at: str
    doc_count: int


def tokenize(text: str) -> list[str]:
    """Case-fold, split on non-alphanumerics, drop tokens shorter than 2."""
    return [t for t in _TOKEN.findall(text.casefold()) if len(t) >= 2]


def field_text(record: ProjectRecord, field: str) -> str:
    if field == "keywords":
        return " ".join(record.manifest.keywords or ())
    return getattr(record.manifest, field) or ""


def _build_postings(
    records: Iterable[ProjectRecord],
) -> dict[str, tuple[tuple[str, str, int], ...]]:
    acc: dict[str, list[tuple[str, str, int]]] = {}
    for record in records:
        for field in FIELDS:
            counts: dict[str, int] = {}
            for token in tokenize(field_text(record, field)):
                counts[token] = counts.get(token, 0) + 1
            for token, tf in counts.items():
                acc.setdefault(token, []).append((record.id, field, tf))
    return {token: tuple(entries) for token, entries in sorted(acc.items())}


def _version_base(record: ProjectRecord) -> str | None:
    """Id with a trailing version-ish path segment stripped, or None when
    the documentation URL does not encode the record's version."""
    version = record.manifest.version
    if not version:
        return None
    record_id = record.id
    if "/" not in record_id:
        return None
    head, _, seg = record_id.rpartition("/")
    seg_fold = seg.casefold()
    version_fold = version.casefold()
    if seg_fold == version_fold or seg_fold == f"v{version_fold}":
        return head
    return None


def _natural_version_key(version: str | None) -> tuple:
    if not version:
        return ()
    parts = re.findall(r"\d+|\D+", version)
    return tuple((0, int(p)) if p.isdigit() else (1, p) for p in parts)


def _build_edges(records: list[ProjectRecord]) -> tuple[RelationEdge, ...]:
    by_id = {r.id: r for r in records}
    edges: list[RelationEdge] = []
    for record in records:
        for attr, kind in (("variant_of", "variant_of"), ("derivative_of", "derivative_of")):
            target = getattr(record.manifest, attr)
            if not target:
                continue
            resolved = normalize_url(target)
            if resolved in by_id:
                if resolved == record.id:
                    continue  # self-link: bad metadata, not a graph edge
                edges.append(RelationEdge(record.id, resolved, kind, True))
            else:
                edges.append(RelationEdge(record.id, target, kind, False))

    groups: dict[str, list[ProjectRecord]] = {}
    for record in records:
        base = _version_base(record)
        if base is not None:
            groups.setdefault(base, []).append(record)
    for base in sorted(groups):
        members = sorted(groups[base], key=lambda r: r.id)
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                if a.manifest.version == b.manifest.version:
                    continue
                newer, older = sorted(
                    (a, b),
                    key=lambda r: _natural_version_key(r.manifest.version),
                    reverse=True,
                )
                edges.append(RelationEdge(newer.id, older.id, "version_of", True))
    return tuple(edges)


def build_index(records: list[ProjectRecord]) -> Index:
    """Index a deduplicated record list; raises DuplicateId otherwise."""
    seen: set[str] = set()
    for record in records:
        if record.id in seen:
            raise DuplicateId(record.id)
        seen.add(record.id)
    ordered = sorted(records, key=lambda r: r.id)
    return Index(
        records={r.id: r for r in ordered},
        postings=_build_postings(ordered),
        graph=_build_edges(ordered),
        built_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ"),
        doc_count=len(ordered),
    )


# --- search ---------------------------------------------------------------


def idf(index: Index, token: str) -> float:
    df = len({rid for rid, _, _ in index.postings.get(token, ())})
    return math.log((1 + index.doc_count) / (1 + df)) + 1.0


def _passes_filters(record: ProjectRecord, filters: dict[str, str] | None) -> bool:
    if not filters:
        return True
    stage = filters.get("development_stage")
    if stage is not None and record.manifest.development_stage != stage:
        return False
    license_class = filters.get("license_class")
    if license_class is not None:
        if check_license_openness(record.manifest.license) != license_class:
            return False
    keyword = filters.get("keyword")
    if keyword is not None:
        keywords = {k.casefold() for k in (record.manifest.keywords or ())}
        if keyword.casefold() not in keywords:
            return False
    return True


def _snippet(record: ProjectRecord) -> str:
    description = record.manifest.description
    if description:
        return description[:160]
    return record.manifest.title


def search(
    index: Index,
    query: str,
    filters: dict[str, str] | None = None,
    limit: int = 10,
) -> list[SearchHit]:
    """TF-IDF ranked search.

    score(d) = sum over query tokens t and fields f of
               weight(f) * tf(t, d, f) * idf(t)
    with idf(t) = ln((1 + N) / (1 + df(t))) + 1.  Zero-score documents are
    excluded; ties break on ascending id.  Filters are conjunctive
    pre-score predicates.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    tokens = tokenize(query)
    if not tokens:
        return []
    allowed = {
        rid for rid, record in index.records.items() if _passes_filters(record, filters)
    }
    scores: dict[str, float] = {}
    matched: dict[str, set[str]] = {}
    for token in set(tokens):
        weight_idf = idf(index, token) * tokens.count(token)
        for rid, field, tf in index.postings.get(token, ()):
            if rid not in allowed:
                continue
            scores[rid] = scores.get(rid, 0.0) + FIELD_WEIGHTS[field] * tf * weight_idf
            matched.setdefault(rid, set()).add(field)
    hits = [
        SearchHit(
            id=rid,
            score=score,
            matched_fields=tuple(f for f in FIELDS if f in matched[rid]),
            snippet=_snippet(index.records[rid]),
        )
        for rid, score in scores.items()
        if score > 0.0
    ]
    hits.sort(key=lambda h: (-h.score, h.id))
    return hits[:limit]


# --- graph ----------------------------------------------------------------


def _adjacency(
    index: Index, kind_filter: str | None
) -> dict[str, list[tuple[str, str]]]:
    """Undirected adjacency over resolved edges: node -> [(neighbor, kind)]."""
    adj: dict[str, list[tuple[str, str]]] = {}
    for edge in index.graph:
        if not edge.resolved:
            continue
        if kind_filter is not None and edge.kind != kind_filter:
            continue
        adj.setdefault(edge.src, []).append((edge.dst, edge.kind))
        adj.setdefault(edge.dst, []).append((edge.src, edge.kind))
    return adj


def related(
    index: Index,
    record_id: str,
    kind: str | None = None,
    depth: int = 1,
) -> list[RelatedItem]:
    """Breadth-first closure over resolved edges in both directions.

    The reported kind for a node at distance d is the kind of the edge
    linking it to its (d-1)-level neighbor minimizing (neighbor id, kind).
    Unresolved targets appear at distance 1 only.
    """
    if record_id not in index.records:
        raise UnknownId(record_id)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    adj = _adjacency(index, kind)
    dist: dict[str, int] = {record_id: 0}
    frontier = [record_id]
    via: dict[str, tuple[str, str]] = {}
    for d in range(1, depth + 1):
        next_frontier: list[str] = []
        for node in sorted(frontier):
            for neighbor, edge_kind in sorted(adj.get(node, [])):
                if neighbor not in dist:
                    dist[neighbor] = d
                    via[neighbor] = (node, edge_kind)
                    next_frontier.append(neighbor)
                elif dist[neighbor] == d and (node, edge_kind) < via[neighbor]:
                    via[neighbor] = (node, edge_kind)
        frontier = next_frontier
        if not frontier:
            break

    items = [
        RelatedItem(ref=node, kind=via[node][1], distance=d, resolved=True)
        for node, d in dist.items()
        if node != record_id
    ]
    for edge in index.graph:
        if edge.resolved or edge.src != record_id:
            continue
        if kind is not None and edge.kind != kind:
            continue
        items.append(RelatedItem(ref=edge.dst, kind=edge.kind, distance=1, resolved=False))
    items.sort(key=lambda it: (it.distance, it.ref))
    return items


def detect_cycles(index: Index) -> list[list[str]]:
    """Every elementary cycle among resolved derivation edges
    (variant-of and derivative-of), reported once, rotated to start at its
    smallest id.  Empty for a DAG."""
    adj: dict[str, set[str]] = {}
    for edge in index.graph:
        if edge.resolved and edge.kind in ("variant_of", "derivative_of"):
            adj.setdefault(edge.src, set()).add(edge.dst)
    nodes = sorted(set(adj) | {d for ds in adj.values() for d in ds})
    cycles: list[list[str]] = []

    def dfs(start: str, node: str, path: list[str], on_path: set[str]) -> None:
        for nxt in sorted(adj.get(node, ())):
            if nxt == start:
                cycles.append(list(path))
            elif nxt > start and nxt not in on_path:
                path.append(nxt)
                on_path.add(nxt)
                dfs(start, nxt, path, on_path)
                on_path.remove(nxt)
                path.pop()

    # Restricting the search to nodes >= start yields each elementary
    # cycle exactly once, anchored at its smallest node.
    for start in nodes:
        dfs(start, start, [start], {start})
    cycles.sort()
    return cycles


# --- stats ----------------------------------------------------------------


def stats(index: Index) -> dict[str, Any]:
    edge_counts = {kind: 0 for kind in EDGE_KINDS}
    for edge in index.graph:
        edge_counts[edge.kind] += 1
    license_hist: dict[str, int] = {}
    stage_hist: dict[str, int] = {}
    invalid = 0
    for record in index.records.values():
        if not record.valid:
            invalid += 1
        cls = check_license_openness(record.manifest.license)
        license_hist[cls] = license_hist.get(cls, 0) + 1
        stage = record.manifest.development_stage
        if stage is not None:
            stage_hist[stage] = stage_hist.get(stage, 0) + 1
    return {
        "doc_count": index.doc_count,
        "edges": edge_counts,
        "invalid_count": invalid,
        "license_classes": dict(sorted(license_hist.items())),
        "development_stages": dict(sorted(stage_hist.items())),
    }


# --- persistence ----------------------------------------------------------


def save_index(index: Index, path: str | Path) -> None:
    """Write meta.json, records.ndjson (by id), and edges.ndjson."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "format-version": FORMAT_VERSION,
        "built_at": index.built_at,
        "doc_count": index.doc_count,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    with (out / "records.ndjson").open("w", encoding="utf-8") as fh:
        for record in index.records.values():
            fh.write(wire_json(record.to_wire()) + "\n")
    with (out / "edges.ndjson").open("w", encoding="utf-8") as fh:
        for edge in index.graph:
            fh.write(wire_json(edge.to_wire()) + "\n")


def _read_ndjson(path: Path) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    with path.open("r", encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise CorruptIndex(path.name, n, f"bad JSON: {exc.msg}") from exc
    return rows


def load_index(path: str | Path) -> Index:
    """Load a saved index; postings are rebuilt, not stored."""
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise CorruptIndex("meta.json", 0, "missing")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptIndex("meta.json", exc.lineno, f"bad JSON: {exc.msg}") from exc
    if meta.get("format-version") != FORMAT_VERSION:
        raise CorruptIndex("meta.json", 1, f"unsupported format version {meta.get('format-version')!r}")

    records: list[ProjectRecord] = []
    for n, row in enumerate(_read_ndjson(root / "records.ndjson"), start=1):
        try:
            records.append(ProjectRecord.from_wire(row))
        except (KeyError, TypeError) as exc:
            raise CorruptIndex("records.ndjson", n, f"bad record: {exc}") from exc
    if len(records) != meta.get("doc_count"):
        raise CorruptIndex(
            "records.ndjson",
            len(records),
            f"doc_count mismatch: meta says {meta.get('doc_count')}, file has {len(records)}",
        )
    edges = []
    for n, row in enumerate(_read_ndjson(root / "edges.ndjson"), start=1):
        try:
            edges.append(RelationEdge.from_wire(row))
        except (KeyError, TypeError) as exc:
            raise CorruptIndex("edges.ndjson", n, f"bad edge: {exc}") from exc

    ordered = sorted(records, key=lambda r: r.id)
    return Index(
        records={r.id: r for r in ordered},
        postings=_build_postings(ordered),
        graph=tuple(edges),
        built_at=meta["built_at"],
        doc_count=len(ordered),
    )
