#!/usr/bin/env python3
"""Serve the fixture corpus behind the HTTP API for UI end-to-end tests.

Builds an index directly from tests/fixtures/corpus (no crawling), starts
the service on a free loopback port with the frontend as static assets,
prints `PORT <n>` on stdout, and serves until killed.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from okh.canon import sha256_hex  # noqa: E402
from okh.crawler import ProjectRecord, Provenance, dedupe  # noqa: E402
from okh.index import build_index, save_index  # noqa: E402
from okh.manifest import ManifestError, canonical_id, parse_manifest, validate_manifest  # noqa: E402
from okh.service import ServiceConfig, make_server  # noqa: E402


def corpus_records() -> list[ProjectRecord]:
    records = []
    for path in sorted((ROOT / "tests" / "fixtures" / "corpus").glob("*.okh")):
        data = path.read_bytes()
        try:
            manifest = parse_manifest(data.decode("utf-8"))
        except ManifestError:
            continue
        records.append(
            ProjectRecord(
                id=canonical_id(manifest),
                manifest=manifest,
                provenance=Provenance(
                    fetched_from=f"file:///{path.name}",
                    fetched_at="2026-01-01T00:00:00.000000Z",
                    content_hash=sha256_hex(data),
                ),
                validation=validate_manifest(manifest),
            )
        )
    return dedupe(records)


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="okh-fixture-"))
    index_dir = workdir / "index"
    save_index(build_index(corpus_records()), index_dir)
    static = ROOT / "frontend"
    config = ServiceConfig(
        listen_address="127.0.0.1",
        listen_port=0,
        index_dir=str(index_dir),
        case_store=str(workdir / "cases"),
        static_assets=str(static) if static.is_dir() else None,
    )
    httpd, _ = make_server(config)
    print(f"PORT {httpd.server_address[1]}", flush=True)
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
