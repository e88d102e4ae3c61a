"""Command-line interface.

Exit codes: 0 success, 1 validation/compliance/operation failure,
2 usage errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import compliance, index as index_mod, review, service
from .canon import wire_json
from .crawler import FetchPolicy, crawl, dedupe, load_seed_list
from .manifest import ManifestError, parse_manifest, validate_manifest


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _print_json(obj) -> None:
    print(wire_json(obj))


def _load_manifest(path: str):
    return parse_manifest(_read(path))


def cmd_validate(args) -> int:
    try:
        manifest = _load_manifest(args.file)
    except ManifestError as exc:
        if args.json:
            _print_json({"valid": False, "error": str(exc)})
        else:
            print(f"{args.file}: {exc}")
        return 1
    report = validate_manifest(manifest)
    if args.json:
        _print_json({"valid": report.valid, **report.to_wire()})
    else:
        for issue in report.issues:
            print(f"{args.file}: {issue.severity}: {issue.field}: {issue.code}: {issue.message}")
        if report.valid:
            print(f"{args.file}: valid ({len(report.warnings())} warning(s))")
    return 0 if report.valid else 1


def cmd_comply(args) -> int:
    manifest = _load_manifest(args.file)
    if args.tsdc:
        ruleset = compliance.load_tsdc(_read(args.tsdc))
    else:
        ruleset = compliance.load_bundled_tsdc()
    inventory = compliance.derive_inventory(manifest)
    report = compliance.assess_compliance(manifest, inventory, ruleset, args.recipient)
    if args.json:
        _print_json(report.to_wire())
    else:
        for right, ok in report.rights_summary:
            print(f"{right}: {'pass' if ok else 'FAIL'}")
        print(f"score: {report.score:.3f}")
        print(f"lifecycle: {', '.join(report.lifecycle_coverage) or '(none)'}")
        if report.manufacture_missing:
            print("warning: no passing criterion covers the manufacture phase")
    all_rights_pass = all(ok for _, ok in report.rights_summary)
    return 0 if all_rights_pass else 1


def cmd_crawl(args) -> int:
    import os

    if args.offline:
        os.environ["OKH_OFFLINE"] = "1"
    sources, malformed = load_seed_list(_read(args.seeds))
    for diagnostic in malformed:
        print(f"seed list: {diagnostic}", file=sys.stderr)
    if not sources:
        print("seed list has no usable rows", file=sys.stderr)
        return 1
    policy = FetchPolicy(
        per_host_delay=args.delay,
        request_timeout=args.timeout,
        parallelism=args.parallelism,
    )
    records, report = crawl(sources, policy)
    deduped = dedupe(records)
    report.deduplicated = len(records) - len(deduped)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "records.ndjson").open("w", encoding="utf-8") as fh:
        for record in deduped:
            fh.write(wire_json(record.to_wire()) + "\n")
    (out / "crawl-report.json").write_text(
        json.dumps(report.to_wire(), indent=2) + "\n", encoding="utf-8"
    )
    if args.json:
        _print_json(report.to_wire())
    else:
        print(
            f"attempted {report.attempted}, succeeded {report.succeeded}, "
            f"parse_failed {report.parse_failed}, invalid {report.invalid}, "
            f"network_failed {report.network_failed}; "
            f"{len(deduped)} records after dedupe -> {out}"
        )
    return 0 if report.network_failed == 0 and report.parse_failed == 0 else 1


def _read_records(path: Path):
    from .crawler import ProjectRecord

    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(ProjectRecord.from_wire(json.loads(line)))
    return records


def cmd_index_build(args) -> int:
    records = _read_records(Path(args.input) / "records.ndjson")
    ix = index_mod.build_index(records)
    index_mod.save_index(ix, args.out)
    print(f"indexed {ix.doc_count} records, {len(ix.graph)} edges -> {args.out}")
    return 0


def cmd_search(args) -> int:
    ix = index_mod.load_index(args.index)
    filters = {}
    if args.stage:
        filters["development_stage"] = args.stage
    if args.license_class:
        filters["license_class"] = args.license_class
    if args.keyword:
        filters["keyword"] = args.keyword
    hits = index_mod.search(ix, args.query, filters or None, args.limit)
    if args.json:
        _print_json([h.to_wire() for h in hits])
    else:
        for hit in hits:
            print(f"{hit.score:8.4f}  {hit.id}  [{', '.join(hit.matched_fields)}]")
        if not hits:
            print("no hits")
    return 0


def cmd_related(args) -> int:
    ix = index_mod.load_index(args.index)
    items = index_mod.related(ix, args.id, kind=args.kind, depth=args.depth)
    if args.json:
        _print_json([item.to_wire() for item in items])
    else:
        for item in items:
            marker = "" if item.resolved else " (unresolved)"
            print(f"{item.distance}  {item.kind:14s}  {item.ref}{marker}")
        if not items:
            print("no related projects")
    return 0


def cmd_serve(args) -> int:
    config = service.load_config(args.config)
    service.serve(config)
    return 0


def _store(args) -> review.CaseStore:
    return review.CaseStore(args.store)


def _case_out(case: review.ReviewCase, as_json: bool) -> None:
    if as_json:
        _print_json(case.to_wire())
    else:
        print(f"case {case.case_id}: state={case.state} round={case.round} "
              f"reviewers={list(case.reviewers)} open_issues={len(case.open_issues())}")


def cmd_review(args) -> int:
    action = args.review_action

    if action == "transitions":
        _print_json(review.transition_table())
        return 0

    store = _store(args)

    if action == "open":
        if args.tsdc:
            ruleset = compliance.load_tsdc(_read(args.tsdc))
        else:
            ruleset = compliance.load_bundled_tsdc()
        subject_valid = True
        content_hash = args.content_hash
        if args.manifest:
            manifest = _load_manifest(args.manifest)
            subject_valid = validate_manifest(manifest).valid
            if content_hash is None:
                from .canon import sha256_hex

                content_hash = sha256_hex(Path(args.manifest).read_bytes())
        if content_hash is None:
            print("either --content-hash or --manifest is required", file=sys.stderr)
            return 2
        subject = review.ReviewSubject(args.project_id, content_hash, ruleset.ruleset_id)
        case = review.open_case(
            subject, args.submitter, args.editor,
            tuple(c.criterion_id for c in ruleset.criteria),
            subject_valid=subject_valid,
        )
        store.save_new_case(case)
        _case_out(case, args.json)
        return 0

    case = store.load_case(args.case)
    before = len(case.events)
    if action == "assign":
        case = review.assign_reviewer(case, args.reviewer)
    elif action == "issue":
        case = review.post_issue(case, args.reviewer, args.criterion, args.text)
    elif action == "resolve":
        case = review.resolve_issue(case, args.actor, args.issue, args.resolution)
    elif action == "verdict":
        case = review.reviewer_verdict(case, args.reviewer, args.verdict)
    elif action == "request-changes":
        case = review.request_revisions(case, args.editor)
    elif action == "resubmit":
        case = review.resubmit(case, args.submitter)
    elif action == "decide":
        case = review.decide(case, args.editor, args.rationale or "")
    elif action == "publish":
        case, record = review.publish_attestation(case)
        store.append_events(case.case_id, list(case.events[before:]))
        store.append_attestation(record)
        _print_json(record.to_wire()) if args.json else print(
            f"attestation {record.record_hash} for case {case.case_id}"
        )
        return 0
    else:  # pragma: no cover - argparse prevents this
        return 2
    store.append_events(case.case_id, list(case.events[before:]))
    _case_out(case, args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="okh",
        description="Open hardware documentation toolkit: validate manifests, "
        "check documentation criteria, crawl and search the registry, and run "
        "community reviews.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a manifest file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("comply", help="assess documentation criteria")
    p.add_argument("file")
    p.add_argument("--tsdc", help="ruleset file (default: bundled generic-mech)")
    p.add_argument("--recipient", default="specialist",
                   choices=compliance.RECIPIENT_GROUPS)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_comply)

    p = sub.add_parser("crawl", help="harvest manifests from a seed list")
    p.add_argument("--seeds", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--offline", action="store_true",
                   help="forbid non-loopback hosts (sets OKH_OFFLINE=1)")
    p.add_argument("--delay", type=float, default=1.0, help="per-host delay, seconds")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--parallelism", type=int, default=8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_crawl)

    p = sub.add_parser("index", help="registry index operations")
    index_sub = p.add_subparsers(dest="index_action", required=True)
    b = index_sub.add_parser("build", help="build an index from crawl output")
    b.add_argument("--in", dest="input", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(fn=cmd_index_build)

    p = sub.add_parser("search", help="search the registry")
    p.add_argument("query")
    p.add_argument("--index", required=True)
    p.add_argument("--limit", type=int, default=10)
    p.add_argument("--stage")
    p.add_argument("--license-class", dest="license_class")
    p.add_argument("--keyword")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("related", help="walk the derivation graph")
    p.add_argument("id")
    p.add_argument("--index", required=True)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--kind", choices=index_mod.EDGE_KINDS)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_related)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("review", help="community assessment workflow")
    review_sub = p.add_subparsers(dest="review_action", required=True)

    def review_parser(name: str, **kw):
        rp = review_sub.add_parser(name, **kw)
        rp.add_argument("--store", required=True, help="case store directory")
        rp.add_argument("--json", action="store_true")
        rp.set_defaults(fn=cmd_review)
        return rp

    rp = review_parser("open", help="open a case")
    rp.add_argument("--project-id", required=True)
    rp.add_argument("--submitter", required=True)
    rp.add_argument("--editor", required=True)
    rp.add_argument("--content-hash")
    rp.add_argument("--manifest", help="manifest file to hash and validate")
    rp.add_argument("--tsdc")

    rp = review_parser("assign")
    rp.add_argument("--case", required=True)
    rp.add_argument("--reviewer", required=True)

    rp = review_parser("issue")
    rp.add_argument("--case", required=True)
    rp.add_argument("--reviewer", required=True)
    rp.add_argument("--criterion", required=True)
    rp.add_argument("--text", required=True)

    rp = review_parser("resolve")
    rp.add_argument("--case", required=True)
    rp.add_argument("--actor", required=True)
    rp.add_argument("--issue", required=True)
    rp.add_argument("--resolution", required=True)

    rp = review_parser("verdict")
    rp.add_argument("--case", required=True)
    rp.add_argument("--reviewer", required=True)
    rp.add_argument("--verdict", required=True, choices=review.VERDICTS)

    rp = review_parser("request-changes")
    rp.add_argument("--case", required=True)
    rp.add_argument("--editor", required=True)

    rp = review_parser("resubmit")
    rp.add_argument("--case", required=True)
    rp.add_argument("--submitter", required=True)

    rp = review_parser("decide")
    rp.add_argument("--case", required=True)
    rp.add_argument("--editor", required=True)
    rp.add_argument("--rationale")

    rp = review_parser("publish")
    rp.add_argument("--case", required=True)

    rp = review_sub.add_parser("transitions", help="print the state/role transition table")
    rp.add_argument("--json", action="store_true")
    rp.set_defaults(fn=cmd_review, store=None)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ManifestError, compliance.ComplianceError, index_mod.RegistryIndexError,
            review.ReviewError, service.ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
