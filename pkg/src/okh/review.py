"""Community peer-assessment workflow.

Each review case is an append-only event log; the case state is a pure
fold of its events, so replaying a log always reproduces the state.  An
editor moderates the discussion between the submitting author and at
least two reviewers, and may only record an accepted decision once the
discussion has converged: every issue resolved, two or more approvals,
and no rejection standing.  Published outcomes become hash-verifiable
attestation records bound to the exact manifest content reviewed.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from .canon import digest, wire_json

MIN_REVIEWERS = 2
DEFAULT_ROUND_CAP = 5

STATES = (
    "submitted",
    "under_review",
    "revisions_requested",
    "converged",
    "decided",
    "published",
)

VERDICTS = ("approve", "request_changes", "reject")


class ReviewError(Exception):
    pass


class SubjectInvalid(ReviewError):
    pass


class WrongState(ReviewError):
    pass


class DuplicateReviewer(ReviewError):
    pass


class ConflictOfInterest(ReviewError):
    pass


class NotAReviewer(ReviewError):
    pass


class NotPermitted(ReviewError):
    pass


class UnknownCriterion(ReviewError):
    pass


class UnknownIssue(ReviewError):
    pass


class MissingRationale(ReviewError):
    pass


class UnknownCase(ReviewError):
    pass


class UnknownAttestation(ReviewError):
    pass


@dataclass(frozen=True)
class ReviewSubject:
    project_id: str
    content_hash: str
    ruleset_id: str

    def to_wire(self) -> dict[str, str]:
        return {
            "project_id": self.project_id,
            "content_hash": self.content_hash,
            "ruleset_id": self.ruleset_id,
        }


@dataclass(frozen=True)
class Issue:
    issue_id: str
    opened_by: str
    criterion_id: str
    text: str
    status: str  # open | resolved
    resolution: str | None = None

    def to_wire(self) -> dict[str, Any]:
        return {
            "issue_id": self.issue_id,
            "opened_by": self.opened_by,
            "criterion_id": self.criterion_id,
            "text": self.text,
            "status": self.status,
            "resolution": self.resolution,
        }


@dataclass(frozen=True)
class ReviewCase:
    case_id: str
    subject: ReviewSubject
    submitter: str
    editor: str
    criteria: tuple[str, ...]
    state: str
    reviewers: tuple[str, ...]
    issues: tuple[Issue, ...]
    verdicts: tuple[tuple[str, str], ...]  # (reviewer, verdict), first-verdict order
    round: int
    round_cap: int
    decision: dict[str, str] | None
    events: tuple[dict[str, Any], ...]

    def verdict_map(self) -> dict[str, str]:
        return dict(self.verdicts)

    def open_issues(self) -> tuple[Issue, ...]:
        return tuple(i for i in self.issues if i.status == "open")

    def to_wire(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "subject": self.subject.to_wire(),
            "submitter": self.submitter,
            "editor": self.editor,
            "criteria": list(self.criteria),
            "state": self.state,
            "reviewers": list(self.reviewers),
            "issues": [i.to_wire() for i in self.issues],
            "verdicts": {k: v for k, v in sorted(self.verdicts)},
            "round": self.round,
            "round_cap": self.round_cap,
            "decision": dict(self.decision) if self.decision else None,
        }


@dataclass(frozen=True)
class AttestationRecord:
    case_id: str
    subject: ReviewSubject
    decision: dict[str, str]
    reviewer_count: int
    rounds: int
    issued_at: str
    record_hash: str

    def to_wire(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "subject": self.subject.to_wire(),
            "decision": dict(self.decision),
            "reviewer_count": self.reviewer_count,
            "rounds": self.rounds,
            "issued_at": self.issued_at,
            "record_hash": self.record_hash,
        }


def _attestation_payload(wire: dict[str, Any]) -> dict[str, Any]:
    return {k: v for k, v in wire.items() if k != "record_hash"}


def verify_attestation(wire: dict[str, Any]) -> bool:
    """True iff the stored record hash matches a recomputation over the
    canonical serialization of every other field."""
    try:
        stored = wire["record_hash"]
        return digest(_attestation_payload(wire)) == stored
    except (KeyError, TypeError):
        return False


def convergence_holds(case: ReviewCase) -> bool:
    """All issues resolved, >= 2 approvals, no reject standing."""
    verdicts = case.verdict_map()
    approvals = sum(1 for v in verdicts.values() if v == "approve")
    rejects = sum(1 for v in verdicts.values() if v == "reject")
    return not case.open_issues() and approvals >= MIN_REVIEWERS and rejects == 0


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def _event(case: ReviewCase | None, actor: str, action: str, data: dict[str, Any]) -> dict[str, Any]:
    seq = len(case.events) + 1 if case is not None else 1
    return {"seq": seq, "at": _utc_now(), "actor": actor, "action": action, "data": data}


def apply_event(case: ReviewCase | None, event: dict[str, Any]) -> ReviewCase:
    """Fold one event into the case state.  All state-transition logic
    lives here so that replaying a log reproduces the state exactly."""
    action = event["action"]
    data = event["data"]
    if action == "opened":
        return ReviewCase(
            case_id=data["case_id"],
            subject=ReviewSubject(**data["subject"]),
            submitter=data["submitter"],
            editor=data["editor"],
            criteria=tuple(data["criteria"]),
            state="submitted",
            reviewers=(),
            issues=(),
            verdicts=(),
            round=1,
            round_cap=data["round_cap"],
            decision=None,
            events=(event,),
        )
    assert case is not None
    events = case.events + (event,)
    if action == "reviewer_assigned":
        reviewers = case.reviewers + (data["reviewer"],)
        state = case.state
        if state == "submitted" and len(reviewers) >= MIN_REVIEWERS:
            state = "under_review"
        return replace(case, reviewers=reviewers, state=state, events=events)
    if action == "issue_posted":
        issue = Issue(
            issue_id=data["issue_id"],
            opened_by=event["actor"],
            criterion_id=data["criterion_id"],
            text=data["text"],
            status="open",
        )
        return replace(case, issues=case.issues + (issue,), events=events)
    if action == "issue_resolved":
        issues = tuple(
            replace(i, status="resolved", resolution=data["resolution"])
            if i.issue_id == data["issue_id"]
            else i
            for i in case.issues
        )
        updated = replace(case, issues=issues, events=events)
        if updated.state == "under_review" and convergence_holds(updated):
            updated = replace(updated, state="converged")
        return updated
    if action == "verdict_recorded":
        reviewer = event["actor"]
        verdicts = tuple((r, v) for r, v in case.verdicts if r != reviewer)
        verdicts += ((reviewer, data["verdict"]),)
        updated = replace(case, verdicts=verdicts, events=events)
        if updated.state == "under_review" and convergence_holds(updated):
            updated = replace(updated, state="converged")
        return updated
    if action == "revisions_requested":
        return replace(
            case, state="revisions_requested", round=case.round + 1, events=events
        )
    if action == "resubmitted":
        return replace(case, state="under_review", verdicts=(), events=events)
    if action == "decided":
        decision = {"outcome": data["outcome"], "rationale": data["rationale"]}
        return replace(case, state="decided", decision=decision, events=events)
    if action == "published":
        return replace(case, state="published", events=events)
    raise ValueError(f"unknown event action {action!r}")


def replay(events: list[dict[str, Any]]) -> ReviewCase:
    case: ReviewCase | None = None
    for event in events:
        case = apply_event(case, event)
    if case is None:
        raise ValueError("empty event log")
    return case


# --- operations -------------------------------------------------------


def open_case(
    subject: ReviewSubject,
    submitter: str,
    editor: str,
    criteria: tuple[str, ...],
    *,
    round_cap: int = DEFAULT_ROUND_CAP,
    subject_valid: bool = True,
    case_id: str | None = None,
) -> ReviewCase:
    """Open a fresh case in state `submitted`.

    The caller is responsible for checking that the subject manifest
    exists and validates, and reports the outcome via subject_valid.
    """
    if not subject_valid:
        raise SubjectInvalid(f"subject {subject.project_id} does not validate")
    if editor == submitter:
        raise ConflictOfInterest("editor must not be the submitter")
    event = _event(
        None,
        submitter,
        "opened",
        {
            "case_id": case_id or uuid.uuid4().hex,
            "subject": subject.to_wire(),
            "submitter": submitter,
            "editor": editor,
            "criteria": list(criteria),
            "round_cap": round_cap,
        },
    )
    return apply_event(None, event)


def assign_reviewer(case: ReviewCase, reviewer: str) -> ReviewCase:
    if case.state not in ("submitted", "under_review"):
        raise WrongState(f"cannot assign reviewers in state {case.state}")
    if reviewer == case.submitter:
        raise ConflictOfInterest("submitter cannot review their own case")
    if reviewer == case.editor:
        raise ConflictOfInterest("the editor moderates and cannot review")
    if reviewer in case.reviewers:
        raise DuplicateReviewer(f"{reviewer} is already assigned")
    return apply_event(case, _event(case, reviewer, "reviewer_assigned", {"reviewer": reviewer}))


def post_issue(case: ReviewCase, reviewer: str, criterion_id: str, text: str) -> ReviewCase:
    if case.state != "under_review":
        raise WrongState(f"cannot post issues in state {case.state}")
    if reviewer not in case.reviewers:
        raise NotPermitted(f"{reviewer} is not an assigned reviewer")
    if criterion_id not in case.criteria:
        raise UnknownCriterion(f"criterion {criterion_id!r} is not in the ruleset")
    issue_id = f"i{len(case.issues) + 1}"
    return apply_event(
        case,
        _event(case, reviewer, "issue_posted",
               {"issue_id": issue_id, "criterion_id": criterion_id, "text": text}),
    )


def resolve_issue(case: ReviewCase, actor: str, issue_id: str, resolution: str) -> ReviewCase:
    if case.state != "under_review":
        raise WrongState(f"cannot resolve issues in state {case.state}")
    issue = next((i for i in case.issues if i.issue_id == issue_id), None)
    if issue is None:
        raise UnknownIssue(f"no issue {issue_id!r}")
    if issue.status != "open":
        raise WrongState(f"issue {issue_id} is already resolved")
    if actor not in (issue.opened_by, case.editor):
        raise NotPermitted("only the opener or the editor may resolve an issue")
    if not resolution.strip():
        raise MissingRationale("resolution text must be non-empty")
    return apply_event(
        case,
        _event(case, actor, "issue_resolved", {"issue_id": issue_id, "resolution": resolution}),
    )


def reviewer_verdict(case: ReviewCase, reviewer: str, verdict: str) -> ReviewCase:
    if case.state != "under_review":
        raise WrongState(f"cannot record verdicts in state {case.state}")
    if reviewer not in case.reviewers:
        raise NotAReviewer(f"{reviewer} is not an assigned reviewer")
    if verdict not in VERDICTS:
        raise ValueError(f"verdict must be one of {', '.join(VERDICTS)}")
    return apply_event(case, _event(case, reviewer, "verdict_recorded", {"verdict": verdict}))


def request_revisions(case: ReviewCase, editor: str) -> ReviewCase:
    if editor != case.editor:
        raise NotPermitted("only the editor may request revisions")
    if case.state != "under_review":
        raise WrongState(f"cannot request revisions in state {case.state}")
    if not any(v == "request_changes" for _, v in case.verdicts):
        raise WrongState("no reviewer has requested changes")
    if case.open_issues():
        raise WrongState("open issues remain")
    if case.round >= case.round_cap:
        raise WrongState("round cap reached; the editor must decide")
    return apply_event(case, _event(case, editor, "revisions_requested", {}))


def resubmit(case: ReviewCase, submitter: str) -> ReviewCase:
    if submitter != case.submitter:
        raise NotPermitted("only the submitting author may resubmit")
    if case.state != "revisions_requested":
        raise WrongState(f"cannot resubmit in state {case.state}")
    return apply_event(case, _event(case, submitter, "resubmitted", {}))


def decide(case: ReviewCase, editor: str, rationale: str = "") -> ReviewCase:
    """Record the publication decision.

    A converged case is accepted.  A stalled case (round cap reached or a
    reject verdict standing) may be rejected with a rationale.
    """
    if editor != case.editor:
        raise NotPermitted("only the editor decides")
    if case.state == "converged":
        outcome = "accepted"
    elif case.state in ("under_review", "revisions_requested") and (
        case.round >= case.round_cap
        or any(v == "reject" for _, v in case.verdicts)
    ):
        if not rationale.strip():
            raise MissingRationale("rejection requires a rationale")
        outcome = "rejected"
    else:
        raise WrongState(f"cannot decide in state {case.state}")
    return apply_event(
        case, _event(case, editor, "decided", {"outcome": outcome, "rationale": rationale})
    )


def publish_attestation(case: ReviewCase) -> tuple[ReviewCase, AttestationRecord]:
    if case.state != "decided":
        raise WrongState(f"cannot publish in state {case.state}")
    event = _event(case, case.editor, "published", {})
    published = apply_event(case, event)
    assert case.decision is not None
    payload = {
        "case_id": case.case_id,
        "subject": case.subject.to_wire(),
        "decision": dict(case.decision),
        "reviewer_count": len(case.reviewers),
        "rounds": case.round,
        "issued_at": event["at"],
    }
    record = AttestationRecord(
        case_id=case.case_id,
        subject=case.subject,
        decision=dict(case.decision),
        reviewer_count=len(case.reviewers),
        rounds=case.round,
        issued_at=event["at"],
        record_hash=digest(payload),
    )
    return published, record


# --- transition table (exported for UI control gating) -----------------


def transition_table() -> dict[str, dict[str, list[str]]]:
    """Actions not categorically impossible per (state, role).

    Predicate-dependent legality (convergence, round cap, issue
    ownership) is still enforced server-side; clients surface rejections.
    """
    empty = {"author": [], "reviewer": [], "editor": []}
    return {
        "submitted": {"author": [], "reviewer": ["assign"], "editor": []},
        "under_review": {
            "author": [],
            "reviewer": ["assign", "issue", "resolve", "verdict"],
            "editor": ["resolve", "request-changes", "decide"],
        },
        "revisions_requested": {
            "author": ["resubmit"],
            "reviewer": [],
            "editor": ["decide"],
        },
        "converged": {"author": [], "reviewer": [], "editor": ["decide"]},
        "decided": {"author": [], "reviewer": [], "editor": ["publish"]},
        "published": dict(empty),
    }


# --- persistence --------------------------------------------------------


class CaseStore:
    """Append-only NDJSON persistence: one event file per case, plus a
    shared attestations file.  Mutations per case are serialized."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._guard = threading.Lock()
        self._locks: dict[str, threading.Lock] = {}

    def lock_for(self, case_id: str) -> threading.Lock:
        with self._guard:
            if case_id not in self._locks:
                self._locks[case_id] = threading.Lock()
            return self._locks[case_id]

    def _events_path(self, case_id: str) -> Path:
        return self.root / f"case-{case_id}.events.ndjson"

    def append_events(self, case_id: str, events: list[dict[str, Any]]) -> None:
        with self._events_path(case_id).open("a", encoding="utf-8") as fh:
            for event in events:
                fh.write(wire_json(event) + "\n")

    def save_new_case(self, case: ReviewCase) -> None:
        self.append_events(case.case_id, list(case.events))

    def load_case(self, case_id: str) -> ReviewCase:
        path = self._events_path(case_id)
        if not path.is_file():
            raise UnknownCase(f"no case {case_id!r}")
        import json

        events = [json.loads(line) for line in path.read_text("utf-8").splitlines() if line]
        return replay(events)

    def list_case_ids(self) -> list[str]:
        ids = []
        for path in sorted(self.root.glob("case-*.events.ndjson")):
            ids.append(path.name[len("case-"):-len(".events.ndjson")])
        return ids

    def append_attestation(self, record: AttestationRecord) -> None:
        with (self.root / "attestations.ndjson").open("a", encoding="utf-8") as fh:
            fh.write(wire_json(record.to_wire()) + "\n")

    def load_attestation(self, case_id: str) -> dict[str, Any]:
        import json

        path = self.root / "attestations.ndjson"
        if path.is_file():
            for line in path.read_text("utf-8").splitlines():
                if not line:
                    continue
                record = json.loads(line)
                if record.get("case_id") == case_id:
                    return record
        raise UnknownAttestation(f"no attestation for case {case_id!r}")
