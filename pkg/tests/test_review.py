from __future__ import annotations

import json

import pytest

from okh.canon import canonical_json
from okh.review import (
    AttestationRecord,
    CaseStore,
    ConflictOfInterest,
    DuplicateReviewer,
    MissingRationale,
    NotAReviewer,
    NotPermitted,
    ReviewCase,
    ReviewError,
    ReviewSubject,
    SubjectInvalid,
    UnknownAttestation,
    UnknownCase,
    UnknownCriterion,
    UnknownIssue,
    WrongState,
    assign_reviewer,
    convergence_holds,
    decide,
    open_case,
    post_issue,
    publish_attestation,
    replay,
    request_revisions,
    resolve_issue,
    resubmit,
    reviewer_verdict,
    transition_table,
    verify_attestation,
)

SUBJECT = ReviewSubject(
    project_id="https://ex.org/pump",
    content_hash="a" * 64,
    ruleset_id="generic-mech",
)
CRITERIA = ("design-files-study", "bom-make")

AUTHOR, EDITOR, R1, R2 = "author", "editor", "rev1", "rev2"


def fresh_case(**kw) -> ReviewCase:
    return open_case(SUBJECT, AUTHOR, EDITOR, CRITERIA, **kw)


def reviewed_case() -> ReviewCase:
    case = fresh_case()
    case = assign_reviewer(case, R1)
    case = assign_reviewer(case, R2)
    return case


# --- opening ----------------------------------------------------------


def test_open_case_initial_state():
    case = fresh_case()
    assert case.state == "submitted"
    assert case.issues == ()
    assert case.verdicts == ()
    assert case.round == 1
    assert case.events[0]["action"] == "opened"


def test_invalid_subject_rejected():
    with pytest.raises(SubjectInvalid):
        fresh_case(subject_valid=False)


def test_case_ids_are_distinct():
    assert fresh_case().case_id != fresh_case().case_id


def test_editor_must_not_be_submitter():
    with pytest.raises(ConflictOfInterest):
        open_case(SUBJECT, AUTHOR, AUTHOR, CRITERIA)


# --- assignment ---------------------------------------------------------


def test_second_reviewer_moves_case_under_review():
    case = assign_reviewer(fresh_case(), R1)
    assert case.state == "submitted"
    case = assign_reviewer(case, R2)
    assert case.state == "under_review"


def test_submitter_cannot_review():
    with pytest.raises(ConflictOfInterest):
        assign_reviewer(fresh_case(), AUTHOR)


def test_editor_cannot_review():
    with pytest.raises(ConflictOfInterest):
        assign_reviewer(fresh_case(), EDITOR)


def test_duplicate_reviewer_rejected():
    case = assign_reviewer(fresh_case(), R1)
    with pytest.raises(DuplicateReviewer):
        assign_reviewer(case, R1)


# --- issues -------------------------------------------------------------


def test_post_and_resolve_issue():
    case = post_issue(reviewed_case(), R1, "bom-make", "BOM link missing")
    assert len(case.open_issues()) == 1
    case = resolve_issue(case, R1, "i1", "BOM link added")
    assert case.open_issues() == ()
    assert case.issues[0].resolution == "BOM link added"


def test_issue_requires_known_criterion():
    with pytest.raises(UnknownCriterion):
        post_issue(reviewed_case(), R1, "no-such-criterion", "x")


def test_issue_requires_assigned_reviewer():
    with pytest.raises(NotPermitted):
        post_issue(reviewed_case(), "stranger", "bom-make", "x")


def test_issue_requires_under_review_state():
    with pytest.raises(WrongState):
        post_issue(fresh_case(), R1, "bom-make", "x")


def test_only_opener_or_editor_resolves():
    case = post_issue(reviewed_case(), R1, "bom-make", "x")
    with pytest.raises(NotPermitted):
        resolve_issue(case, AUTHOR, "i1", "done")
    with pytest.raises(NotPermitted):
        resolve_issue(case, R2, "i1", "done")
    assert resolve_issue(case, EDITOR, "i1", "done").open_issues() == ()


def test_resolution_must_be_non_empty():
    case = post_issue(reviewed_case(), R1, "bom-make", "x")
    with pytest.raises(MissingRationale):
        resolve_issue(case, R1, "i1", "  ")


def test_unknown_issue():
    with pytest.raises(UnknownIssue):
        resolve_issue(reviewed_case(), R1, "i9", "done")


def test_double_resolve_rejected():
    case = post_issue(reviewed_case(), R1, "bom-make", "x")
    case = resolve_issue(case, R1, "i1", "done")
    with pytest.raises(WrongState):
        resolve_issue(case, R1, "i1", "again")


# --- verdicts and convergence --------------------------------------------


def test_two_approvals_converge():
    case = reviewer_verdict(reviewed_case(), R1, "approve")
    assert case.state == "under_review"
    case = reviewer_verdict(case, R2, "approve")
    assert case.state == "converged"


def test_open_issue_blocks_convergence():
    case = post_issue(reviewed_case(), R1, "bom-make", "x")
    case = reviewer_verdict(case, R1, "approve")
    case = reviewer_verdict(case, R2, "approve")
    assert case.state == "under_review"
    # Resolving the last open issue completes convergence.
    case = resolve_issue(case, R1, "i1", "fixed")
    assert case.state == "converged"


def test_verdict_overwrite():
    case = reviewer_verdict(reviewed_case(), R1, "approve")
    case = reviewer_verdict(case, R1, "reject")
    assert case.verdict_map()[R1] == "reject"
    assert case.state == "under_review"


def test_verdict_requires_assignment():
    with pytest.raises(NotAReviewer):
        reviewer_verdict(reviewed_case(), "stranger", "approve")


def test_verdict_requires_under_review():
    with pytest.raises(WrongState):
        reviewer_verdict(fresh_case(), R1, "approve")


def test_reject_blocks_convergence():
    case = reviewer_verdict(reviewed_case(), R1, "approve")
    case = reviewer_verdict(case, R2, "reject")
    assert case.state == "under_review"


# --- revisions ------------------------------------------------------------


def test_request_revisions_round_trip():
    case = reviewer_verdict(reviewed_case(), R1, "request_changes")
    case = request_revisions(case, EDITOR)
    assert case.state == "revisions_requested"
    assert case.round == 2
    case = resubmit(case, AUTHOR)
    assert case.state == "under_review"
    assert case.verdicts == ()


def test_request_revisions_requires_request_changes_verdict():
    with pytest.raises(WrongState):
        request_revisions(reviewed_case(), EDITOR)


def test_request_revisions_requires_editor():
    case = reviewer_verdict(reviewed_case(), R1, "request_changes")
    with pytest.raises(NotPermitted):
        request_revisions(case, AUTHOR)


def test_request_revisions_blocked_by_open_issue():
    case = post_issue(reviewed_case(), R1, "bom-make", "x")
    case = reviewer_verdict(case, R1, "request_changes")
    with pytest.raises(WrongState):
        request_revisions(case, EDITOR)


def test_resubmit_requires_author():
    case = reviewer_verdict(reviewed_case(), R1, "request_changes")
    case = request_revisions(case, EDITOR)
    with pytest.raises(NotPermitted):
        resubmit(case, R1)


def test_round_cap_blocks_further_revisions():
    case = open_case(SUBJECT, AUTHOR, EDITOR, CRITERIA, round_cap=2)
    case = assign_reviewer(case, R1)
    case = assign_reviewer(case, R2)
    case = reviewer_verdict(case, R1, "request_changes")
    case = request_revisions(case, EDITOR)
    case = resubmit(case, AUTHOR)
    case = reviewer_verdict(case, R1, "request_changes")
    assert case.round == 2
    with pytest.raises(WrongState):
        request_revisions(case, EDITOR)


# --- decide / publish -------------------------------------------------------


def converged_case() -> ReviewCase:
    case = reviewer_verdict(reviewed_case(), R1, "approve")
    return reviewer_verdict(case, R2, "approve")


def test_decide_accepts_converged_case():
    case = decide(converged_case(), EDITOR)
    assert case.state == "decided"
    assert case.decision == {"outcome": "accepted", "rationale": ""}


def test_decide_on_fresh_case_is_wrong_state():
    with pytest.raises(WrongState):
        decide(fresh_case(), EDITOR)


def test_decide_requires_editor():
    with pytest.raises(NotPermitted):
        decide(converged_case(), R1)


def test_reject_verdict_allows_rejection_with_rationale():
    case = reviewer_verdict(reviewed_case(), R1, "reject")
    with pytest.raises(MissingRationale):
        decide(case, EDITOR)
    case = decide(case, EDITOR, rationale="documentation incomplete")
    assert case.decision == {"outcome": "rejected", "rationale": "documentation incomplete"}


def test_round_cap_allows_rejection():
    case = open_case(SUBJECT, AUTHOR, EDITOR, CRITERIA, round_cap=1)
    case = assign_reviewer(case, R1)
    case = assign_reviewer(case, R2)
    case = decide(case, EDITOR, rationale="no convergence within the round cap")
    assert case.decision["outcome"] == "rejected"


def test_no_operations_after_decision():
    case = decide(converged_case(), EDITOR)
    with pytest.raises(WrongState):
        reviewer_verdict(case, R1, "approve")
    with pytest.raises(WrongState):
        post_issue(case, R1, "bom-make", "late")
    with pytest.raises(WrongState):
        assign_reviewer(case, "late-reviewer")


def test_publish_produces_verifiable_attestation():
    case, record = publish_attestation(decide(converged_case(), EDITOR))
    assert case.state == "published"
    assert record.decision["outcome"] == "accepted"
    assert record.reviewer_count == 2
    assert record.rounds == 1
    assert verify_attestation(record.to_wire())


def test_publish_requires_decided_state():
    with pytest.raises(WrongState):
        publish_attestation(converged_case())


def test_republish_is_wrong_state():
    case, _ = publish_attestation(decide(converged_case(), EDITOR))
    with pytest.raises(WrongState):
        publish_attestation(case)


def test_attestation_mutation_breaks_verification():
    _, record = publish_attestation(decide(converged_case(), EDITOR))
    wire = record.to_wire()
    blob = bytearray(canonical_json(wire).encode("utf-8"))
    for pos in range(len(blob)):
        mutated = bytearray(blob)
        mutated[pos] = (mutated[pos] + 1) % 128 or 1
        try:
            tampered = json.loads(mutated.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            continue  # unparseable mutations cannot masquerade as records
        if not isinstance(tampered, dict):
            continue
        assert not verify_attestation(tampered) or tampered == wire, pos


# --- event sourcing -----------------------------------------------------


def test_replay_reproduces_state_exactly():
    case, _ = publish_attestation(decide(converged_case(), EDITOR))
    replayed = replay([dict(e) for e in case.events])
    assert canonical_json(replayed.to_wire()) == canonical_json(case.to_wire())
    assert replayed == case


def test_event_log_is_append_only_and_sequenced():
    case = converged_case()
    seqs = [e["seq"] for e in case.events]
    assert seqs == list(range(1, len(seqs) + 1))


# --- exhaustive transition safety ----------------------------------------


def _candidate_actions(case: ReviewCase):
    """Every syntactically possible action for the 4-actor universe."""
    actions = []
    for actor in (AUTHOR, EDITOR, R1, R2):
        actions.append((f"assign:{actor}", lambda c, a=actor: assign_reviewer(c, a)))
        actions.append((f"resubmit:{actor}", lambda c, a=actor: resubmit(c, a)))
        actions.append((f"request-changes:{actor}", lambda c, a=actor: request_revisions(c, a)))
        actions.append((f"decide:{actor}", lambda c, a=actor: decide(c, a, rationale="r")))
    for reviewer in (R1, R2):
        actions.append((f"issue:{reviewer}", lambda c, a=reviewer: post_issue(c, a, CRITERIA[0], "t")))
        for verdict in ("approve", "request_changes", "reject"):
            actions.append(
                (f"verdict:{reviewer}:{verdict}",
                 lambda c, a=reviewer, v=verdict: reviewer_verdict(c, a, v))
            )
    for issue in case.issues:
        for actor in (AUTHOR, EDITOR, R1, R2):
            actions.append(
                (f"resolve:{actor}:{issue.issue_id}",
                 lambda c, a=actor, i=issue.issue_id: resolve_issue(c, a, i, "done"))
            )
    actions.append(("publish", lambda c: publish_attestation(c)[0]))
    return actions


def _expected_legal(case: ReviewCase, name: str) -> bool:
    """Independent precondition model mirroring the documented table."""
    kind, _, rest = name.partition(":")
    verdict_map = case.verdict_map()
    if kind == "assign":
        return (
            case.state in ("submitted", "under_review")
            and rest not in case.reviewers
            and rest not in (AUTHOR, EDITOR)
        )
    if kind == "issue":
        return case.state == "under_review" and rest in case.reviewers
    if kind == "verdict":
        reviewer = rest.split(":")[0]
        return case.state == "under_review" and reviewer in case.reviewers
    if kind == "resolve":
        actor, issue_id = rest.split(":")
        issue = next((i for i in case.issues if i.issue_id == issue_id), None)
        return (
            case.state == "under_review"
            and issue is not None
            and issue.status == "open"
            and actor in (issue.opened_by, EDITOR)
        )
    if kind == "request-changes":
        return (
            rest == EDITOR
            and case.state == "under_review"
            and any(v == "request_changes" for v in verdict_map.values())
            and not case.open_issues()
            and case.round < case.round_cap
        )
    if kind == "resubmit":
        return rest == AUTHOR and case.state == "revisions_requested"
    if kind == "decide":
        return rest == EDITOR and (
            case.state == "converged"
            or (
                case.state in ("under_review", "revisions_requested")
                and (
                    case.round >= case.round_cap
                    or any(v == "reject" for v in verdict_map.values())
                )
            )
        )
    if kind == "publish":
        return case.state == "decided"
    raise AssertionError(name)


def enumerate_transitions(max_depth: int = 6, round_cap: int = 5):
    """Breadth-first walk of all reachable states within max_depth actions,
    deduplicated by observable state.  Returns safety statistics."""
    start = open_case(SUBJECT, AUTHOR, EDITOR, CRITERIA, round_cap=round_cap, case_id="enum")
    fingerprint = lambda c: canonical_json(c.to_wire())
    seen = {fingerprint(start): start}
    frontier = [start]
    stats = {"states": 1, "legal": 0, "illegal": 0, "accepted_decisions": 0}
    for _ in range(max_depth):
        next_frontier = []
        for case in frontier:
            for name, action in _candidate_actions(case):
                try:
                    result = action(case)
                    succeeded = True
                except ReviewError:
                    succeeded = False
                assert succeeded == _expected_legal(case, name), (
                    f"{name} from {case.state}: "
                    f"{'succeeded' if succeeded else 'failed'} unexpectedly"
                )
                if not succeeded:
                    stats["illegal"] += 1
                    continue
                stats["legal"] += 1
                if name.startswith("decide:") and result.decision["outcome"] == "accepted":
                    stats["accepted_decisions"] += 1
                    assert case.state == "converged"
                    assert convergence_holds(case), "accepted without convergence"
                assert result.round >= case.round
                assert result.round <= result.round_cap
                key = fingerprint(result)
                if key not in seen:
                    seen[key] = result
                    next_frontier.append(result)
        frontier = next_frontier
        stats["states"] = len(seen)
    return stats, seen


def test_exhaustive_transition_safety():
    stats, seen = enumerate_transitions(max_depth=6)
    assert stats["states"] > 100
    assert stats["accepted_decisions"] > 0
    assert stats["illegal"] > 0
    # Every reachable state replays from its own event log byte-for-byte.
    for case in seen.values():
        replayed = replay([dict(e) for e in case.events])
        assert canonical_json(replayed.to_wire()) == canonical_json(case.to_wire())


# --- transition table ------------------------------------------------------


def test_transition_table_covers_all_states():
    table = transition_table()
    assert set(table) == {
        "submitted", "under_review", "revisions_requested",
        "converged", "decided", "published",
    }
    for state, by_role in table.items():
        assert set(by_role) == {"author", "reviewer", "editor"}
    assert table["published"] == {"author": [], "reviewer": [], "editor": []}
    assert "decide" in table["converged"]["editor"]
    assert "publish" in table["decided"]["editor"]


# --- persistence -----------------------------------------------------------


def test_case_store_round_trip(tmp_path):
    store = CaseStore(tmp_path / "cases")
    case = converged_case()
    store.save_new_case(case)
    loaded = store.load_case(case.case_id)
    assert loaded == case

    decided = decide(loaded, EDITOR)
    store.append_events(case.case_id, list(decided.events[len(loaded.events):]))
    assert store.load_case(case.case_id).state == "decided"


def test_case_store_unknown_case(tmp_path):
    with pytest.raises(UnknownCase):
        CaseStore(tmp_path).load_case("nope")


def test_attestation_store(tmp_path):
    store = CaseStore(tmp_path)
    case, record = publish_attestation(decide(converged_case(), EDITOR))
    store.save_new_case(case)
    store.append_attestation(record)
    loaded = store.load_attestation(case.case_id)
    assert loaded == record.to_wire()
    assert verify_attestation(loaded)
    with pytest.raises(UnknownAttestation):
        store.load_attestation("other")
