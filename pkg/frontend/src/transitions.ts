// Control gating for the review console.
//
// The server remains the authority: the table (served by the backend and
// frozen in fixtures/transition-table.json) says which actions exist per
// (state, role), and the predicates below mirror the server's
// preconditions so the console never renders a button the server would
// refuse.  Anything that slips through (races) surfaces the server's
// error code verbatim.

import type { ReviewCase, Role, TransitionTable } from "./api.js";

function hasOpenIssues(reviewCase: ReviewCase): boolean {
  return reviewCase.issues.some((issue) => issue.status === "open");
}

function anyVerdict(reviewCase: ReviewCase, verdict: string): boolean {
  return Object.values(reviewCase.verdicts).includes(verdict);
}

function mayResolveSomething(reviewCase: ReviewCase, actor: string): boolean {
  return reviewCase.issues.some(
    (issue) =>
      issue.status === "open" && (issue.opened_by === actor || actor === reviewCase.editor),
  );
}

function decidable(reviewCase: ReviewCase): boolean {
  if (reviewCase.state === "converged") {
    return true;
  }
  if (reviewCase.state === "under_review" || reviewCase.state === "revisions_requested") {
    return reviewCase.round >= reviewCase.round_cap || anyVerdict(reviewCase, "reject");
  }
  return false;
}

function predicateAllows(reviewCase: ReviewCase, actor: string, action: string): boolean {
  switch (action) {
    case "assign":
      return (
        !reviewCase.reviewers.includes(actor) &&
        actor !== reviewCase.submitter &&
        actor !== reviewCase.editor
      );
    case "issue":
    case "verdict":
      return reviewCase.reviewers.includes(actor);
    case "resolve":
      return mayResolveSomething(reviewCase, actor);
    case "request-changes":
      return (
        actor === reviewCase.editor &&
        anyVerdict(reviewCase, "request_changes") &&
        !hasOpenIssues(reviewCase) &&
        reviewCase.round < reviewCase.round_cap
      );
    case "resubmit":
      return actor === reviewCase.submitter;
    case "decide":
      return actor === reviewCase.editor && decidable(reviewCase);
    case "publish":
      return actor === reviewCase.editor;
    default:
      return false;
  }
}

/** Actions to render for this case under the given role lens and actor id.
 * Always a subset of table[state][role]. */
export function controlsFor(
  table: TransitionTable,
  reviewCase: ReviewCase,
  role: Role,
  actor: string,
): string[] {
  const allowed = table[reviewCase.state]?.[role] ?? [];
  return allowed.filter((action) => predicateAllows(reviewCase, actor, action));
}

/** Open issues the given actor may resolve (opener or editor). */
export function resolvableIssues(reviewCase: ReviewCase, actor: string): string[] {
  return reviewCase.issues
    .filter(
      (issue) =>
        issue.status === "open" && (issue.opened_by === actor || actor === reviewCase.editor),
    )
    .map((issue) => issue.issue_id);
}
