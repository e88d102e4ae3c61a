// Review console: live case view with issue list, verdict controls, and
// editor decide/publish controls.  Only actions legal for the current
// (state, role, actor) render; every action refetches the case.

import type { OkhClient, ReviewCase, Role, TransitionTable } from "./api.js";
import { ApiError } from "./api.js";
import { controlsFor, resolvableIssues } from "./transitions.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class ReviewConsole {
  private view: HTMLElement;
  private banner: HTMLElement;
  private currentCase: ReviewCase | null = null;

  constructor(
    private readonly client: OkhClient,
    private table: TransitionTable,
    private readonly root: HTMLElement,
  ) {
    this.view = root.querySelector(".case-view") as HTMLElement;
    this.banner = root.querySelector(".banner") as HTMLElement;

    const loadForm = root.querySelector(".load-form") as HTMLFormElement;
    loadForm.addEventListener("submit", (event) => {
      event.preventDefault();
      const caseId = (loadForm.querySelector("[name=case_id]") as HTMLInputElement).value.trim();
      if (caseId) void this.load(caseId);
    });
    const openForm = root.querySelector(".open-form") as HTMLFormElement;
    openForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.openCase(openForm);
    });
    for (const name of ["role", "actor"]) {
      (root.querySelector(`[name=${name}]`) as HTMLElement).addEventListener("change", () => {
        if (this.currentCase) this.render(this.currentCase);
      });
    }
  }

  private role(): Role {
    return (this.root.querySelector("[name=role]") as HTMLSelectElement).value as Role;
  }

  private actor(): string {
    return (this.root.querySelector("[name=actor]") as HTMLInputElement).value.trim();
  }

  private async openCase(form: HTMLFormElement): Promise<void> {
    const value = (name: string) =>
      (form.querySelector(`[name=${name}]`) as HTMLInputElement).value.trim();
    try {
      const opened = await this.client.openReview({
        project_id: value("project_id"),
        submitter: value("submitter"),
        editor: value("editor"),
      });
      (this.root.querySelector("[name=case_id]") as HTMLInputElement).value = opened.case_id;
      this.render(opened);
    } catch (error) {
      this.showError(error);
    }
  }

  async load(caseId: string): Promise<void> {
    try {
      this.render(await this.client.getReview(caseId));
    } catch (error) {
      this.showError(error);
    }
  }

  private async act(action: () => Promise<unknown>): Promise<void> {
    this.banner.textContent = "";
    try {
      await action();
    } catch (error) {
      this.showError(error); // 409s surface the server's code verbatim
    }
    if (this.currentCase) {
      await this.load(this.currentCase.case_id); // optimistic refetch
    }
  }

  private showError(error: unknown): void {
    this.banner.textContent =
      error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : `request failed: ${error instanceof Error ? error.message : String(error)}`;
  }

  private render(reviewCase: ReviewCase): void {
    this.currentCase = reviewCase;
    const role = this.role();
    const actor = this.actor();
    this.view.replaceChildren();

    const head = el("header");
    head.appendChild(el("h3", undefined, `Case ${reviewCase.case_id}`));
    head.appendChild(el("span", `state state-${reviewCase.state}`, reviewCase.state));
    head.appendChild(
      el("span", "round", `round ${reviewCase.round}/${reviewCase.round_cap}`),
    );
    this.view.appendChild(head);

    const meta = el("dl", "meta");
    const add = (label: string, value: string) => {
      meta.appendChild(el("dt", undefined, label));
      meta.appendChild(el("dd", undefined, value));
    };
    add("subject", reviewCase.subject.project_id);
    add("ruleset", reviewCase.subject.ruleset_id);
    add("submitter", reviewCase.submitter);
    add("editor", reviewCase.editor);
    add("reviewers", reviewCase.reviewers.join(", ") || "(none)");
    if (reviewCase.decision) {
      add("decision", `${reviewCase.decision.outcome} ${reviewCase.decision.rationale}`.trim());
    }
    this.view.appendChild(meta);

    this.view.appendChild(el("h4", undefined, `Issues (${reviewCase.issues.length})`));
    const issueList = el("ul", "issues");
    for (const issue of reviewCase.issues) {
      const entry = el("li", `issue ${issue.status}`);
      entry.appendChild(el("span", "issue-id", issue.issue_id));
      entry.appendChild(el("span", "criterion", issue.criterion_id));
      entry.appendChild(el("span", "status", issue.status));
      entry.appendChild(el("span", "text", issue.text));
      if (issue.resolution) {
        entry.appendChild(el("span", "resolution", `resolved: ${issue.resolution}`));
      }
      issueList.appendChild(entry);
    }
    this.view.appendChild(issueList);

    this.view.appendChild(el("h4", undefined, "Verdicts"));
    const verdictList = el("ul", "verdicts");
    for (const [reviewer, verdict] of Object.entries(reviewCase.verdicts)) {
      verdictList.appendChild(el("li", undefined, `${reviewer}: ${verdict}`));
    }
    this.view.appendChild(verdictList);

    const controls = el("div", "controls");
    for (const action of controlsFor(this.table, reviewCase, role, actor)) {
      controls.appendChild(this.controlFor(action, reviewCase, actor));
    }
    this.view.appendChild(controls);
  }

  private controlFor(action: string, reviewCase: ReviewCase, actor: string): HTMLElement {
    const wrap = el("span", `control control-${action}`);
    const caseId = reviewCase.case_id;
    const button = el("button", undefined, action);
    switch (action) {
      case "assign":
        button.addEventListener("click", () => void this.act(() => this.client.assign(caseId, actor)));
        wrap.appendChild(button);
        break;
      case "issue": {
        const criterion = el("select") as HTMLSelectElement;
        for (const criterionId of reviewCase.criteria) {
          const option = el("option", undefined, criterionId) as HTMLOptionElement;
          option.value = criterionId;
          criterion.appendChild(option);
        }
        const text = el("input") as HTMLInputElement;
        text.placeholder = "issue text";
        button.addEventListener("click", () =>
          void this.act(() => this.client.postIssue(caseId, actor, criterion.value, text.value)),
        );
        wrap.append(criterion, text, button);
        break;
      }
      case "resolve": {
        const issueSelect = el("select") as HTMLSelectElement;
        for (const issueId of resolvableIssues(reviewCase, actor)) {
          const option = el("option", undefined, issueId) as HTMLOptionElement;
          option.value = issueId;
          issueSelect.appendChild(option);
        }
        const resolution = el("input") as HTMLInputElement;
        resolution.placeholder = "resolution";
        button.addEventListener("click", () =>
          void this.act(() =>
            this.client.resolveIssue(caseId, issueSelect.value, actor, resolution.value),
          ),
        );
        wrap.append(issueSelect, resolution, button);
        break;
      }
      case "verdict": {
        const verdict = el("select") as HTMLSelectElement;
        for (const option of ["approve", "request_changes", "reject"]) {
          const node = el("option", undefined, option) as HTMLOptionElement;
          node.value = option;
          verdict.appendChild(node);
        }
        button.addEventListener("click", () =>
          void this.act(() => this.client.verdict(caseId, actor, verdict.value)),
        );
        wrap.append(verdict, button);
        break;
      }
      case "request-changes":
        button.addEventListener("click", () =>
          void this.act(() => this.client.requestChanges(caseId, actor)),
        );
        wrap.appendChild(button);
        break;
      case "resubmit":
        button.addEventListener("click", () =>
          void this.act(() => this.client.resubmit(caseId, actor)),
        );
        wrap.appendChild(button);
        break;
      case "decide": {
        const rationale = el("input") as HTMLInputElement;
        rationale.placeholder = "rationale (required to reject)";
        button.addEventListener("click", () =>
          void this.act(() => this.client.decide(caseId, actor, rationale.value)),
        );
        wrap.append(rationale, button);
        break;
      }
      case "publish":
        button.addEventListener("click", () => void this.act(() => this.client.publish(caseId)));
        wrap.appendChild(button);
        break;
      default:
        wrap.appendChild(el("span", "unknown-action", action));
    }
    return wrap;
  }
}
