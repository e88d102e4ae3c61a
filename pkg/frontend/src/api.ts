// Typed client for the /api/v1 registry and review endpoints.

export type SearchHit = {
  id: string;
  score: number;
  matched_fields: string[];
  snippet: string;
};

export type ValidationIssue = {
  severity: "error" | "warning";
  field: string;
  code: string;
  message: string;
};

export type ProjectRecord = {
  id: string;
  manifest: {
    okhv: string;
    title: string;
    description?: string;
    contact: { name: string; email?: string; affiliation?: string };
    license: string;
    "documentation-home"?: string;
    keywords?: string[];
    "development-stage"?: string;
    version?: string;
    [key: string]: unknown;
  };
  provenance: { fetched_from: string; fetched_at: string; content_hash: string };
  validation: { issues: ValidationIssue[] };
};

export type RelatedItem = {
  ref: string;
  kind: string;
  distance: number;
  resolved: boolean;
};

export type Stats = {
  doc_count: number;
  edges: Record<string, number>;
  invalid_count: number;
  license_classes: Record<string, number>;
  development_stages: Record<string, number>;
};

export type CaseState =
  | "submitted"
  | "under_review"
  | "revisions_requested"
  | "converged"
  | "decided"
  | "published";

export type Role = "author" | "reviewer" | "editor";

export type Issue = {
  issue_id: string;
  opened_by: string;
  criterion_id: string;
  text: string;
  status: "open" | "resolved";
  resolution: string | null;
};

export type ReviewCase = {
  case_id: string;
  subject: { project_id: string; content_hash: string; ruleset_id: string };
  submitter: string;
  editor: string;
  criteria: string[];
  state: CaseState;
  reviewers: string[];
  issues: Issue[];
  verdicts: Record<string, string>;
  round: number;
  round_cap: number;
  decision: { outcome: string; rationale: string } | null;
};

export type Attestation = {
  case_id: string;
  subject: { project_id: string; content_hash: string; ruleset_id: string };
  decision: { outcome: string; rationale: string };
  reviewer_count: number;
  rounds: number;
  issued_at: string;
  record_hash: string;
};

export type TransitionTable = Record<CaseState, Record<Role, string[]>>;

export type SearchFilters = {
  stage?: string;
  license_class?: string;
  keyword?: string;
};

export class ApiError extends Error {
  status: number;
  code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "UNKNOWN";
  let message = response.statusText;
  try {
    const body = (await response.json()) as { code?: string; message?: string };
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, code, message);
}

export class OkhClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}/api/v1${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  search(query: string, filters: SearchFilters = {}, limit = 10): Promise<SearchHit[]> {
    const params = new URLSearchParams({ q: query, limit: String(limit) });
    if (filters.stage) params.set("stage", filters.stage);
    if (filters.license_class) params.set("license_class", filters.license_class);
    if (filters.keyword) params.set("keyword", filters.keyword);
    return this.request("GET", `/search?${params.toString()}`);
  }

  project(id: string): Promise<ProjectRecord> {
    return this.request("GET", `/projects/${encodeURIComponent(id)}`);
  }

  related(id: string, depth = 1, kind?: string): Promise<RelatedItem[]> {
    const params = new URLSearchParams({ depth: String(depth) });
    if (kind) params.set("kind", kind);
    return this.request("GET", `/projects/${encodeURIComponent(id)}/related?${params.toString()}`);
  }

  stats(): Promise<Stats> {
    return this.request("GET", "/stats");
  }

  transitions(): Promise<TransitionTable> {
    return this.request("GET", "/reviews/transitions");
  }

  openReview(body: {
    project_id: string;
    ruleset_id?: string;
    submitter: string;
    editor: string;
    content_hash?: string;
  }): Promise<ReviewCase> {
    return this.request("POST", "/reviews", body);
  }

  getReview(caseId: string): Promise<ReviewCase> {
    return this.request("GET", `/reviews/${encodeURIComponent(caseId)}`);
  }

  assign(caseId: string, reviewer: string): Promise<ReviewCase> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/assign`, { reviewer });
  }

  postIssue(caseId: string, reviewer: string, criterionId: string, text: string): Promise<ReviewCase> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/issues`, {
      reviewer,
      criterion_id: criterionId,
      text,
    });
  }

  resolveIssue(caseId: string, issueId: string, actor: string, resolution: string): Promise<ReviewCase> {
    return this.request(
      "POST",
      `/reviews/${encodeURIComponent(caseId)}/issues/${encodeURIComponent(issueId)}/resolve`,
      { actor, resolution },
    );
  }

  verdict(caseId: string, reviewer: string, verdict: string): Promise<ReviewCase> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/verdicts`, {
      reviewer,
      verdict,
    });
  }

  requestChanges(caseId: string, editor: string): Promise<ReviewCase> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/request-changes`, { editor });
  }

  resubmit(caseId: string, submitter: string): Promise<ReviewCase> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/resubmit`, { submitter });
  }

  decide(caseId: string, editor: string, rationale = ""): Promise<ReviewCase> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/decide`, {
      editor,
      rationale,
    });
  }

  publish(caseId: string): Promise<Attestation> {
    return this.request("POST", `/reviews/${encodeURIComponent(caseId)}/publish`);
  }

  attestation(caseId: string): Promise<Attestation> {
    return this.request("GET", `/attestations/${encodeURIComponent(caseId)}`);
  }
}
