// Search explorer pane: query + filters, ranked results, project detail
// with the relation graph as an adjacency list.

import type { OkhClient, ProjectRecord, RelatedItem, SearchFilters, SearchHit } from "./api.js";
import { ApiError } from "./api.js";
import { licenseClass } from "./licenses.js";

export type HitRow = {
  id: string;
  score: number;
  title: string;
  stage: string;
  licenseClass: string;
  keywords: string[];
  snippet: string;
};

/** Rows render in exactly the order the API returned the hits. */
export function hitRows(hits: SearchHit[], records: Map<string, ProjectRecord>): HitRow[] {
  return hits.map((hit) => {
    const record = records.get(hit.id);
    return {
      id: hit.id,
      score: hit.score,
      title: record?.manifest.title ?? hit.id,
      stage: record?.manifest["development-stage"] ?? "",
      licenseClass: record ? licenseClass(record.manifest.license) : "unknown",
      keywords: record?.manifest.keywords ?? [],
      snippet: hit.snippet,
    };
  });
}

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

export class SearchPane {
  private results: HTMLElement;
  private detail: HTMLElement;
  private banner: HTMLElement;
  private lastQuery = "";
  private lastFilters: SearchFilters = {};
  onSelect: ((id: string) => void) | null = null;

  constructor(
    private readonly client: OkhClient,
    private readonly root: HTMLElement,
  ) {
    this.banner = root.querySelector(".banner") as HTMLElement;
    this.results = root.querySelector(".results") as HTMLElement;
    this.detail = root.querySelector(".detail") as HTMLElement;

    const form = root.querySelector("form") as HTMLFormElement;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.runSearch();
    });
    const depth = root.querySelector(".depth-select") as HTMLSelectElement;
    depth.addEventListener("change", () => {
      const current = this.detail.dataset.projectId;
      if (current) void this.showDetail(current);
    });
  }

  private input(name: string): string {
    const field = this.root.querySelector(`[name=${name}]`) as HTMLInputElement | HTMLSelectElement;
    return field.value.trim();
  }

  async runSearch(): Promise<void> {
    const query = this.input("q");
    this.banner.textContent = "";
    this.banner.classList.remove("error");
    if (!query) {
      this.banner.textContent = "Enter a search query first.";
      return; // no request for an empty query
    }
    this.lastQuery = query;
    this.lastFilters = {};
    const stage = this.input("stage");
    const license = this.input("license_class");
    const keyword = this.input("keyword");
    if (stage) this.lastFilters.stage = stage;
    if (license) this.lastFilters.license_class = license;
    if (keyword) this.lastFilters.keyword = keyword;
    try {
      const hits = await this.client.search(query, this.lastFilters, 10);
      const records = new Map<string, ProjectRecord>();
      await Promise.all(
        hits.map(async (hit) => {
          records.set(hit.id, await this.client.project(hit.id));
        }),
      );
      this.renderResults(hitRows(hits, records));
    } catch (error) {
      this.showFailure(error, () => void this.runSearch());
    }
  }

  private renderResults(rows: HitRow[]): void {
    this.results.replaceChildren();
    if (rows.length === 0) {
      this.results.appendChild(el("p", "empty", "No projects matched."));
      return;
    }
    for (const row of rows) {
      const card = el("article", "hit");
      const head = el("header");
      const title = el("a", "hit-title", row.title);
      title.href = "#";
      title.addEventListener("click", (event) => {
        event.preventDefault();
        void this.showDetail(row.id);
        this.onSelect?.(row.id);
      });
      head.appendChild(title);
      head.appendChild(el("span", "score", row.score.toFixed(4)));
      card.appendChild(head);
      const chips = el("div", "chips");
      if (row.stage) chips.appendChild(el("span", "chip stage", row.stage));
      chips.appendChild(el("span", `chip license ${row.licenseClass}`, row.licenseClass));
      for (const keyword of row.keywords) {
        chips.appendChild(el("span", "chip keyword", keyword));
      }
      card.appendChild(chips);
      card.appendChild(el("p", "snippet", row.snippet));
      this.results.appendChild(card);
    }
  }

  async showDetail(id: string): Promise<void> {
    const depth = Number((this.root.querySelector(".depth-select") as HTMLSelectElement).value);
    this.detail.dataset.projectId = id;
    try {
      const record = await this.client.project(id);
      const relatedItems = await this.client.related(id, depth);
      this.renderDetail(record, relatedItems);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.detail.replaceChildren(el("p", "empty", `Project not found: ${id}`));
        return;
      }
      this.showFailure(error, () => void this.showDetail(id));
    }
  }

  private renderDetail(record: ProjectRecord, relatedItems: RelatedItem[]): void {
    this.detail.replaceChildren();
    this.detail.appendChild(el("h3", undefined, record.manifest.title));
    const meta = el("dl", "meta");
    const add = (label: string, value: string | undefined) => {
      if (!value) return;
      meta.appendChild(el("dt", undefined, label));
      meta.appendChild(el("dd", undefined, value));
    };
    add("id", record.id);
    add("licence", `${record.manifest.license} (${licenseClass(record.manifest.license)})`);
    add("stage", record.manifest["development-stage"]);
    add("version", record.manifest.version);
    add("documentation", record.manifest["documentation-home"]);
    add("fetched", record.provenance.fetched_at);
    this.detail.appendChild(meta);

    const errors = record.validation.issues.filter((issue) => issue.severity === "error");
    if (errors.length > 0) {
      this.detail.appendChild(
        el("p", "invalid", `flagged invalid: ${errors.length} validation error(s)`),
      );
    }

    this.detail.appendChild(el("h4", undefined, "Related designs"));
    if (relatedItems.length === 0) {
      this.detail.appendChild(el("p", "empty", "No recorded relationships."));
      return;
    }
    const list = el("ul", "related");
    for (const item of relatedItems) {
      const entry = el("li");
      entry.appendChild(el("span", "distance", String(item.distance)));
      entry.appendChild(el("span", "kind", item.kind));
      if (item.resolved) {
        const link = el("a", "ref", item.ref);
        link.href = "#";
        link.addEventListener("click", (event) => {
          event.preventDefault();
          void this.showDetail(item.ref);
        });
        entry.appendChild(link);
      } else {
        entry.appendChild(el("span", "ref unresolved", `${item.ref} (unresolved)`));
      }
      list.appendChild(entry);
    }
    this.detail.appendChild(list);
  }

  private showFailure(error: unknown, retry: () => void): void {
    const message = error instanceof Error ? error.message : String(error);
    this.banner.replaceChildren();
    this.banner.classList.add("error");
    this.banner.appendChild(el("span", undefined, `Request failed: ${message} `));
    const button = el("button", "retry", "Retry");
    button.addEventListener("click", retry);
    this.banner.appendChild(button);
  }
}
