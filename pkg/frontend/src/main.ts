import { OkhClient } from "./api.js";
import { ReviewConsole } from "./review.js";
import { SearchPane } from "./search.js";

async function init(): Promise<void> {
  const base =
    (window as { __OKH_API_BASE__?: string }).__OKH_API_BASE__ ?? window.location.origin;
  const client = new OkhClient(base);
  const table = await client.transitions();

  const searchPane = new SearchPane(client, document.getElementById("search-pane")!);
  const reviewConsole = new ReviewConsole(client, table, document.getElementById("review-pane")!);

  // Selecting a search hit pre-fills the review pane's subject field.
  searchPane.onSelect = (id) => {
    const field = document.querySelector(
      "#review-pane [name=project_id]",
    ) as HTMLInputElement | null;
    if (field) field.value = id;
  };

  const stats = await client.stats();
  const footer = document.getElementById("stats")!;
  footer.textContent =
    `${stats.doc_count} projects indexed, ` +
    `${Object.values(stats.edges).reduce((a, b) => a + b, 0)} relationship edges, ` +
    `${stats.invalid_count} flagged invalid`;
  void reviewConsole; // instantiated for its event wiring
}

document.addEventListener("DOMContentLoaded", () => {
  void init();
});
