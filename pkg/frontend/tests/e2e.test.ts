// End-to-end: drive a full review flow through the typed client against a
// live fixture backend, and check search rendering order against the API.

import { spawn, type ChildProcess } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, test } from "vitest";

import { OkhClient } from "../src/api.js";
import type { ProjectRecord, ReviewCase, Role, TransitionTable } from "../src/api.js";
import { hitRows } from "../src/search.js";
import { controlsFor } from "../src/transitions.js";

const repoRoot = join(dirname(fileURLToPath(import.meta.url)), "..", "..");

let backend: ChildProcess;
let client: OkhClient;
let table: TransitionTable;

function startBackend(): Promise<string> {
  return new Promise((resolve, reject) => {
    backend = spawn("python3", [join(repoRoot, "tools", "serve_fixture.py")], {
      cwd: repoRoot,
      stdio: ["ignore", "pipe", "inherit"],
    });
    const timer = setTimeout(() => reject(new Error("backend did not start")), 30_000);
    backend.stdout!.on("data", (chunk: Buffer) => {
      const match = /PORT (\d+)/.exec(chunk.toString());
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[1]}`);
      }
    });
    backend.on("exit", (code) => reject(new Error(`backend exited early (${code})`)));
  });
}

beforeAll(async () => {
  const base = await startBackend();
  client = new OkhClient(base);
  table = await client.transitions();
}, 40_000);

afterAll(() => {
  backend?.kill();
});

describe("search explorer against the live backend", () => {
  test("rendered rows preserve the API's ranked order", async () => {
    const hits = await client.search("pump", {}, 10);
    expect(hits.length).toBeGreaterThan(0);
    const records = new Map<string, ProjectRecord>();
    for (const hit of hits) {
      records.set(hit.id, await client.project(hit.id));
    }
    const rows = hitRows(hits, records);
    expect(rows.map((r) => r.id)).toEqual(hits.map((h) => h.id));
    expect(rows[0].licenseClass).not.toBe("");
  });

  test("unknown project detail is a 404 with a stable code", async () => {
    await expect(client.project("https://nowhere.example/x")).rejects.toMatchObject({
      status: 404,
      code: "UNKNOWN_ID",
    });
  });

  test("relation graph walk returns the fixture's adjacency", async () => {
    const items = await client.related("https://docs.ohlab.org/axial-drone", 2);
    const refs = items.map((item) => item.ref);
    expect(refs).toContain("https://docs.ohlab.org/axial-mapper");
    expect(refs).toContain("https://docs.ohlab.org/axial-heavy");
  });
});

describe("review console flow against the live backend", () => {
  const actorFor = (role: Role) =>
    role === "author" ? "author1" : role === "editor" ? "editor1" : "rev1";

  function expectControlsLegal(reviewCase: ReviewCase) {
    for (const role of ["author", "reviewer", "editor"] as Role[]) {
      const controls = controlsFor(table, reviewCase, role, actorFor(role));
      for (const control of controls) {
        expect(table[reviewCase.state][role]).toContain(control);
      }
    }
  }

  test("open -> assign x2 -> issue -> resolve -> approve x2 -> decide -> publish", async () => {
    let reviewCase = await client.openReview({
      project_id: "https://docs.ohlab.org/open-flow-pump",
      ruleset_id: "generic-mech",
      submitter: "author1",
      editor: "editor1",
    });
    expect(reviewCase.state).toBe("submitted");
    expectControlsLegal(reviewCase);

    reviewCase = await client.assign(reviewCase.case_id, "rev1");
    expect(reviewCase.state).toBe("submitted");
    reviewCase = await client.assign(reviewCase.case_id, "rev2");
    expect(reviewCase.state).toBe("under_review");
    expectControlsLegal(reviewCase);

    reviewCase = await client.postIssue(
      reviewCase.case_id, "rev1", "bom-make", "BOM needs a revision column",
    );
    expect(reviewCase.issues).toHaveLength(1);
    expect(reviewCase.issues[0].status).toBe("open");

    reviewCase = await client.resolveIssue(
      reviewCase.case_id, reviewCase.issues[0].issue_id, "rev1", "column added",
    );
    expect(reviewCase.issues[0].status).toBe("resolved");
    expectControlsLegal(reviewCase);

    reviewCase = await client.verdict(reviewCase.case_id, "rev1", "approve");
    expect(reviewCase.state).toBe("under_review");
    reviewCase = await client.verdict(reviewCase.case_id, "rev2", "approve");
    expect(reviewCase.state).toBe("converged");
    expectControlsLegal(reviewCase);

    reviewCase = await client.decide(reviewCase.case_id, "editor1");
    expect(reviewCase.state).toBe("decided");
    expect(reviewCase.decision).toEqual({ outcome: "accepted", rationale: "" });

    const attestation = await client.publish(reviewCase.case_id);
    expect(attestation.case_id).toBe(reviewCase.case_id);
    expect(attestation.decision.outcome).toBe("accepted");
    expect(attestation.record_hash).toMatch(/^[0-9a-f]{64}$/);

    reviewCase = await client.getReview(reviewCase.case_id);
    expect(reviewCase.state).toBe("published");
    expectControlsLegal(reviewCase);

    const stored = await client.attestation(reviewCase.case_id);
    expect(stored).toEqual(attestation);
  }, 30_000);

  test("illegal action surfaces the server's code verbatim", async () => {
    const reviewCase = await client.openReview({
      project_id: "https://docs.ohlab.org/axial-drone",
      ruleset_id: "generic-mech",
      submitter: "author1",
      editor: "editor1",
    });
    await expect(client.decide(reviewCase.case_id, "editor1")).rejects.toMatchObject({
      status: 409,
      code: "WRONG_STATE",
    });
    // The console would not have rendered the button in the first place.
    expect(controlsFor(table, reviewCase, "editor", "editor1")).not.toContain("decide");
  });
});
