import { describe, expect, it } from "vitest";

import { ApiError, ReviewApi } from "../src/api.js";
import { ReviewController } from "../src/controller.js";
import { compileEnabled, sortRows } from "../src/model.js";
import { renderApp } from "../src/render.js";
import { SEP, weatherStub } from "./stub.js";

const ROW_THING = `row${SEP}Thing`;
const ROW_OTHER = `row${SEP}Other`;
const CHILD_OTHER = `child${SEP}Other`;

async function loadedController(stub = weatherStub()) {
  const api = new ReviewApi("", stub.fetchFn);
  const controller = new ReviewController(api, stub.sessionId);
  await controller.load();
  return { stub, api, controller };
}

function statusOf(controller: ReviewController, pairId: string): string | undefined {
  return controller.state.rows.find((r) => r.pairId === pairId)?.status;
}

describe("load_session_view", () => {
  it("mirrors GET /candidates item for item, recommended first then score desc", async () => {
    const { stub, controller } = await loadedController();
    const payload = stub.candidates();
    expect(controller.state.rows.map(({ snippets, ...rest }) => rest)).toEqual(payload);
    expect(controller.state.rows.map((r) => r.pairId)).toEqual([
      ROW_THING,
      ROW_OTHER,
      CHILD_OTHER,
    ]);
    expect(sortRows(payload)).toEqual(payload);
  });

  it("starts fully pending with progress 0/total and compile disabled", async () => {
    const { controller } = await loadedController();
    expect(controller.state.progress).toEqual({ decided: 0, total: 3 });
    expect(controller.state.rows.every((r) => r.status === "PENDING")).toBe(true);
    expect(compileEnabled(controller.state)).toBe(false);
    const html = renderApp(controller.state);
    expect(html).toContain("0/3 decided");
    expect(html).toMatch(/<button id="compile"[^>]* disabled/);
  });

  it("attaches annotated sample snippets and features to rows", async () => {
    const { controller } = await loadedController();
    const row = controller.state.rows.find((r) => r.pairId === ROW_THING);
    expect(row?.snippets[0]?.snippet).toEqual({ a: 1, when: "2024-06-01" });
    expect(row?.features).toHaveLength(7);
    const html = renderApp(controller.state);
    expect(html).toContain("propertyJaccard 0.60");
    expect(html).toContain("1 annotated sample(s)");
  });

  it("shows a session-not-found view state for an unknown id", async () => {
    const stub = weatherStub();
    const controller = new ReviewController(new ReviewApi("", stub.fetchFn), "rs-missing");
    await controller.load();
    expect(controller.state.loaded).toBe(false);
    expect(controller.state.rows).toEqual([]);
    expect(controller.state.error).toContain("UnknownSession");
    expect(renderApp(controller.state)).toContain("error-banner");
  });
});

describe("submit_decision", () => {
  it("approve propagates SUPERSEDED rendering to competitors", async () => {
    const { controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");

    expect(statusOf(controller, ROW_THING)).toBe("APPROVED");
    expect(statusOf(controller, ROW_OTHER)).toBe("SUPERSEDED");
    expect(statusOf(controller, CHILD_OTHER)).toBe("PENDING");
    expect(controller.state.progress).toEqual({ decided: 2, total: 3 });

    const html = renderApp(controller.state);
    expect(html).toMatch(
      new RegExp(`<tr class="status-superseded[^"]*" data-row="row${SEP}Other"`),
    );
    expect(html).toMatch(
      new RegExp(`<tr class="status-approved[^"]*" data-row="row${SEP}Thing"`),
    );
  });

  it("refetches after every decision instead of predicting locally", async () => {
    const { stub, controller } = await loadedController();
    const before = stub.calls.length;
    await controller.decide(ROW_THING, "approve");
    const after = stub.calls.slice(before);
    expect(after[0]).toBe(`POST api/sessions/${stub.sessionId}/candidates/${ROW_THING}/decision`);
    expect(after).toContain(`GET api/sessions/${stub.sessionId}/candidates`);
    expect(after).toContain(`GET api/sessions/${stub.sessionId}`);
  });

  it("URL-encodes the non-ASCII pair separator in decision requests", async () => {
    const stub = weatherStub();
    const seen: string[] = [];
    const api = new ReviewApi("", (input, init) => {
      seen.push(input);
      return stub.fetchFn(input, init);
    });
    const controller = new ReviewController(api, stub.sessionId);
    await controller.load();
    await controller.decide(ROW_THING, "approve");
    const decision = seen.find((u) => u.endsWith("/decision"));
    expect(decision).toContain("row%E2%86%92Thing");
    expect(decision).not.toContain(SEP);
  });

  it("remap onto an occupied target shows an inline error without state change", async () => {
    const { stub, controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");
    const rowsBefore = structuredClone(controller.state.rows);
    const serverBefore = stub.candidates();

    await controller.decide(CHILD_OTHER, "remap", "Thing");

    expect(controller.state.error).toContain("TargetConflict");
    expect(controller.state.rows).toEqual(rowsBefore);
    expect(stub.candidates()).toEqual(serverBefore);
    const html = renderApp(controller.state);
    expect(html).toContain('<div class="error-banner" role="alert">');
    expect(html).toContain("TargetConflict");
  });

  it("remap to a free target synthesizes, approves, and propagates", async () => {
    const { controller } = await loadedController();
    await controller.decide(ROW_OTHER, "remap", "Shop");

    const synthesized = controller.state.rows.find((r) => r.pairId === `row${SEP}Shop`);
    expect(synthesized?.status).toBe("APPROVED");
    expect(synthesized?.recommended).toBe(false);
    expect(statusOf(controller, ROW_THING)).toBe("SUPERSEDED");
    expect(controller.state.approvedPairs).toEqual([{ source: "row", target: "Shop" }]);
  });

  it("a failed decision clears on the next successful one", async () => {
    const { controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");
    await controller.decide(ROW_THING, "approve"); // second approve is InvalidTransition
    expect(controller.state.error).toContain("InvalidTransition");
    await controller.decide(CHILD_OTHER, "approve");
    expect(controller.state.error).toBeNull();
    expect(statusOf(controller, CHILD_OTHER)).toBe("APPROVED");
  });

  it("withdrawing an approval revives unblocked superseded competitors", async () => {
    const { controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");
    expect(statusOf(controller, ROW_OTHER)).toBe("SUPERSEDED");
    await controller.decide(ROW_THING, "reject");
    expect(statusOf(controller, ROW_OTHER)).toBe("PENDING");
    expect(statusOf(controller, ROW_THING)).toBe("REJECTED");
  });
});

describe("compile gating", () => {
  it("is disabled until at least one pair is APPROVED", async () => {
    const { controller } = await loadedController();
    expect(compileEnabled(controller.state)).toBe(false);
    await controller.decide(ROW_THING, "approve");
    expect(compileEnabled(controller.state)).toBe(true);
    expect(renderApp(controller.state)).toMatch(/<button id="compile"(?![^>]*disabled)/);
  });

  it("rejecting the only approval disables compile again", async () => {
    const { controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");
    await controller.decide(ROW_THING, "reject");
    expect(compileEnabled(controller.state)).toBe(false);
    expect(renderApp(controller.state)).toMatch(/<button id="compile"[^>]* disabled/);
  });

  it("compiles the approved pairs and offers the config as a download", async () => {
    const { stub, controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");
    await controller.compile();
    expect(stub.compileCount).toBe(1);
    const config = controller.state.config as { rules: { sourceConcept: string }[] };
    expect(config.rules.map((r) => r.sourceConcept)).toEqual(["row"]);
    const html = renderApp(controller.state);
    expect(html).toContain('download="translation_config.json"');
    expect(html).toContain("data:application/json");
  });

  it("surface a compile attempt with nothing approved as an inline error", async () => {
    const stub = weatherStub();
    const api = new ReviewApi("", stub.fetchFn);
    const controller = new ReviewController(api, stub.sessionId);
    await controller.load();
    await controller.compile();
    expect(controller.state.error).toContain("NoApprovedPairs");
    expect(controller.state.config).toBeNull();
  });
});

describe("server as the only authority", () => {
  it("a fresh controller view reproduces the mutated server state exactly", async () => {
    const { stub, controller } = await loadedController();
    await controller.decide(ROW_THING, "approve");
    await controller.decide(CHILD_OTHER, "approve");

    const reloaded = new ReviewController(new ReviewApi("", stub.fetchFn), stub.sessionId);
    await reloaded.load();
    expect(reloaded.state.rows).toEqual(controller.state.rows);
    expect(reloaded.state.progress).toEqual(controller.state.progress);
    expect(renderApp(reloaded.state)).toEqual(renderApp(controller.state));
  });

  it("ApiError carries the server's code, message, and HTTP status", async () => {
    const stub = weatherStub();
    const api = new ReviewApi("", stub.fetchFn);
    await expect(api.decide(stub.sessionId, ROW_THING, "explode")).rejects.toMatchObject({
      name: "ApiError",
      code: "InvalidTransition",
      status: 409,
    });
    await expect(api.summary("rs-none")).rejects.toBeInstanceOf(ApiError);
  });
});
