import { beforeEach, describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { CompareView } from "../src/compare.js";
import { SessionView } from "../src/session.js";
import { MockService } from "./mock-service.js";

let mock: MockService;
let client: ServiceClient;

beforeEach(() => {
  mock = new MockService();
  client = new ServiceClient("http://mock", mock.fetchFn);
});

async function sessionWithReplacementPair() {
  const view = await SessionView.create(client);
  await view.submitAndPoll("full", undefined, undefined, 0);
  await view.submitAndPoll("replace_bg", { prompt_bg: "a beach" }, undefined, 0);
  return view;
}

describe("side-by-side comparison", () => {
  it("same layerset twice gives pixel-identical panes", async () => {
    const view = await sessionWithReplacementPair();
    const [id] = view.state.history;
    const cmp = new CompareView(client, view.state.sessionId);
    await cmp.load(id, id, "composite");
    expect(cmp.panesIdentical()).toBe(true);
  });

  it("foreground panes are identical across a background-replacement pair", async () => {
    const view = await sessionWithReplacementPair();
    const [before, after] = view.state.history;
    const cmp = new CompareView(client, view.state.sessionId);

    await cmp.load(before, after, "foreground");
    expect(cmp.panesIdentical()).toBe(true);

    await cmp.load(before, after, "background");
    expect(cmp.panesIdentical()).toBe(false);
    await cmp.load(before, after, "composite");
    expect(cmp.panesIdentical()).toBe(false);
  });

  it("renders a placeholder for a deleted layerset without crashing", async () => {
    const view = await sessionWithReplacementPair();
    const [keep] = view.state.history;
    const cmp = new CompareView(client, view.state.sessionId);
    await cmp.load(keep, "ls-gone", "foreground");
    expect(cmp.left?.bytes).not.toBeNull();
    expect(cmp.right?.bytes).toBeNull();
    expect(cmp.panesIdentical()).toBe(false);
  });

  it("pan and zoom apply one shared transform to both panes", async () => {
    const view = await sessionWithReplacementPair();
    const [a, b] = view.state.history;
    const cmp = new CompareView(client, view.state.sessionId);
    await cmp.load(a, b, "composite");
    cmp.panBy(10, -4);
    cmp.zoomAt(2, 100, 100);
    expect(cmp.transform.zoom).toBe(2);
    expect(cmp.transform.panX).toBe(100 - (100 - 10) * 2);
    expect(cmp.transform.panY).toBe(100 - (100 - -4) * 2);
  });
});

describe("no client-side generation", () => {
  it("every displayed byte comes from the service", async () => {
    const view = await SessionView.create(client);
    await view.submitAndPoll("full", undefined, undefined, 0);
    const [id] = view.state.history;
    const served = mock.sessions.get(view.state.sessionId)!
      .layersets.get(id)!.layers.get("composite")!;
    expect(view.state.tabs.composite).toEqual(served);
  });
});
