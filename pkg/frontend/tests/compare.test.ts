import { describe, expect, it } from "vitest";

import type { ComparePayload } from "../src/types.js";
import { MAX_COMPARE, SelectionStore } from "../src/state.js";
import { comparisonView, GUIDANCE } from "../src/viewmodels/comparison.js";
import { fixture } from "./helpers.js";

describe("comparison selection cap", () => {
  it("accepts up to three clusters and rejects the fourth", () => {
    const store = new SelectionStore();
    expect(store.toggleCluster("a")).toBe(true);
    expect(store.toggleCluster("b")).toBe(true);
    expect(store.toggleCluster("c")).toBe(true);
    expect(store.comparedClusters()).toEqual(["a", "b", "c"]);

    const generation = store.generation;
    expect(store.toggleCluster("d")).toBe(false);
    expect(store.comparedClusters()).toEqual(["a", "b", "c"]);
    // A rejected toggle is a no-op: no change, no notification.
    expect(store.generation).toBe(generation);
  });

  it("frees a slot when a selected cluster is toggled off", () => {
    const store = new SelectionStore();
    for (const id of ["a", "b", "c"]) {
      store.toggleCluster(id);
    }
    expect(store.toggleCluster("b")).toBe(true);
    expect(store.comparedClusters()).toEqual(["a", "c"]);
    expect(store.toggleCluster("d")).toBe(true);
    expect(store.comparedClusters()).toEqual(["a", "c", "d"]);
    expect(MAX_COMPARE).toBe(3);
  });

  it("notifies subscribers of accepted changes only", () => {
    const store = new SelectionStore();
    let calls = 0;
    const unsubscribe = store.subscribe(() => {
      calls += 1;
    });
    store.toggleCluster("a");
    store.toggleCluster("b");
    store.toggleCluster("c");
    store.toggleCluster("d");
    expect(calls).toBe(3);
    unsubscribe();
    store.toggleCluster("a");
    expect(calls).toBe(3);
  });

  it("lets async responders detect a stale selection", () => {
    const store = new SelectionStore();
    store.toggleCluster("a");
    const generation = store.generation;
    expect(store.isCurrent(generation)).toBe(true);
    store.toggleCluster("b");
    expect(store.isCurrent(generation)).toBe(false);
  });
});

describe("comparison radar overlays", () => {
  it("shows guidance until two clusters are selected", () => {
    expect(comparisonView(null, 170).guidance).toBe(GUIDANCE);
    const pair = fixture<ComparePayload>("compare-pair");
    const single = { ...pair, ids: [pair.ids[0]], clusters: [pair.clusters[0]] };
    expect(comparisonView(single, 170).guidance).toBe(GUIDANCE);
    expect(comparisonView(pair, 170).guidance).toBeNull();
  });

  it("renders the same cluster selected twice as perfectly overlapping radars", () => {
    const payload = fixture<ComparePayload>("compare-same");
    expect(payload.ids[0]).toBe(payload.ids[1]);
    const view = comparisonView(payload, 170);
    expect(view.overlays).toHaveLength(2);
    const [first, second] = view.overlays;
    expect(first.polygon).toBe(second.polygon);
    expect(first.vertices).toEqual(second.vertices);
    expect(first.rings).toEqual(second.rings);
  });

  it("keeps distinct clusters on distinct polygons", () => {
    const payload = fixture<ComparePayload>("compare-pair");
    const view = comparisonView(payload, 170);
    expect(view.overlays[0].polygon).not.toBe(view.overlays[1].polygon);
  });
});
