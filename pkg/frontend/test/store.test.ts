import { describe, expect, it } from "vitest";

import { LiveRunView } from "../src/store.js";
import { rec } from "./helpers.js";

describe("LiveRunView", () => {
  it("keeps records in ascending epoch order however they arrive", () => {
    const view = new LiveRunView();
    for (const e of [3, 1, 5, 2, 4]) {
      view.upsert(rec(e));
    }
    expect(view.records().map((r) => r.epoch)).toEqual([1, 2, 3, 4, 5]);
    expect(view.size).toBe(5);
  });

  it("replaces an epoch in place on replay", () => {
    const view = new LiveRunView();
    view.upsert(rec(1, { loss: 0.5 }));
    view.upsert(rec(2, { loss: 0.4 }));
    view.upsert(rec(1, { loss: 0.45 }));
    expect(view.size).toBe(2);
    expect(view.records()[0]!.loss).toBe(0.45);
  });

  it("starts empty with lastEpoch 0 and no badge", () => {
    const view = new LiveRunView();
    expect(view.records()).toEqual([]);
    expect(view.lastEpoch()).toBe(0);
    expect(view.latest()).toBeNull();
    expect(view.regionBadge()).toBeNull();
    expect(view.gaps()).toEqual([]);
  });

  it("reports a hole left by skipped epochs and clears it once filled", () => {
    const view = new LiveRunView();
    view.upsert(rec(1));
    view.upsert(rec(2));
    view.upsert(rec(5));
    expect(view.gaps()).toEqual([{ from: 3, to: 4 }]);
    expect(view.hasGaps()).toBe(true);
    view.upsert(rec(3));
    expect(view.gaps()).toEqual([{ from: 4, to: 4 }]);
    view.upsert(rec(4));
    expect(view.gaps()).toEqual([]);
    expect(view.hasGaps()).toBe(false);
  });

  it("evicts the oldest epochs beyond capacity", () => {
    const view = new LiveRunView(3);
    for (const e of [1, 2, 3, 4, 5]) {
      view.upsert(rec(e));
    }
    expect(view.records().map((r) => r.epoch)).toEqual([3, 4, 5]);
    expect(view.firstEpoch()).toBe(3);
    expect(view.lastEpoch()).toBe(5);
  });

  it("does not call evicted history before the window a gap", () => {
    const view = new LiveRunView(2);
    view.upsert(rec(1));
    view.upsert(rec(3));
    view.upsert(rec(5));
    expect(view.records().map((r) => r.epoch)).toEqual([3, 5]);
    expect(view.gaps()).toEqual([{ from: 4, to: 4 }]);
  });

  it("badge is exactly the latest record's region", () => {
    const view = new LiveRunView();
    view.upsert(rec(1, { region: "red" }));
    view.upsert(rec(2, { region: "green" }));
    expect(view.regionBadge()).toBe("green");
    view.upsert(rec(3, { region: "yellow" }));
    expect(view.regionBadge()).toBe("yellow");
  });

  it("holds a pending ack until its apply epoch shows up", () => {
    const view = new LiveRunView();
    view.upsert(rec(1));
    view.addAck({ accepted: true, kind: "set_learning_rate", applies_at_epoch: 3 });
    expect(view.pendingAcks()).toHaveLength(1);
    view.upsert(rec(2));
    expect(view.pendingAcks()).toHaveLength(1);
    view.upsert(rec(3));
    expect(view.pendingAcks()).toHaveLength(0);
  });

  it("drops an ack that is already visible when added", () => {
    const view = new LiveRunView();
    view.upsert(rec(4));
    view.addAck({ accepted: true, kind: "pause", applies_at_epoch: 4 });
    expect(view.pendingAcks()).toHaveLength(0);
  });

  it("rejects nonsense epochs and capacities", () => {
    expect(() => new LiveRunView(0)).toThrow(RangeError);
    const view = new LiveRunView();
    expect(() => view.upsert(rec(0))).toThrow(RangeError);
    expect(() => view.upsert(rec(1.5))).toThrow(RangeError);
  });

  it("keeps the last reported session metadata", () => {
    const view = new LiveRunView();
    expect(view.session).toBeNull();
    const info = { status: "running", epoch: 3, reason: null, config: {} };
    view.setSession(info);
    expect(view.session).toEqual(info);
  });

  it("clear() forgets records, acks, and session", () => {
    const view = new LiveRunView();
    view.upsert(rec(1));
    view.addAck({ accepted: true, kind: "stop", applies_at_epoch: 9 });
    view.setSession({ status: "running", epoch: 1, reason: null, config: {} });
    view.clear();
    expect(view.size).toBe(0);
    expect(view.pendingAcks()).toHaveLength(0);
    expect(view.session).toBeNull();
  });
});
