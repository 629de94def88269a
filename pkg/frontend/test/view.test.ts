import { describe, expect, it } from "vitest";

import type { SceneSnapshot, TopicMessage } from "../src/types.js";
import { applyMessage, initialView, seedSnapshots, setConnection } from "../src/view.js";

export function demoScene(): SceneSnapshot {
  return {
    objects: [
      { id: 1, class: "apple", position: [0.2, -0.1, 0.035], radius: 0.035 },
      { id: 2, class: "banana", position: [0.12, 0.1, 0.03], radius: 0.03 },
      { id: 3, class: "orange", position: [0.22, 0.06, 0.03], radius: 0.03 },
      { id: 4, class: "seed", position: [0.15, -0.14, 0.012], radius: 0.012 },
    ],
    drop_zones: { basket: [-0.15, 0.12, 0.03] },
    workbench: [-0.3, -0.3, 0.4, 0.3],
  };
}

function msg(topic: TopicMessage["topic"], seq: number, payload: unknown): TopicMessage {
  return { topic, seq, stamp: seq * 0.1, payload };
}

describe("applyMessage", () => {
  it("stores the latest scene snapshot", () => {
    const view = applyMessage(initialView(), msg("scene", 1, demoScene()));
    expect(view.scene?.objects).toHaveLength(4);
    expect(view.lastSeq["scene"]).toBe(1);
  });

  it("drops stale and duplicate messages so rendered seq never decreases", () => {
    let view = applyMessage(initialView(), msg("scene", 3, demoScene()));
    const replay = applyMessage(view, msg("scene", 3, { ...demoScene(), objects: [] }));
    expect(replay).toBe(view);
    const stale = applyMessage(view, msg("scene", 2, { ...demoScene(), objects: [] }));
    expect(stale.scene?.objects).toHaveLength(4);
  });

  it("records a gap when seq jumps", () => {
    let view = applyMessage(initialView(), msg("events", 1, { kind: "CommandAccepted", stamp: 0, payload: {} }));
    view = applyMessage(view, msg("events", 4, { kind: "PhaseChanged", stamp: 0.2, payload: { phase: "approach" } }));
    expect(view.gaps).toEqual(["events"]);
  });

  it("the first message on a topic is never a gap (global seq numbers)", () => {
    const fromStart = applyMessage(initialView(), msg("scene", 1, demoScene()));
    expect(fromStart.gaps).toEqual([]);
    const midStream = applyMessage(initialView(), msg("scene", 7, demoScene()));
    expect(midStream.gaps).toEqual([]);
  });

  it("keeps the event log in seq order", () => {
    let view = initialView();
    for (const seq of [1, 2, 3, 5]) {
      view = applyMessage(view, msg("events", seq, { kind: "PhaseChanged", stamp: seq, payload: { phase: `p${seq}` } }));
    }
    expect(view.events.map((e) => e.seq)).toEqual([1, 2, 3, 5]);
    expect(view.phaseTimeline).toEqual(["p1", "p2", "p3", "p5"]);
  });

  it("tracks target selection and clears it on completion", () => {
    let view = applyMessage(initialView(), msg("events", 1, {
      kind: "TargetSelected",
      stamp: 0.1,
      payload: { object_id: 3, class_name: "orange" },
    }));
    expect(view.selectedObjectId).toBe(3);
    view = applyMessage(view, msg("events", 2, {
      kind: "PickCompleted",
      stamp: 5,
      payload: { object_id: 3, class_name: "orange", drop_zone: "basket" },
    }));
    expect(view.selectedObjectId).toBeNull();
    expect(view.banner?.kind).toBe("ok");
  });

  it("surfaces pipeline errors as an error banner", () => {
    const view = applyMessage(initialView(), msg("events", 1, {
      kind: "Error",
      stamp: 0.1,
      payload: { error: "Unreachable", detail: "target out of workspace" },
    }));
    expect(view.banner?.kind).toBe("error");
    expect(view.banner?.text).toContain("Unreachable");
  });

  it("does not mutate the previous state", () => {
    const before = applyMessage(initialView(), msg("scene", 1, demoScene()));
    const frozen = JSON.stringify(before);
    applyMessage(before, msg("scene", 2, { ...demoScene(), objects: [] }));
    expect(JSON.stringify(before)).toBe(frozen);
  });
});

describe("seedSnapshots", () => {
  it("fills topics with no stream message yet", () => {
    const view = seedSnapshots(initialView(), { scene: demoScene() });
    expect(view.scene?.objects).toHaveLength(4);
  });

  it("never overrides stream-delivered state", () => {
    const streamed = applyMessage(initialView(), msg("scene", 2, demoScene()));
    const seeded = seedSnapshots(streamed, {
      scene: { ...demoScene(), objects: [] },
    });
    expect(seeded.scene?.objects).toHaveLength(4);
  });
});

describe("setConnection", () => {
  it("transitions status and is identity on no-change", () => {
    const view = initialView();
    const down = setConnection(view, "disconnected");
    expect(down.connection).toBe("disconnected");
    expect(setConnection(down, "disconnected")).toBe(down);
  });
});
