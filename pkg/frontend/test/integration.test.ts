/**
 * End-to-end check against a live `agribot serve` process: the console's
 * own stream client, reducer, renderer, and command submitter drive a
 * seeded demo run — connect, render the 4-object scene, submit
 * "pick the orange", watch the phase timeline end in PickCompleted, and
 * see the orange relocated to the drop zone.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { submitCommand } from "../src/commands.js";
import { fetchSnapshots } from "../src/snapshots.js";
import { StreamClient, streamUrl, type SocketLike } from "../src/stream.js";
import {
  applyMessage,
  initialView,
  seedSnapshots,
  setConnection,
  type ViewState,
} from "../src/view.js";
import { classColor, renderWorkbench, type Canvas2D } from "../src/workbench.js";

const PORT = 18030 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;
const SCENARIO = new URL("../../src/agribot/data/demo.scn", import.meta.url).pathname;

let server: ChildProcess;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const r = await fetch(`${BASE}/api/v1/scene`);
      if (r.status === 200) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("server did not come up");
}

beforeAll(async () => {
  server = spawn("agribot", ["serve", SCENARIO, "--port", String(PORT)], {
    stdio: "ignore",
  });
  await waitForServer();
}, 30_000);

afterAll(() => {
  server?.kill();
});

describe("console against a live serve instance", () => {
  it("runs the full pick-the-orange flow", async () => {
    let view: ViewState = initialView();
    const client = new StreamClient(
      streamUrl(BASE, ["scene", "arm_state", "detections", "events"]),
      (msg) => {
        view = applyMessage(view, msg);
      },
      (status) => {
        view = setConnection(view, status);
        if (status === "connected") {
          void fetchSnapshots((url) => fetch(url), BASE).then((seed) => {
            view = seedSnapshots(view, seed);
          });
        }
      },
      (url) => new WebSocket(url) as unknown as SocketLike,
    );
    client.start();

    const until = async (pred: () => boolean, ms: number, what: string) => {
      const deadline = Date.now() + ms;
      while (Date.now() < deadline) {
        if (pred()) {
          return;
        }
        await new Promise((resolve) => setTimeout(resolve, 100));
      }
      throw new Error(`timed out waiting for ${what}`);
    };

    await until(() => view.connection === "connected" && view.scene !== null, 10_000, "scene");

    // the demo scene renders 4 class-colored markers
    const markers = countMarkers(view);
    expect(markers).toBe(4);

    // submit the command through the console's own path
    const result = await submitCommand(
      (url, init) => fetch(url, init),
      BASE,
      "pick the orange",
    );
    expect(result.ok).toBe(true);
    expect(result.banner.text).toBe("Accepted: pick the orange");
    expect(result.candidates[0].score).toBe(1);

    // phase timeline accumulates from PhaseChanged events and the run ends
    // in PickCompleted
    await until(
      () =>
        view.events.some((e) => e.kind === "PickCompleted") &&
        view.phaseTimeline.at(-1) === "done",
      25_000,
      "PickCompleted + homed",
    );
    expect(view.phaseTimeline[0]).toBe("approach");
    expect(view.phaseTimeline).toContain("grasp");
    expect(view.phaseTimeline.at(-1)).toBe("done");
    const seqs = view.events.map((e) => e.seq);
    expect([...seqs].sort((a, b) => a - b)).toEqual(seqs);
    expect(view.gaps).toEqual([]);

    // the relocated orange shows at the drop zone in the next scene frame
    await until(() => {
      const orange = view.scene?.objects.find((o) => o.class === "orange");
      return (
        orange !== undefined &&
        Math.abs(orange.position[0] - -0.15) < 1e-9 &&
        Math.abs(orange.position[1] - 0.12) < 1e-9
      );
    }, 10_000, "orange relocation");

    client.stop();
  }, 60_000);
});

function countMarkers(view: ViewState): number {
  const ops: { op: string; fillStyle: string; next?: string }[] = [];
  const ctx = {
    fillStyle: "",
    strokeStyle: "",
    lineWidth: 1,
    font: "",
    globalAlpha: 1,
    textAlign: "left",
  } as Canvas2D;
  const record = (op: string) => (..._args: unknown[]) => {
    ops.push({ op, fillStyle: ctx.fillStyle });
  };
  for (const name of [
    "clearRect", "fillRect", "strokeRect", "beginPath", "arc",
    "moveTo", "lineTo", "fill", "stroke", "fillText",
  ]) {
    (ctx as unknown as Record<string, unknown>)[name] = record(name);
  }
  renderWorkbench(ctx, view, 720, 540);
  const classColors = new Set(["apple", "banana", "orange", "seed"].map(classColor));
  let count = 0;
  for (let i = 0; i < ops.length; i++) {
    if (ops[i].op === "arc" && ops[i + 1]?.op === "fill" && classColors.has(ops[i].fillStyle)) {
      count++;
    }
  }
  return count;
}
