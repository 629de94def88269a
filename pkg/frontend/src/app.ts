/**
 * Console entry point: wires the stream client, command form, canvas, and
 * side panels together.  All state lives in one ViewState folded by the
 * pure reducer in view.ts; this file only does DOM plumbing.
 */

import { formatCandidates, submitCommand } from "./commands.js";
import { fetchSnapshots } from "./snapshots.js";
import { StreamClient, streamUrl, type SocketLike } from "./stream.js";
import {
  applyMessage,
  initialView,
  seedSnapshots,
  setConnection,
  type ViewState,
} from "./view.js";
import { renderWorkbench, type Canvas2D } from "./workbench.js";

const TOPICS = ["scene", "arm_state", "detections", "events"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function main(): void {
  const canvas = el<HTMLCanvasElement>("workbench");
  const ctx = canvas.getContext("2d") as unknown as Canvas2D;
  const form = el<HTMLFormElement>("command-form");
  const input = el<HTMLInputElement>("command-input");
  const banner = el<HTMLDivElement>("banner");
  const candidatesPanel = el<HTMLUListElement>("candidates");
  const eventLog = el<HTMLUListElement>("event-log");
  const timeline = el<HTMLDivElement>("phase-timeline");
  const armPanel = el<HTMLDivElement>("arm-panel");
  const baseUrl = window.location.origin;

  let view: ViewState = initialView();

  const redraw = () => {
    renderWorkbench(ctx, view, canvas.width, canvas.height);
    renderPanels(view, { banner, candidatesPanel, eventLog, timeline, armPanel });
  };

  const client = new StreamClient(
    streamUrl(baseUrl, TOPICS),
    (msg) => {
      view = applyMessage(view, msg);
      redraw();
    },
    (status) => {
      view = setConnection(view, status);
      redraw();
      if (status === "connected") {
        // the stream only carries changes; seed the initial snapshots
        void fetchSnapshots((url) => fetch(url), baseUrl).then((seed) => {
          view = seedSnapshots(view, seed);
          redraw();
        });
      }
    },
    (url) => new WebSocket(url) as unknown as SocketLike,
  );
  client.start();

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const text = input.value.trim();
    if (!text) {
      return;
    }
    view = { ...view, pendingCommand: text, banner: null };
    redraw();
    void submitCommand(
      (url, init) => fetch(url, init),
      baseUrl,
      text,
    ).then((result) => {
      view = {
        ...view,
        pendingCommand: null,
        candidates: result.candidates,
        banner: result.banner,
        phaseTimeline: result.ok ? [] : view.phaseTimeline,
      };
      if (result.ok) {
        input.value = "";
      }
      redraw();
    });
  });

  redraw();
}

interface Panels {
  banner: HTMLDivElement;
  candidatesPanel: HTMLUListElement;
  eventLog: HTMLUListElement;
  timeline: HTMLDivElement;
  armPanel: HTMLDivElement;
}

function renderPanels(view: ViewState, panels: Panels): void {
  if (view.banner) {
    panels.banner.textContent = view.banner.text;
    panels.banner.className = `banner ${view.banner.kind}`;
  } else if (view.pendingCommand) {
    panels.banner.textContent = `sending: ${view.pendingCommand}`;
    panels.banner.className = "banner pending";
  } else {
    panels.banner.textContent = "";
    panels.banner.className = "banner";
  }

  panels.candidatesPanel.replaceChildren(
    ...formatCandidates(view.candidates).map((line) => {
      const li = document.createElement("li");
      li.textContent = line;
      return li;
    }),
  );

  // Event log ordering equals seq ordering: events arrive folded in seq
  // order, so rendering the list as-is preserves it.
  panels.eventLog.replaceChildren(
    ...view.events.slice(-30).map((event) => {
      const li = document.createElement("li");
      li.textContent = `#${event.seq} ${event.stamp.toFixed(2)}s ${event.kind}`;
      return li;
    }),
  );

  panels.timeline.textContent = view.phaseTimeline.join(" → ");

  if (view.arm) {
    const joints = view.arm.joints.map((j) => j.toFixed(3)).join(", ");
    const ee = view.arm.end_effector.map((v) => v.toFixed(3)).join(", ");
    panels.armPanel.textContent =
      `phase ${view.arm.phase} | gripper ${view.arm.gripper} | ` +
      `joints [${joints}] rad | end effector [${ee}] m | ` +
      `t=${view.arm.clock.toFixed(2)}s`;
  }
}

window.addEventListener("DOMContentLoaded", main);
