/**
 * Console view state: the latest snapshot per topic plus connection and
 * command status.  Everything rendered on screen is derived from received
 * messages — the console performs no simulation of its own.
 *
 * applyMessage is a pure reducer so ordering rules (per-topic seq never
 * decreases, gaps are surfaced, the event log equals seq order) are
 * testable without a browser.
 */

import type {
  ArmSnapshot,
  Candidate,
  Detection,
  SceneSnapshot,
  SimEvent,
  TopicMessage,
} from "./types.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface LoggedEvent extends SimEvent {
  seq: number;
}

export interface ViewState {
  scene: SceneSnapshot | null;
  arm: ArmSnapshot | null;
  detections: Detection[];
  events: LoggedEvent[];
  /** Highest seq seen per topic; stale or duplicate messages are dropped. */
  lastSeq: Record<string, number>;
  /** Topics where a seq gap was observed (messages lost in transit). */
  gaps: string[];
  connection: ConnectionStatus;
  /** Object id highlighted after the latest TargetSelected event. */
  selectedObjectId: number | null;
  /** Phase names in the order PhaseChanged events arrived. */
  phaseTimeline: string[];
  pendingCommand: string | null;
  candidates: Candidate[];
  banner: { kind: "ok" | "warn" | "error"; text: string } | null;
}

export const EVENT_LOG_LIMIT = 200;

export function initialView(): ViewState {
  return {
    scene: null,
    arm: null,
    detections: [],
    events: [],
    lastSeq: {},
    gaps: [],
    connection: "connecting",
    selectedObjectId: null,
    phaseTimeline: [],
    pendingCommand: null,
    candidates: [],
    banner: null,
  };
}

/** Fold one stream message into the view.  Returns a new state; the input
 * is not mutated. */
export function applyMessage(view: ViewState, msg: TopicMessage): ViewState {
  const last = view.lastSeq[msg.topic] ?? 0;
  if (msg.seq <= last) {
    return view; // stale or duplicate: rendered seq never decreases
  }
  const next: ViewState = {
    ...view,
    lastSeq: { ...view.lastSeq, [msg.topic]: msg.seq },
    // seq numbers are global per topic, so a late subscriber starts
    // mid-sequence; only a jump after the first received message is a gap
    gaps:
      last > 0 && msg.seq > last + 1 && !view.gaps.includes(msg.topic)
        ? [...view.gaps, msg.topic]
        : view.gaps,
  };
  switch (msg.topic) {
    case "scene":
      next.scene = msg.payload as SceneSnapshot;
      break;
    case "arm_state":
      next.arm = msg.payload as ArmSnapshot;
      break;
    case "detections":
      next.detections = msg.payload as Detection[];
      break;
    case "events": {
      const event = msg.payload as SimEvent;
      next.events = [...view.events, { ...event, seq: msg.seq }].slice(
        -EVENT_LOG_LIMIT,
      );
      applyEvent(next, event);
      break;
    }
  }
  return next;
}

function applyEvent(view: ViewState, event: SimEvent): void {
  switch (event.kind) {
    case "TargetSelected":
      view.selectedObjectId = event.payload["object_id"] as number;
      break;
    case "PhaseChanged":
      view.phaseTimeline = [...view.phaseTimeline, event.payload["phase"] as string];
      break;
    case "PickCompleted":
      view.selectedObjectId = null;
      view.banner = { kind: "ok", text: "Pick completed" };
      break;
    case "Error":
      view.selectedObjectId = null;
      view.banner = {
        kind: "error",
        text: `${event.payload["error"] ?? "Error"}: ${event.payload["detail"] ?? ""}`,
      };
      break;
  }
}

/** Seed snapshots fetched from the GET endpoints after (re)connecting.
 * Stream messages carry seq numbers and always win: a seed only fills a
 * topic that has not yet received any stream message. */
export function seedSnapshots(
  view: ViewState,
  seed: {
    scene?: SceneSnapshot;
    arm?: ArmSnapshot;
    detections?: Detection[];
  },
): ViewState {
  const next = { ...view };
  if (seed.scene && !(view.lastSeq["scene"] ?? 0)) {
    next.scene = seed.scene;
  }
  if (seed.arm && !(view.lastSeq["arm_state"] ?? 0)) {
    next.arm = seed.arm;
  }
  if (seed.detections && !(view.lastSeq["detections"] ?? 0)) {
    next.detections = seed.detections;
  }
  return next;
}

export function setConnection(view: ViewState, status: ConnectionStatus): ViewState {
  if (view.connection === status) {
    return view;
  }
  return { ...view, connection: status };
}
