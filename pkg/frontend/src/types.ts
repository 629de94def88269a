/**
 * Wire types for the agribot service API.
 *
 * These mirror the JSON documents produced by the service endpoints and
 * the /api/v1/stream WebSocket; the console never computes any of these
 * values itself.
 */

export interface TopicMessage {
  topic: "arm_state" | "detections" | "events" | "scene";
  seq: number;
  stamp: number;
  payload: unknown;
}

export interface SceneObject {
  id: number;
  class: string;
  position: [number, number, number];
  radius: number;
}

export interface SceneSnapshot {
  objects: SceneObject[];
  drop_zones: Record<string, [number, number, number]>;
  /** [x_min, y_min, x_max, y_max] in meters. */
  workbench: [number, number, number, number];
}

export interface ArmSnapshot {
  joints: [number, number, number];
  end_effector: [number, number, number];
  phase: string;
  gripper: string;
  clock: number;
}

export interface Detection {
  class_id: number;
  label: string;
  confidence: number;
  /** [x_min, y_min, x_max, y_max] in pixels. */
  box: [number, number, number, number];
}

export interface SimEvent {
  kind: string;
  stamp: number;
  payload: Record<string, unknown>;
}

export interface Candidate {
  verb: string;
  target_class: string | null;
  score: number;
}

export interface CommandAccepted {
  accepted: { verb: string; target_class: string | null; drop_zone: string | null };
  candidates: Candidate[];
}

export interface CommandRejected {
  error: string;
  detail: string;
  candidates: Candidate[];
}

export type CommandResponse =
  | { status: number; body: CommandAccepted }
  | { status: number; body: CommandRejected };
