/**
 * Top-down workbench renderer.
 *
 * Draws the workbench extent, scene objects colored by class, drop zones,
 * the selected-target highlight, the arm base and end-effector (both
 * reported by the service — the console does no kinematics), and a
 * camera-view inset with the latest detection boxes in pixel space.  The
 * only math here is linear canvas coordinate scaling.
 *
 * Rendering targets a minimal subset of CanvasRenderingContext2D so tests
 * can substitute a recording stub.
 */

import type { ViewState } from "./view.js";

export interface Canvas2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  textAlign: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

const CLASS_COLORS: Record<string, string> = {
  apple: "#d94141",
  banana: "#e6c229",
  orange: "#f28c28",
  seed: "#8a6642",
};
const FALLBACK_COLOR = "#7f8c8d";
const MARGIN = 24;
const INSET_WIDTH = 160;

export function classColor(name: string): string {
  return CLASS_COLORS[name] ?? FALLBACK_COLOR;
}

export interface WorldTransform {
  toX(xw: number): number;
  toY(yw: number): number;
  scale: number;
}

/** Uniform world→canvas scaling that fits the workbench extent with a
 * margin; +x right, +y up (screen y is flipped). */
export function makeTransform(
  extent: [number, number, number, number],
  width: number,
  height: number,
): WorldTransform {
  const [xMin, yMin, xMax, yMax] = extent;
  const scale = Math.min(
    (width - 2 * MARGIN) / (xMax - xMin),
    (height - 2 * MARGIN) / (yMax - yMin),
  );
  const cx = (xMin + xMax) / 2;
  const cy = (yMin + yMax) / 2;
  return {
    scale,
    toX: (xw) => width / 2 + (xw - cx) * scale,
    toY: (yw) => height / 2 - (yw - cy) * scale,
  };
}

export function renderWorkbench(
  ctx: Canvas2D,
  view: ViewState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10151c";
  ctx.fillRect(0, 0, width, height);

  if (view.scene) {
    const t = makeTransform(view.scene.workbench, width, height);
    drawExtent(ctx, view.scene.workbench, t);
    drawDropZones(ctx, view, t);
    drawObjects(ctx, view, t);
    drawArm(ctx, view, t);
    drawDetectionInset(ctx, view, width);
  } else {
    ctx.fillStyle = "#9aa7b2";
    ctx.font = "14px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText("no scene loaded", width / 2, height / 2);
  }

  if (view.connection !== "connected") {
    drawDisconnectedOverlay(ctx, width, height);
  }
}

function drawExtent(
  ctx: Canvas2D,
  extent: [number, number, number, number],
  t: WorldTransform,
): void {
  const [xMin, yMin, xMax, yMax] = extent;
  ctx.fillStyle = "#1d2733";
  ctx.strokeStyle = "#3b4a5a";
  ctx.lineWidth = 2;
  const x = t.toX(xMin);
  const y = t.toY(yMax);
  const w = (xMax - xMin) * t.scale;
  const h = (yMax - yMin) * t.scale;
  ctx.fillRect(x, y, w, h);
  ctx.strokeRect(x, y, w, h);
}

function drawDropZones(ctx: Canvas2D, view: ViewState, t: WorldTransform): void {
  const zones = view.scene ? view.scene.drop_zones : {};
  ctx.strokeStyle = "#5c7a99";
  ctx.fillStyle = "#9aa7b2";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  ctx.lineWidth = 1.5;
  for (const [name, [xw, yw]] of Object.entries(zones)) {
    const x = t.toX(xw);
    const y = t.toY(yw);
    ctx.beginPath();
    ctx.arc(x, y, 0.04 * t.scale, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.fillText(name, x, y - 0.05 * t.scale);
  }
}

function drawObjects(ctx: Canvas2D, view: ViewState, t: WorldTransform): void {
  if (!view.scene) {
    return;
  }
  for (const obj of view.scene.objects) {
    const x = t.toX(obj.position[0]);
    const y = t.toY(obj.position[1]);
    const r = Math.max(3, obj.radius * t.scale);
    ctx.fillStyle = classColor(obj.class);
    ctx.beginPath();
    ctx.arc(x, y, r, 0, 2 * Math.PI);
    ctx.fill();
    if (obj.id === view.selectedObjectId) {
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(x, y, r + 4, 0, 2 * Math.PI);
      ctx.stroke();
    }
    ctx.fillStyle = "#c8d2dc";
    ctx.font = "10px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(obj.class, x, y - r - 4);
  }
}

function drawArm(ctx: Canvas2D, view: ViewState, t: WorldTransform): void {
  // Base at the world origin; end effector as reported by the service.
  const bx = t.toX(0);
  const by = t.toY(0);
  ctx.fillStyle = "#6c7a89";
  ctx.beginPath();
  ctx.arc(bx, by, 6, 0, 2 * Math.PI);
  ctx.fill();
  if (view.arm) {
    const ex = t.toX(view.arm.end_effector[0]);
    const ey = t.toY(view.arm.end_effector[1]);
    ctx.strokeStyle = "#aab8c6";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(bx, by);
    ctx.lineTo(ex, ey);
    ctx.stroke();
    ctx.fillStyle = view.arm.gripper === "holding" ? "#2ecc71" : "#aab8c6";
    ctx.beginPath();
    ctx.arc(ex, ey, 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}

/** Camera-view inset: latest detection boxes in pixel space, scaled. */
function drawDetectionInset(ctx: Canvas2D, view: ViewState, width: number): void {
  if (view.detections.length === 0) {
    return;
  }
  const insetX = width - INSET_WIDTH - 8;
  const insetY = 8;
  const insetH = (INSET_WIDTH * 3) / 4; // 4:3 camera frame
  ctx.globalAlpha = 0.9;
  ctx.fillStyle = "#000000";
  ctx.fillRect(insetX, insetY, INSET_WIDTH, insetH);
  ctx.globalAlpha = 1.0;
  const sx = INSET_WIDTH / 640;
  const sy = insetH / 480;
  ctx.lineWidth = 1;
  for (const det of view.detections) {
    const [x0, y0, x1, y1] = det.box;
    ctx.strokeStyle = classColor(det.label);
    ctx.strokeRect(
      insetX + x0 * sx,
      insetY + y0 * sy,
      (x1 - x0) * sx,
      (y1 - y0) * sy,
    );
  }
  ctx.strokeStyle = "#3b4a5a";
  ctx.strokeRect(insetX, insetY, INSET_WIDTH, insetH);
}

function drawDisconnectedOverlay(ctx: Canvas2D, width: number, height: number): void {
  ctx.globalAlpha = 0.6;
  ctx.fillStyle = "#000000";
  ctx.fillRect(0, 0, width, height);
  ctx.globalAlpha = 1.0;
  ctx.fillStyle = "#ff6b6b";
  ctx.font = "bold 18px sans-serif";
  ctx.textAlign = "center";
  ctx.fillText("disconnected", width / 2, height / 2);
}
