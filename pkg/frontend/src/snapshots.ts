/**
 * Initial-state fetch: the stream only carries changes, so after each
 * (re)connect the console pulls the current scene/arm/detections from the
 * GET endpoints.  Failures are tolerated — the next stream message or
 * reconnect fills the gap.
 */

import type { ArmSnapshot, Detection, SceneSnapshot } from "./types.js";

export interface SnapshotSeed {
  scene?: SceneSnapshot;
  arm?: ArmSnapshot;
  detections?: Detection[];
}

type GetLike = (url: string) => Promise<{ status: number; json(): Promise<unknown> }>;

async function tryGet<T>(getFn: GetLike, url: string): Promise<T | undefined> {
  try {
    const response = await getFn(url);
    if (response.status !== 200) {
      return undefined;
    }
    return (await response.json()) as T;
  } catch {
    return undefined;
  }
}

export async function fetchSnapshots(
  getFn: GetLike,
  baseUrl: string,
): Promise<SnapshotSeed> {
  const [scene, arm, detections] = await Promise.all([
    tryGet<SceneSnapshot>(getFn, `${baseUrl}/api/v1/scene`),
    tryGet<ArmSnapshot>(getFn, `${baseUrl}/api/v1/arm`),
    tryGet<Detection[]>(getFn, `${baseUrl}/api/v1/detections`),
  ]);
  return { scene, arm, detections };
}
