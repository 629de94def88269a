/**
 * Command submission against POST /api/v1/command.
 *
 * Returns the parsed response plus a banner classification so rejections
 * (ArmBusy, NoMatch, ...) render as non-fatal notices and a network
 * failure shows a retry banner instead of dropping silently.  The fetch
 * function is injectable for tests.
 */

import type { Candidate, CommandAccepted, CommandRejected } from "./types.js";

export type FetchLike = (
  url: string,
  init: { method: string; headers: Record<string, string>; body: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export interface SubmitResult {
  ok: boolean;
  /** Null only on network failure. */
  status: number | null;
  candidates: Candidate[];
  banner: { kind: "ok" | "warn" | "error"; text: string };
}

/** Rejections the operator fixes by waiting or rephrasing, not errors. */
const NON_FATAL = new Set(["ArmBusy", "NoMatch", "NoVerbFound", "TargetAbsent"]);

export async function submitCommand(
  fetchFn: FetchLike,
  baseUrl: string,
  text: string,
  nBest = 3,
): Promise<SubmitResult> {
  let status: number;
  let body: unknown;
  try {
    const response = await fetchFn(`${baseUrl}/api/v1/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, n_best: nBest }),
    });
    status = response.status;
    body = await response.json();
  } catch {
    return {
      ok: false,
      status: null,
      candidates: [],
      banner: { kind: "error", text: "Network error — command not sent, retry" },
    };
  }
  if (status === 200) {
    const accepted = (body as CommandAccepted).accepted;
    const target = accepted.target_class ? ` the ${accepted.target_class}` : "";
    return {
      ok: true,
      status,
      candidates: (body as CommandAccepted).candidates,
      banner: { kind: "ok", text: `Accepted: ${accepted.verb}${target}` },
    };
  }
  const rejected = body as CommandRejected;
  return {
    ok: false,
    status,
    candidates: rejected.candidates ?? [],
    banner: {
      kind: NON_FATAL.has(rejected.error) ? "warn" : "error",
      text: `${rejected.error}: ${rejected.detail}`,
    },
  };
}

export function formatCandidates(candidates: Candidate[]): string[] {
  return candidates.map((c) => {
    const target = c.target_class ? ` ${c.target_class}` : "";
    return `${c.verb}${target}  (${c.score.toFixed(3)})`;
  });
}
