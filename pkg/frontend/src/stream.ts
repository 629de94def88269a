/**
 * Reconnecting WebSocket client for /api/v1/stream.
 *
 * Parses topic messages and hands them to a callback; reports connection
 * status transitions so the UI can show a "disconnected" overlay.  A
 * heartbeat timer declares the stream lost when nothing arrives for
 * HEARTBEAT_TIMEOUT_MS, well inside the 2 s overlay budget.  The
 * WebSocket constructor is injectable so tests can run without a browser.
 */

import type { TopicMessage } from "./types.js";
import type { ConnectionStatus } from "./view.js";

export interface SocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export const HEARTBEAT_TIMEOUT_MS = 1500;
export const RECONNECT_DELAY_MS = 500;

export class StreamClient {
  private readonly url: string;
  private readonly makeSocket: SocketFactory;
  private readonly onMessage: (msg: TopicMessage) => void;
  private readonly onStatus: (status: ConnectionStatus) => void;
  private socket: SocketLike | null = null;
  private heartbeat: ReturnType<typeof setTimeout> | null = null;
  private stopped = false;

  constructor(
    url: string,
    onMessage: (msg: TopicMessage) => void,
    onStatus: (status: ConnectionStatus) => void,
    makeSocket: SocketFactory,
  ) {
    this.url = url;
    this.onMessage = onMessage;
    this.onStatus = onStatus;
    this.makeSocket = makeSocket;
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  stop(): void {
    this.stopped = true;
    this.clearHeartbeat();
    if (this.socket) {
      this.socket.close();
      this.socket = null;
    }
  }

  private connect(): void {
    if (this.stopped) {
      return;
    }
    this.onStatus("connecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.onStatus("connected");
      this.armHeartbeat();
    };
    socket.onmessage = (ev) => {
      this.armHeartbeat();
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(ev.data));
      } catch {
        return; // a malformed frame is dropped, not fatal
      }
      const msg = parsed as TopicMessage;
      if (msg && typeof msg.topic === "string" && typeof msg.seq === "number") {
        this.onMessage(msg);
      }
    };
    socket.onclose = () => this.lost(socket);
    socket.onerror = () => this.lost(socket);
  }

  private lost(socket: SocketLike): void {
    if (this.socket !== socket) {
      return; // an already-replaced socket
    }
    this.socket = null;
    this.clearHeartbeat();
    this.onStatus("disconnected");
    if (!this.stopped) {
      setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
    }
  }

  private armHeartbeat(): void {
    this.clearHeartbeat();
    this.heartbeat = setTimeout(() => {
      const socket = this.socket;
      if (socket) {
        socket.close();
        this.lost(socket);
      }
    }, HEARTBEAT_TIMEOUT_MS);
  }

  private clearHeartbeat(): void {
    if (this.heartbeat !== null) {
      clearTimeout(this.heartbeat);
      this.heartbeat = null;
    }
  }
}

export function streamUrl(baseUrl: string, topics: string[]): string {
  const ws = baseUrl.replace(/^http/, "ws");
  return `${ws}/api/v1/stream?topics=${topics.join(",")}`;
}
