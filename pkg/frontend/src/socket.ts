/** Push-channel client: one WebSocket per view, with automatic reconnect.
 *
 * After a drop the channel reopens with exponential backoff and fires
 * `onReconnect`, which views use to resync from GET endpoints before
 * resuming incremental updates.  The socket constructor is injectable so
 * tests (and non-browser runtimes) can supply their own implementation.
 */

import type { PushMessage } from "./types.js";

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => WebSocketLike;

export interface PushChannelOptions {
  factory?: SocketFactory;
  onReconnect?: () => void;
  initialDelayMs?: number;
  maxDelayMs?: number;
}

function defaultFactory(url: string): WebSocketLike {
  return new WebSocket(url) as unknown as WebSocketLike;
}

export function pushUrl(baseUrl: string, gameId: string): string {
  return `${baseUrl.replace(/^http/, "ws")}/ws?game=${encodeURIComponent(gameId)}`;
}

export class PushChannel {
  private socket: WebSocketLike | null = null;
  private closed = false;
  private everConnected = false;
  private delay: number;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly onMessage: (msg: PushMessage) => void,
    private readonly options: PushChannelOptions = {},
  ) {
    this.delay = options.initialDelayMs ?? 250;
  }

  connect(): void {
    if (this.closed) {
      return;
    }
    const factory = this.options.factory ?? defaultFactory;
    const socket = factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.delay = this.options.initialDelayMs ?? 250;
      if (this.everConnected) {
        this.options.onReconnect?.();
      }
      this.everConnected = true;
    };
    socket.onmessage = (ev) => {
      let parsed: PushMessage;
      try {
        parsed = JSON.parse(String(ev.data)) as PushMessage;
      } catch {
        return;
      }
      this.onMessage(parsed);
    };
    socket.onerror = () => {
      // the close handler owns reconnection
    };
    socket.onclose = () => {
      this.socket = null;
      this.scheduleReconnect();
    };
  }

  private scheduleReconnect(): void {
    if (this.closed || this.timer !== null) {
      return;
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      this.connect();
    }, this.delay);
    this.delay = Math.min(this.delay * 2, this.options.maxDelayMs ?? 5000);
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.socket?.close();
    this.socket = null;
  }
}
