import type { StreamEvent } from "./types.js";

/** Incremental SSE frame splitter. Returns the unread remainder plus the
 * data payloads of any complete frames (comment-only frames are dropped). */
export function parseSseBuffer(buffer: string): { rest: string; payloads: string[] } {
  const payloads: string[] = [];
  let rest = buffer;
  for (;;) {
    const cut = rest.indexOf("\n\n");
    if (cut < 0) break;
    const frame = rest.slice(0, cut);
    rest = rest.slice(cut + 2);
    const dataLines = frame
      .split("\n")
      .filter((line) => line.startsWith("data:"))
      .map((line) => line.slice(5).trimStart());
    if (dataLines.length) payloads.push(dataLines.join("\n"));
  }
  return { rest, payloads };
}

export interface StreamHandlers {
  onEvent(event: StreamEvent): void;
  /** Called when the connection drops and a new one is about to be made;
   * the client refetches history from its last id so nothing repeats. */
  onReconnect?(): void | Promise<void>;
  onStatus?(connected: boolean): void;
}

type FetchFn = typeof fetch;

/** fetch()-based server-sent-events reader with automatic reconnect.
 * EventSource cannot set Authorization headers and does not exist in every
 * runtime, so the stream endpoint is consumed as a plain streaming GET. */
export class EventStream {
  private stopped = false;
  private controller: AbortController | null = null;
  private everConnected = false;

  constructor(
    private url: string,
    private token: string,
    private handlers: StreamHandlers,
    private fetchFn: FetchFn = fetch.bind(globalThis),
    private reconnectDelayMs = 1000,
  ) {}

  start(): void {
    void this.loop();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  /** Drop the current connection; the loop reconnects (used by tests and
   * by the UI when the token changes). */
  kick(): void {
    this.controller?.abort();
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        this.controller = new AbortController();
        const response = await this.fetchFn(this.url, {
          headers: { Authorization: `Bearer ${this.token}` },
          signal: this.controller.signal,
        });
        if (!response.ok || !response.body) throw new Error(`stream refused: ${response.status}`);
        if (this.everConnected) await this.handlers.onReconnect?.();
        this.everConnected = true;
        this.handlers.onStatus?.(true);
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        let buffer = "";
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          buffer += decoder.decode(value, { stream: true });
          const { rest, payloads } = parseSseBuffer(buffer);
          buffer = rest;
          for (const payload of payloads) {
            try {
              this.handlers.onEvent(JSON.parse(payload) as StreamEvent);
            } catch {
              // malformed frame: skip rather than kill the stream
            }
          }
        }
      } catch {
        // fall through to reconnect
      }
      this.handlers.onStatus?.(false);
      if (this.stopped) return;
      await new Promise((resolve) => setTimeout(resolve, this.reconnectDelayMs));
    }
  }
}
