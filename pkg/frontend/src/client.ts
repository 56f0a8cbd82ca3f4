/**
 * HTTP client for the daemon's bridge endpoints: SSE telemetry stream with
 * auto-reconnect, command POSTs, and the config fetch.
 */

import { SseParser } from './sse.js';
import { Ack, Command, ServiceConfig, Telemetry, isTelemetry } from './types.js';

export type ConnectionState = 'connecting' | 'live' | 'down';

export interface ClientEvents {
  onTelemetry: (t: Telemetry) => void;
  onState: (s: ConnectionState) => void;
}

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 5000;

export class EchoClient {
  private abort: AbortController | null = null;
  private stopped = false;
  private backoffMs = BACKOFF_START_MS;

  constructor(
    readonly baseUrl: string,
    private readonly events: ClientEvents,
  ) {}

  /** Start the telemetry stream; retries with backoff until stop(). */
  start(): void {
    this.stopped = false;
    void this.streamLoop();
  }

  stop(): void {
    this.stopped = true;
    this.abort?.abort();
  }

  private async streamLoop(): Promise<void> {
    while (!this.stopped) {
      this.events.onState('connecting');
      try {
        await this.streamOnce();
        this.backoffMs = BACKOFF_START_MS; // clean end; retry promptly
      } catch {
        // fall through to backoff
      }
      if (this.stopped) break;
      this.events.onState('down');
      await sleep(this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
    }
  }

  private async streamOnce(): Promise<void> {
    this.abort = new AbortController();
    const response = await fetch(`${this.baseUrl}/events`, {
      signal: this.abort.signal,
      headers: { Accept: 'text/event-stream' },
    });
    if (!response.ok || !response.body) {
      throw new Error(`stream failed: ${response.status}`);
    }
    this.events.onState('live');
    this.backoffMs = BACKOFF_START_MS;
    const parser = new SseParser();
    const decoder = new TextDecoder();
    const reader = response.body.getReader();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      for (const payload of parser.feed(decoder.decode(value, { stream: true }))) {
        let obj: unknown;
        try {
          obj = JSON.parse(payload);
        } catch {
          continue;
        }
        if (isTelemetry(obj)) {
          this.events.onTelemetry(obj);
        }
      }
    }
  }

  async send(command: Command): Promise<Ack> {
    const response = await fetch(`${this.baseUrl}/cmd`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ type: 'cmd', ...command }),
    });
    return (await response.json()) as Ack;
  }

  async config(): Promise<ServiceConfig> {
    const response = await fetch(`${this.baseUrl}/config`);
    return (await response.json()) as ServiceConfig;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
