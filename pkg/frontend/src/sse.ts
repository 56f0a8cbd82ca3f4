/**
 * Minimal server-sent-events parser over arbitrary text chunks.
 *
 * Works with both the browser's fetch streaming and node; we do not rely on
 * EventSource so the same client code runs in tests.
 */

export class SseParser {
  private buffer = '';

  /** Feed one chunk; returns the `data:` payloads of completed events. */
  feed(chunk: string): string[] {
    this.buffer += chunk;
    const events: string[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf('\n\n')) >= 0) {
      const raw = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const dataLines = raw
        .split('\n')
        .filter((line) => line.startsWith('data:'))
        .map((line) => line.slice(5).trimStart());
      if (dataLines.length > 0) {
        events.push(dataLines.join('\n'));
      }
    }
    return events;
  }

  reset(): void {
    this.buffer = '';
  }
}
