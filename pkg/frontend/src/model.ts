/**
 * Session model: the single source of truth the view renders from.
 *
 * State is telemetry-authoritative: button clicks send commands, but badges
 * and gauges change only when the daemon's next telemetry confirms it.  The
 * force history keeps the last 30 seconds for the strip chart.
 */

import { RingBuffer } from './ringbuffer.js';
import { ConnectionState } from './client.js';
import { ScenarioOutcome, Telemetry } from './types.js';

export interface ForcePoint {
  t: number; // seconds of session time
  force: number;
}

export interface ComparisonState {
  running: boolean;
  withFf: ScenarioOutcome | null;
  withoutFf: ScenarioOutcome | null;
  error: string | null;
}

export const FORCE_WINDOW_S = 30;

export class SessionModel {
  connection: ConnectionState = 'connecting';
  latest: Telemetry | null = null;
  fMax = 20; // force gauge axis is pinned to the daemon's configured range
  updates = 0; // telemetry objects applied (drives the render-rate display)
  comparison: ComparisonState = {
    running: false,
    withFf: null,
    withoutFf: null,
    error: null,
  };
  lastError: string | null = null;
  readonly forceHistory: RingBuffer<ForcePoint>;

  constructor(rateHz = 100) {
    this.forceHistory = new RingBuffer<ForcePoint>(FORCE_WINDOW_S * rateHz);
  }

  applyTelemetry(telemetry: Telemetry): void {
    this.latest = telemetry;
    this.updates += 1;
    this.forceHistory.push({ t: telemetry.t / 1e6, force: telemetry.force });
  }

  setConnection(state: ConnectionState): void {
    this.connection = state;
    if (state !== 'live') {
      this.latest = null; // never show stale state as current
    }
  }

  /** Points inside the strip-chart window, oldest first. */
  forceWindow(): ForcePoint[] {
    const points = this.forceHistory.toArray();
    if (points.length === 0) return points;
    const newest = points[points.length - 1].t;
    return points.filter((p) => newest - p.t <= FORCE_WINDOW_S);
  }

  modeLabel(): string {
    if (!this.latest) return '—';
    return { 1: '1:1', 2: '1:2', 4: '1:4' }[this.latest.mode] ?? String(this.latest.mode);
  }

  /** The divisor a mode-button click should request: cycle 1 -> 2 -> 4 -> 1. */
  nextMode(): number {
    const current = this.latest?.mode ?? 1;
    return { 1: 2, 2: 4, 4: 1 }[current] ?? 1;
  }

  beginComparison(): void {
    this.comparison = { running: true, withFf: null, withoutFf: null, error: null };
  }

  finishComparison(withFf: ScenarioOutcome, withoutFf: ScenarioOutcome): void {
    this.comparison = { running: false, withFf, withoutFf, error: null };
  }

  failComparison(error: string): void {
    this.comparison = { running: false, withFf: null, withoutFf: null, error };
  }

  /** True when both arms ran and feedback lowered the peak, as expected. */
  comparisonShowsReduction(): boolean {
    const { withFf, withoutFf } = this.comparison;
    return withFf !== null && withoutFf !== null && withFf.peak_force < withoutFf.peak_force;
  }
}
