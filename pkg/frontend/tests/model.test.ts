import { describe, expect, it } from 'vitest';

import { FORCE_WINDOW_S, SessionModel } from '../src/model.js';
import { Telemetry } from '../src/types.js';

function telemetry(overrides: Partial<Telemetry> = {}): Telemetry {
  return {
    type: 'telemetry',
    t: 0,
    leader_q: [0, 0, 0, 0, 0, 0],
    cmd_q: [0, 0, 0, 0, 0, 0],
    gripper: 1,
    measured_q: [0, 0, 0, 0, 0, 0],
    ee_pos: [0, 0, 0],
    ee_quat: [1, 0, 0, 0],
    force: 0,
    mode: 1,
    recording: false,
    episode: null,
    ff: true,
    dropped: 0,
    ...overrides,
  };
}

describe('SessionModel', () => {
  it('is telemetry-authoritative', () => {
    const model = new SessionModel();
    expect(model.latest).toBeNull();
    model.applyTelemetry(telemetry({ mode: 2, recording: true, episode: 3 }));
    expect(model.latest?.mode).toBe(2);
    expect(model.latest?.recording).toBe(true);
    expect(model.updates).toBe(1);
  });

  it('drops stale state when the connection goes down', () => {
    const model = new SessionModel();
    model.applyTelemetry(telemetry());
    model.setConnection('down');
    expect(model.latest).toBeNull();
  });

  it('counts updates for the render-rate display', () => {
    const model = new SessionModel();
    for (let i = 0; i < 100; i += 1) {
      model.applyTelemetry(telemetry({ t: i * 10_000 }));
    }
    expect(model.updates).toBe(100);
  });

  it('mode button requests the 1 -> 2 -> 4 -> 1 cycle', () => {
    const model = new SessionModel();
    expect(model.nextMode()).toBe(2); // no telemetry yet: assume standard
    model.applyTelemetry(telemetry({ mode: 2 }));
    expect(model.nextMode()).toBe(4);
    model.applyTelemetry(telemetry({ mode: 4 }));
    expect(model.nextMode()).toBe(1);
    expect(model.modeLabel()).toBe('1:4');
  });

  it('force window keeps only the last 30 seconds', () => {
    const model = new SessionModel(100);
    for (let i = 0; i <= 40 * 100; i += 1) {
      model.applyTelemetry(telemetry({ t: i * 10_000, force: i % 5 }));
    }
    const window = model.forceWindow();
    const newest = window[window.length - 1].t;
    const oldest = window[0].t;
    expect(newest - oldest).toBeLessThanOrEqual(FORCE_WINDOW_S);
    expect(window.length).toBeGreaterThan(0);
  });

  it('comparison state machine reports the reduction', () => {
    const model = new SessionModel();
    model.beginComparison();
    expect(model.comparison.running).toBe(true);
    model.finishComparison(
      { scenario: 'egg', ff: true, seed: 7, peak_force: 10.1, broken: false, duration: 6 },
      { scenario: 'egg', ff: false, seed: 7, peak_force: 35.0, broken: true, duration: 6 },
    );
    expect(model.comparison.running).toBe(false);
    expect(model.comparisonShowsReduction()).toBe(true);
  });

  it('comparison failure is surfaced, not silently ignored', () => {
    const model = new SessionModel();
    model.beginComparison();
    model.failComparison('UnknownScenario');
    expect(model.comparison.error).toBe('UnknownScenario');
    expect(model.comparisonShowsReduction()).toBe(false);
  });
});
