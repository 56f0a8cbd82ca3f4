/**
 * End-to-end against the real daemon: spawn `echo-teleop teleop` in sim mode,
 * consume the documented bridge endpoints, and drive the same client code the
 * dashboard uses.
 */

import { ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { EchoClient } from '../src/client.js';
import { Telemetry } from '../src/types.js';

let daemon: ChildProcess;
let baseUrl: string;
let dataDir: string;

function startDaemon(): Promise<string> {
  dataDir = mkdtempSync(join(tmpdir(), 'echo-dash-'));
  daemon = spawn(
    'python3',
    [
      '-m', 'echo_teleop.cli', 'teleop',
      '--transport', 'sim:wave',
      '--port', '0',
      '--http-port', '0',
      '--dataset', dataDir,
    ],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('daemon did not start')), 20_000);
    let buffer = '';
    daemon.stdout!.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening tcp=(\d+) http=(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${match[2]}`);
      }
    });
    daemon.on('exit', (code) => {
      clearTimeout(timer);
      reject(new Error(`daemon exited early with code ${code}`));
    });
  });
}

function collectTelemetry(
  client: EchoClient,
  sink: Telemetry[],
  predicate: (t: Telemetry) => boolean,
  timeoutMs: number,
): Promise<Telemetry> {
  return new Promise((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error(`telemetry predicate not met in ${timeoutMs} ms`)),
      timeoutMs,
    );
    const poll = setInterval(() => {
      const hit = sink.find(predicate);
      if (hit) {
        clearTimeout(timer);
        clearInterval(poll);
        resolve(hit);
      }
    }, 20);
  });
}

describe('dashboard against a live sim daemon', () => {
  const received: Telemetry[] = [];
  let client: EchoClient;

  beforeAll(async () => {
    baseUrl = await startDaemon();
    client = new EchoClient(baseUrl, {
      onTelemetry: (t) => received.push(t),
      onState: () => undefined,
    });
    client.start();
  }, 30_000);

  afterAll(async () => {
    client?.stop();
    daemon?.kill('SIGTERM');
    await new Promise((resolve) => setTimeout(resolve, 300));
    daemon?.kill('SIGKILL');
    rmSync(dataDir, { recursive: true, force: true });
  });

  it('exposes the force range on /config', async () => {
    const config = await client.config();
    expect(config.f_max).toBe(20);
    expect(config.scenarios).toContain('egg');
  });

  it('streams telemetry at 10 Hz or better', async () => {
    const start = received.length;
    const startedAt = Date.now();
    await new Promise((resolve) => setTimeout(resolve, 1500));
    const got = received.length - start;
    const seconds = (Date.now() - startedAt) / 1000;
    expect(got / seconds).toBeGreaterThanOrEqual(10);
    const times = received.slice(start).map((t) => t.t);
    const sorted = [...times].sort((a, b) => a - b);
    expect(times).toEqual(sorted); // never reordered
  }, 15_000);

  it('round-trips mode, recording and feedback through telemetry', async () => {
    const modeAck = await client.send({ name: 'set_mode', mode: 2 });
    expect(modeAck.ok).toBe(true);
    await collectTelemetry(client, received, (t) => t.mode === 2, 5000);

    const recAck = await client.send({ name: 'start_recording' });
    expect(recAck.ok).toBe(true);
    const recording = await collectTelemetry(
      client, received, (t) => t.recording && t.episode === 1, 5000,
    );
    expect(recording.episode).toBe(1);

    const dupAck = await client.send({ name: 'start_recording' });
    expect(dupAck.ok).toBe(false);
    expect(dupAck.error).toBe('AlreadyRecording');

    const stopAck = await client.send({ name: 'stop_recording' });
    expect(stopAck.ok).toBe(true);

    const ffAck = await client.send({ name: 'set_force_feedback', enabled: false });
    expect(ffAck.ok).toBe(true);
    await collectTelemetry(client, received, (t) => t.ff === false, 5000);

    const badAck = await client.send({ name: 'set_mode', mode: 3 });
    expect(badAck.ok).toBe(false);
    expect(badAck.error).toBe('InvalidMode');
  }, 30_000);

  it('egg comparison shows feedback-on peak strictly below feedback-off', async () => {
    const on = await client.send({ name: 'run_scenario', scenario: 'egg', ff: true, seed: 3 });
    const off = await client.send({ name: 'run_scenario', scenario: 'egg', ff: false, seed: 3 });
    expect(on.ok).toBe(true);
    expect(off.ok).toBe(true);
    expect(on.report!.peak_force).toBeLessThan(off.report!.peak_force);
    expect(on.report!.broken).toBe(false);
  }, 60_000);
});
