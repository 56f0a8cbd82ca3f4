/** Wire objects exchanged with the daemon (see docs/service.md). */

export interface Telemetry {
  type: 'telemetry';
  t: number; // microseconds of session logical time
  leader_q: number[];
  cmd_q: number[];
  gripper: number;
  measured_q: number[];
  ee_pos: number[];
  ee_quat: number[]; // (w, x, y, z), w >= 0
  force: number; // newtons
  mode: 1 | 2 | 4;
  recording: boolean;
  episode: number | null;
  ff: boolean;
  dropped: number;
}

export interface AckState {
  mode: number;
  recording: boolean;
  ff: boolean;
  episode: number | null;
}

export interface ScenarioOutcome {
  scenario: string;
  ff: boolean;
  seed: number;
  peak_force: number;
  broken: boolean;
  duration: number;
}

export interface Ack {
  type: 'ack';
  ok: boolean;
  cmd?: string;
  id?: number;
  state?: AckState;
  report?: ScenarioOutcome;
  error?: string;
  message?: string;
}

export interface ServiceConfig {
  f_max: number;
  rate_hz: number;
  transport: string;
  scenarios: string[];
}

export type Command =
  | { name: 'start_recording' }
  | { name: 'stop_recording' }
  | { name: 'set_mode'; mode: number }
  | { name: 'set_force_feedback'; enabled: boolean }
  | { name: 'run_scenario'; scenario: string; ff: boolean; seed?: number };

export function isTelemetry(obj: unknown): obj is Telemetry {
  return (
    typeof obj === 'object' &&
    obj !== null &&
    (obj as { type?: string }).type === 'telemetry' &&
    Array.isArray((obj as Telemetry).measured_q)
  );
}
