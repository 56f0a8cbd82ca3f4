/**
 * DOM rendering and controls.  Rendering is throttled to animation frames;
 * the model applies every telemetry object regardless of paint rate.
 */

import { EchoClient } from './client.js';
import { SessionModel } from './model.js';
import { Ack } from './types.js';

const JOINT_RANGE_RAD = 2.62; // gauge span; matches the default joint limits

export class Dashboard {
  private renderQueued = false;
  private rateWindow: number[] = [];

  constructor(
    private readonly model: SessionModel,
    private readonly client: EchoClient,
    private readonly root: Document,
  ) {}

  mount(): void {
    this.bindControls();
    this.scheduleRender();
  }

  telemetryArrived(): void {
    this.rateWindow.push(performance.now());
    if (this.rateWindow.length > 256) this.rateWindow.shift();
    this.scheduleRender();
  }

  scheduleRender(): void {
    if (this.renderQueued) return;
    this.renderQueued = true;
    requestAnimationFrame(() => {
      this.renderQueued = false;
      this.render();
    });
  }

  private bindControls(): void {
    this.button('btn-record').addEventListener('click', () => {
      const recording = this.model.latest?.recording ?? false;
      void this.sendChecked({ name: recording ? 'stop_recording' : 'start_recording' });
    });
    this.button('btn-mode').addEventListener('click', () => {
      void this.sendChecked({ name: 'set_mode', mode: this.model.nextMode() });
    });
    this.button('btn-ff').addEventListener('click', () => {
      const enabled = this.model.latest?.ff ?? true;
      void this.sendChecked({ name: 'set_force_feedback', enabled: !enabled });
    });
    this.button('btn-compare').addEventListener('click', () => {
      void this.runComparison();
    });
  }

  private async sendChecked(command: Parameters<EchoClient['send']>[0]): Promise<Ack> {
    const ack = await this.client.send(command);
    this.model.lastError = ack.ok ? null : `${ack.error}: ${ack.message ?? ''}`;
    this.scheduleRender();
    return ack;
  }

  private async runComparison(): Promise<void> {
    if (this.model.comparison.running) return;
    this.model.beginComparison();
    this.scheduleRender();
    const seed = 7;
    try {
      const on = await this.client.send({ name: 'run_scenario', scenario: 'egg', ff: true, seed });
      const off = await this.client.send({ name: 'run_scenario', scenario: 'egg', ff: false, seed });
      if (!on.ok || !off.ok || !on.report || !off.report) {
        this.model.failComparison(on.error ?? off.error ?? 'scenario failed');
      } else {
        this.model.finishComparison(on.report, off.report);
      }
    } catch (err) {
      this.model.failComparison(String(err));
    }
    this.scheduleRender();
  }

  // -- rendering

  private render(): void {
    const t = this.model.latest;
    this.setText('conn-badge', this.model.connection);
    this.classify('conn-badge', `badge state-${this.model.connection}`);

    this.setText('mode-badge', this.model.modeLabel());
    const recording = t?.recording ?? false;
    this.setText('record-badge', recording ? `REC #${t?.episode ?? '?'}` : 'idle');
    this.classify('record-badge', recording ? 'badge recording' : 'badge');
    this.setText('ff-badge', t ? (t.ff ? 'FF on' : 'FF off') : '—');
    this.setText('rate-badge', `${this.measuredRate().toFixed(0)} Hz`);
    this.setText('error-line', this.model.lastError ?? '');

    if (t) {
      for (let joint = 0; joint < 6; joint += 1) {
        const fraction = (t.measured_q[joint] + JOINT_RANGE_RAD) / (2 * JOINT_RANGE_RAD);
        this.bar(`joint-${joint}`, fraction, t.measured_q[joint].toFixed(3));
      }
      this.bar('gripper', t.gripper, t.gripper.toFixed(2));
      this.bar('force', t.force / this.model.fMax, `${t.force.toFixed(2)} N`);
      const pos = t.ee_pos.map((v) => v.toFixed(3)).join(', ');
      this.setText('ee-pos', `[${pos}] m`);
    }
    this.drawStripChart();
    this.renderComparison();
  }

  private measuredRate(): number {
    if (this.rateWindow.length < 2) return 0;
    const first = this.rateWindow[0];
    const last = this.rateWindow[this.rateWindow.length - 1];
    return ((this.rateWindow.length - 1) * 1000) / Math.max(1, last - first);
  }

  private drawStripChart(): void {
    const canvas = this.root.getElementById('force-chart') as HTMLCanvasElement | null;
    if (!canvas) return;
    const ctx = canvas.getContext('2d');
    if (!ctx) return;
    const { width, height } = canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = '#2a6f97';
    ctx.lineWidth = 1.5;
    const points = this.model.forceWindow();
    if (points.length < 2) return;
    const newest = points[points.length - 1].t;
    ctx.beginPath();
    for (const point of points) {
      const x = width - ((newest - point.t) / 30) * width;
      const y = height - Math.min(1, point.force / this.model.fMax) * height;
      if (point === points[0]) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }

  private renderComparison(): void {
    const { running, withFf, withoutFf, error } = this.model.comparison;
    if (running) {
      this.setText('compare-result', 'running…');
      return;
    }
    if (error) {
      this.setText('compare-result', `failed: ${error}`);
      return;
    }
    if (withFf && withoutFf) {
      const verdict = this.model.comparisonShowsReduction()
        ? 'feedback lowers the peak'
        : 'unexpected: no reduction';
      this.setText(
        'compare-result',
        `FF on: ${withFf.peak_force.toFixed(2)} N (${withFf.broken ? 'broke' : 'intact'})  ·  ` +
          `FF off: ${withoutFf.peak_force.toFixed(2)} N (${withoutFf.broken ? 'broke' : 'intact'})` +
          `  →  ${verdict}`,
      );
    }
  }

  // -- small DOM helpers

  private button(id: string): HTMLButtonElement {
    return this.root.getElementById(id) as HTMLButtonElement;
  }

  private setText(id: string, text: string): void {
    const el = this.root.getElementById(id);
    if (el) el.textContent = text;
  }

  private classify(id: string, className: string): void {
    const el = this.root.getElementById(id);
    if (el) el.className = className;
  }

  private bar(id: string, fraction: number, label: string): void {
    const fill = this.root.getElementById(`${id}-fill`);
    if (fill) (fill as HTMLElement).style.width = `${Math.max(0, Math.min(1, fraction)) * 100}%`;
    this.setText(`${id}-value`, label);
  }
}
