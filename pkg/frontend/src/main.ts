import { EchoClient } from './client.js';
import { SessionModel } from './model.js';
import { Dashboard } from './ui.js';

const base = window.location.origin;
const model = new SessionModel();

const client = new EchoClient(base, {
  onTelemetry: (telemetry) => {
    model.applyTelemetry(telemetry);
    dashboard.telemetryArrived();
  },
  onState: (state) => {
    model.setConnection(state);
    dashboard.scheduleRender();
  },
});

const dashboard = new Dashboard(model, client, document);

void client
  .config()
  .then((config) => {
    model.fMax = config.f_max; // pin the force axis to the configured range
  })
  .catch(() => undefined)
  .finally(() => {
    dashboard.mount();
    client.start();
  });
