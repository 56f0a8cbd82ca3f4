"""Long-running daemon: control loop plus local telemetry/command endpoints.

Two listeners share one session:

* TCP on 127.0.0.1 (default port 7420), line-delimited JSON.  Telemetry
  objects stream to every connected client; clients send command objects and
  receive acks on the same connection.  See docs/service.md for the schema.
* A thin HTTP bridge (default port 7421) for browser clients: GET /events is
  a server-sent-events telemetry stream, POST /cmd executes one command and
  returns its ack, GET /config reports gauge ranges, and the dashboard's
  static files are served when --ui-dir is given.

Telemetry delivery is lossy-but-latest per subscriber: a slow client skips
snapshots but never sees them reordered.  The control loop never blocks on
network I/O.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .errors import EchoError, UnknownScenario
from .session import ResolvedSession, SessionConfig, SessionRunner, resolve_session
from .sim import load_scenario_config, run_egg_scenario

log = logging.getLogger(__name__)

_QUEUE_DEPTH = 1024
_SENTINEL = object()


class TelemetryHub:
    """Fan-out of snapshots to per-subscriber bounded queues."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers = []

    def subscribe(self) -> queue.Queue:
        q = queue.Queue(maxsize=_QUEUE_DEPTH)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, item) -> None:
        with self._lock:
            targets = list(self._subscribers)
        for q in targets:
            try:
                q.put_nowait(item)
            except queue.Full:
                try:  # drop the oldest snapshot; latest wins
                    q.get_nowait()
                except queue.Empty:
                    pass
                try:
                    q.put_nowait(item)
                except queue.Full:
                    pass

    def close_all(self) -> None:
        with self._lock:
            targets = list(self._subscribers)
        for q in targets:
            try:
                q.put_nowait(_SENTINEL)
            except queue.Full:
                pass


class Service:
    """Couples a SessionRunner with the TCP endpoint and the HTTP bridge."""

    def __init__(self, config: SessionConfig, resolved: ResolvedSession = None):
        self.resolved = resolved or resolve_session(config)
        self.config = self.resolved.config
        self.runner = SessionRunner(self.resolved)
        self.hub = TelemetryHub()
        self.stop_event = threading.Event()
        self._tcp_server = None
        self._http_server = None
        self._threads = []
        self.tcp_port = None
        self.http_port = None

    # -- command execution shared by both listeners

    def execute_command(self, obj: dict, timeout: float = 30.0) -> dict:
        """Run one command object to completion and return its ack."""
        name = obj.get("name")
        if name == "run_scenario":
            return self._run_scenario(obj)
        reply_box = queue.Queue(maxsize=1)
        self.runner.submit_command(name, obj, reply_box.put)
        try:
            ack = reply_box.get(timeout=timeout)
        except queue.Empty:
            return {
                "type": "ack",
                "ok": False,
                "cmd": name,
                "error": "Timeout",
                "message": "control loop did not apply the command in time",
            }
        if "id" in obj:
            ack = dict(ack, id=obj["id"])
        return ack

    def _run_scenario(self, obj: dict) -> dict:
        name = obj.get("scenario", "egg")
        ff = bool(obj.get("ff", True))
        try:
            cfg = load_scenario_config(name)
            if "seed" in obj:
                from dataclasses import replace

                cfg = replace(cfg, seed=int(obj["seed"]))
            report = run_egg_scenario(cfg, ff_enabled=ff, collect_trace=False)
        except (UnknownScenario, EchoError, ValueError) as exc:
            return {
                "type": "ack",
                "ok": False,
                "cmd": "run_scenario",
                "error": type(exc).__name__,
                "message": str(exc),
            }
        ack = {
            "type": "ack",
            "ok": True,
            "cmd": "run_scenario",
            "report": {
                "scenario": name,
                "ff": ff,
                "seed": cfg.seed,
                "peak_force": report.peak_force,
                "broken": report.broken,
                "duration": report.duration,
            },
        }
        if "id" in obj:
            ack["id"] = obj["id"]
        return ack

    # -- TCP endpoint

    def _tcp_client(self, conn: socket.socket) -> None:
        conn_out = self.hub.subscribe()
        alive = threading.Event()
        alive.set()

        def writer():
            try:
                while alive.is_set():
                    try:
                        item = conn_out.get(timeout=0.2)
                    except queue.Empty:
                        continue
                    if item is _SENTINEL:
                        break
                    payload = item if isinstance(item, dict) else item.to_json_obj()
                    conn.sendall((json.dumps(payload) + "\n").encode("utf-8"))
            except OSError:
                pass
            finally:
                alive.clear()

        writer_thread = threading.Thread(target=writer, daemon=True)
        writer_thread.start()
        try:
            buffer = b""
            conn.settimeout(0.2)
            while alive.is_set() and not self.stop_event.is_set():
                try:
                    data = conn.recv(4096)
                except socket.timeout:
                    continue
                except OSError:
                    break
                if not data:
                    break
                buffer += data
                while b"\n" in buffer:
                    line, buffer = buffer.split(b"\n", 1)
                    if not line.strip():
                        continue
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError as exc:
                        conn_out.put(
                            {
                                "type": "ack",
                                "ok": False,
                                "error": "BadJson",
                                "message": str(exc),
                            }
                        )
                        continue
                    ack = self.execute_command(obj)
                    conn_out.put(ack)
        finally:
            alive.clear()
            self.hub.unsubscribe(conn_out)
            try:
                conn.close()
            except OSError:
                pass

    def _tcp_accept_loop(self) -> None:
        while not self.stop_event.is_set():
            try:
                conn, _addr = self._tcp_server.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            thread = threading.Thread(target=self._tcp_client, args=(conn,), daemon=True)
            thread.start()

    # -- lifecycle

    def start(self) -> None:
        self._tcp_server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._tcp_server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._tcp_server.bind(("127.0.0.1", self.config.port))
        self._tcp_server.settimeout(0.2)
        self._tcp_server.listen(8)
        self.tcp_port = self._tcp_server.getsockname()[1]

        self._http_server = _make_bridge(self)
        self.http_port = self._http_server.server_address[1]
        for target in (
            self._tcp_accept_loop,
            self._http_server.serve_forever,
            self._control_loop,
        ):
            thread = threading.Thread(target=target, daemon=True)
            thread.start()
            self._threads.append(thread)
        log.info(
            "service up: tcp 127.0.0.1:%d, http 127.0.0.1:%d", self.tcp_port, self.http_port
        )

    def _control_loop(self) -> None:
        try:
            self.runner.run(stop_event=self.stop_event, on_snapshot=self.hub.publish)
        finally:
            self.stop_event.set()
            self.hub.close_all()

    def wait(self, timeout: float = None) -> None:
        self.stop_event.wait(timeout)

    def stop(self) -> None:
        self.stop_event.set()
        if self._http_server:
            self._http_server.shutdown()
        if self._tcp_server:
            self._tcp_server.close()
        for thread in self._threads:
            thread.join(timeout=5.0)
        self.hub.close_all()


def serve(config: SessionConfig) -> None:
    """Run the daemon until interrupted (or until config.duration_s elapses)."""
    service = Service(config)
    service.start()
    # parseable by scripts and the dashboard's integration tests
    print(f"listening tcp={service.tcp_port} http={service.http_port}", flush=True)
    try:
        service.wait()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()


# -- HTTP bridge ---------------------------------------------------------------

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
    ".map": "application/json",
}


def _make_bridge(service: Service) -> ThreadingHTTPServer:
    class BridgeHandler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            log.debug("bridge: " + fmt, *args)

        def _send_json(self, obj: dict, status: int = 200) -> None:
            body = json.dumps(obj).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path == "/events":
                self._stream_events()
            elif self.path == "/config":
                self._send_json(
                    {
                        "f_max": service.resolved.force_params.f_max,
                        "rate_hz": service.config.rate_hz,
                        "transport": service.config.transport,
                        "scenarios": ["egg", "wave"],
                    }
                )
            else:
                self._static()

        def do_POST(self):
            if self.path != "/cmd":
                self._send_json({"ok": False, "error": "NotFound"}, HTTPStatus.NOT_FOUND)
                return
            length = int(self.headers.get("Content-Length", "0"))
            try:
                obj = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError as exc:
                self._send_json({"type": "ack", "ok": False, "error": "BadJson", "message": str(exc)})
                return
            self._send_json(service.execute_command(obj))

        def _stream_events(self):
            sub = service.hub.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                while not service.stop_event.is_set():
                    try:
                        item = sub.get(timeout=0.5)
                    except queue.Empty:
                        self.wfile.write(b": keepalive\n\n")
                        self.wfile.flush()
                        continue
                    if item is _SENTINEL:
                        break
                    payload = item if isinstance(item, dict) else item.to_json_obj()
                    if payload.get("type") != "telemetry":
                        continue  # acks belong to the issuing client only
                    self.wfile.write(
                        b"data: " + json.dumps(payload).encode("utf-8") + b"\n\n"
                    )
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError, OSError):
                pass
            finally:
                service.hub.unsubscribe(sub)

        def _static(self):
            ui_dir = service.config.ui_dir
            if not ui_dir:
                self._send_json(
                    {
                        "service": "echo-teleop",
                        "hint": "telemetry: GET /events (SSE); commands: POST /cmd",
                    }
                )
                return
            rel = self.path.lstrip("/") or "index.html"
            root = Path(ui_dir).resolve()
            target = (root / rel).resolve()
            if not str(target).startswith(str(root)) or not target.is_file():
                self._send_json({"ok": False, "error": "NotFound"}, HTTPStatus.NOT_FOUND)
                return
            body = target.read_bytes()
            self.send_response(200)
            ctype = _CONTENT_TYPES.get(target.suffix, "application/octet-stream")
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    server = ThreadingHTTPServer(("127.0.0.1", service.config.http_port), BridgeHandler)
    server.daemon_threads = True
    return server
