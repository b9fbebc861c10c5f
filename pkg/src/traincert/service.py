"""HTTP monitor service around a single training session.

One background thread runs the training loop and is the only writer;
request handlers read an append-only list of completed records under a
lock. Operator commands enter a serialized queue and are drained by the
training thread exactly once per epoch boundary. Event-stream consumers
get bounded queues; a slow consumer loses events (it can backfill via
/records) rather than ever blocking training.
"""

from __future__ import annotations

import json
import threading
import queue as queue_mod
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .config import ConfigError, SessionConfig, config_to_dict, control_from_dict
from .logio import dumps
from .session import run_session

SUBSCRIBER_QUEUE_SIZE = 1024
_SENTINEL = None


class SessionStoppedError(RuntimeError):
    """Command arrived after the session ended."""


class ControlQueue:
    """Pending operator commands, stamped with the epoch they apply at.

    drain(e) is called by the training thread at the boundary of epoch e;
    a command posted between boundaries applies at the next one. While the
    session is paused the boundary is held open, so commands apply to the
    held epoch itself.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._pending: list = []
        self._boundary = 0
        self._paused = False
        self.stopped = False

    def post(self, command) -> int:
        with self._lock:
            if self.stopped:
                raise SessionStoppedError("session is stopped")
            apply_at = self._boundary if self._paused else self._boundary + 1
            self._pending.append((apply_at, command))
            return apply_at

    def drain(self, epoch: int) -> list:
        with self._lock:
            self._boundary = epoch
            due = [cmd for at, cmd in self._pending if at <= epoch]
            self._pending = [(at, cmd) for at, cmd in self._pending if at > epoch]
            return due

    def set_paused(self, value: bool) -> None:
        with self._lock:
            self._paused = value

    def mark_stopped(self) -> None:
        with self._lock:
            self.stopped = True


class TrainingService:
    """Shared state between the training thread and request handlers."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.controls = ControlQueue()
        self._lock = threading.Lock()
        self._records: list[dict] = []
        self._subscribers: list[queue_mod.Queue] = []
        self.status = "idle"
        self.reason: str | None = None
        self.result = None
        self.error: Exception | None = None
        self._thread: threading.Thread | None = None

    # -- training side

    def start(self) -> None:
        self.status = "running"
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        try:
            self.result = run_session(
                self.config, controls=self.controls, on_record=self._publish
            )
            self.reason = self.result.reason
            self.status = "diverged" if self.result.diverged else "stopped"
        except Exception as exc:  # surfaced via /session, not swallowed
            self.error = exc
            self.reason = "error"
            self.status = "error"
        finally:
            self.controls.mark_stopped()
            self._broadcast(_SENTINEL)

    def _publish(self, record) -> None:
        self._broadcast(record.to_dict())

    def _broadcast(self, item) -> None:
        with self._lock:
            if item is not _SENTINEL:
                self._records.append(item)
            for sub in self._subscribers:
                try:
                    sub.put_nowait(item)
                except queue_mod.Full:
                    pass  # consumer too slow; it can backfill via /records

    def wait(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    # -- request side

    def records_from(self, first_epoch: int) -> list[dict]:
        with self._lock:
            return [r for r in self._records if r["epoch"] >= first_epoch]

    def last_epoch(self) -> int:
        with self._lock:
            return self._records[-1]["epoch"] if self._records else 0

    def subscribe(self) -> queue_mod.Queue:
        sub: queue_mod.Queue = queue_mod.Queue(maxsize=SUBSCRIBER_QUEUE_SIZE)
        with self._lock:
            self._subscribers.append(sub)
            if self.status in ("stopped", "diverged", "error"):
                sub.put_nowait(_SENTINEL)
        return sub

    def unsubscribe(self, sub: queue_mod.Queue) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def session_info(self) -> dict:
        return {
            "status": self.status,
            "epoch": self.last_epoch(),
            "reason": self.reason,
            "config": config_to_dict(self.config),
        }

    def handle_control(self, body: dict) -> tuple[int, dict]:
        try:
            command = control_from_dict(body)
        except ConfigError as exc:
            return 400, {"error": {"field": exc.path, "message": str(exc)}}
        try:
            apply_at = self.controls.post(command)
        except SessionStoppedError:
            return 409, {"error": {"message": "session is stopped"}}
        return 200, {"accepted": True, "kind": command.kind, "applies_at_epoch": apply_at}


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> TrainingService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # keep test output clean
        pass

    def _send_json(self, status: int, obj) -> None:
        payload = dumps(obj).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(payload)

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/healthz":
            self._send_json(200, {"ok": True, "status": self.service.status})
        elif url.path == "/session":
            self._send_json(200, self.service.session_info())
        elif url.path == "/records":
            query = parse_qs(url.query)
            raw = query.get("from", ["1"])[0]
            try:
                first = int(raw)
            except ValueError:
                self._send_json(
                    400, {"error": {"field": "from", "message": f"not an integer: {raw!r}"}}
                )
                return
            self._send_json(200, self.service.records_from(first))
        elif url.path == "/stream":
            self._stream()
        else:
            self._send_json(404, {"error": {"message": f"no route {url.path}"}})

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/control":
            self._send_json(404, {"error": {"message": f"no route {url.path}"}})
            return
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except json.JSONDecodeError as exc:
            self._send_json(400, {"error": {"field": "body", "message": f"bad JSON: {exc}"}})
            return
        status, obj = self.service.handle_control(body)
        self._send_json(status, obj)

    def _stream(self):
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        # no Content-Length: the stream ends when the connection closes
        self.send_header("Connection", "close")
        self.end_headers()
        sub = self.service.subscribe()
        try:
            while True:
                item = sub.get()
                if item is _SENTINEL:
                    closing = {"type": "stopped", "reason": self.service.reason}
                    self.wfile.write(f"data: {dumps(closing)}\n\n".encode("utf-8"))
                    self.wfile.flush()
                    break
                self.wfile.write(f"data: {dumps(item)}\n\n".encode("utf-8"))
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.service.unsubscribe(sub)
            self.close_connection = True


class MonitorServer:
    """The HTTP server plus its training service, with lifecycle helpers."""

    def __init__(self, config: SessionConfig, host: str = "127.0.0.1", port: int = 0):
        self.service = TrainingService(config)
        self.httpd = ThreadingHTTPServer((host, port), _Handler)
        self.httpd.daemon_threads = True
        self.httpd.service = self.service  # type: ignore[attr-defined]
        self._http_thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self.httpd.server_address[1]

    def start(self) -> None:
        self._http_thread = threading.Thread(
            target=self.httpd.serve_forever, daemon=True
        )
        self._http_thread.start()
        self.service.start()

    def wait_for_run(self, timeout: float | None = None) -> None:
        self.service.wait(timeout)

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()


def serve(config: SessionConfig, host: str = "127.0.0.1", port: int = 0) -> MonitorServer:
    server = MonitorServer(config, host, port)
    server.start()
    return server
