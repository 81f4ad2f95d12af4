"""HTTP gateway: JSON request/response over the spec route map, SSE stream,
static webui hosting.

Built on the stdlib threading HTTP server: one thread per connection, which
keeps stream connections simple (each owns its thread and its queue) and
store commits are already serialized internally.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlsplit

from .app import App
from .errors import (
    BindFailure,
    Forbidden,
    InvalidValue,
    SafeguardError,
    Unauthenticated,
)
from .geo import GeoPoint

log = logging.getLogger("safeguard.gateway")

STREAM_PING_SECONDS = 15.0


def _alert_json(alert):
    return {
        "alert_id": alert.alert_id,
        "user_id": alert.user_id,
        "lat": alert.location.lat,
        "lon": alert.location.lon,
        "triggered_at": alert.triggered_at,
        "deliveries": [
            {"number": d.number, "status": d.status, "message_id": d.message_id}
            for d in alert.deliveries
        ],
    }


def _message_json(message):
    return {
        "id": message.id,
        "sender_id": message.sender_id,
        "sender_name": message.sender_name,
        "body": message.body,
        "sent_at": message.sent_at,
    }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "safeguard"

    # quiet the default stderr access log
    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    @property
    def app(self) -> App:
        return self.server.app  # type: ignore[attr-defined]

    def do_GET(self):
        self._route("GET")

    def do_POST(self):
        self._route("POST")

    def do_PUT(self):
        self._route("PUT")

    def _route(self, method):
        split = urlsplit(self.path)
        parts = [unquote(p) for p in split.path.split("/") if p]
        self._query = parse_qs(split.query)
        # drain the body up front so an early error cannot desync keep-alive
        length = int(self.headers.get("Content-Length") or 0)
        self._raw_body = self.rfile.read(length) if length > 0 else b""
        try:
            handler = self._match(method, parts)
            if handler is None:
                self._send_error_body(404, "NotFound", f"no route {method} {split.path}")
                return
            handler()
        except SafeguardError as exc:
            self._send_error_body(exc.http_status, exc.code, exc.message)
        except (BrokenPipeError, ConnectionResetError):
            pass
        except Exception:
            log.exception("unhandled error on %s %s", method, self.path)
            self._send_error_body(500, "Internal", "internal error")

    def _match(self, method, parts):
        route = (method, *parts)
        if route == ("GET", "health"):
            return self._health
        if route == ("POST", "auth", "register"):
            return self._register
        if route == ("POST", "auth", "verify"):
            return self._verify
        if route == ("POST", "auth", "login"):
            return self._login
        if route == ("POST", "auth", "device-token"):
            return self._device_token
        if route == ("PUT", "contacts"):
            return self._put_contacts
        if route == ("GET", "contacts"):
            return self._get_contacts
        if route == ("POST", "sos"):
            return self._sos
        if route == ("GET", "alerts"):
            return self._alerts
        if route == ("GET", "nearby"):
            return self._nearby
        if route == ("GET", "users", "search"):
            return self._search
        if method == "POST" and len(parts) == 3 and parts[0] == "chats" and parts[2] == "messages":
            return lambda: self._send_chat(parts[1])
        if method == "GET" and len(parts) == 3 and parts[0] == "chats" and parts[2] == "messages":
            return lambda: self._get_chat(parts[1])
        if route == ("POST", "presence", "checkpoint"):
            return self._checkpoint
        if method == "GET" and len(parts) == 3 and parts[0] == "users" and parts[2] == "presence":
            return lambda: self._presence(parts[1])
        if route == ("GET", "stream"):
            return self._stream
        if route == ("POST", "admin", "broadcast"):
            return self._broadcast
        if method == "GET" and parts and parts[0] == "app":
            return lambda: self._static(parts[1:])
        return None

    # -- plumbing ---------------------------------------------------------------

    def _json_body(self) -> dict:
        raw = self._raw_body
        if not raw:
            return {}
        try:
            body = json.loads(raw)
        except json.JSONDecodeError:
            raise InvalidValue("request body is not valid JSON") from None
        if not isinstance(body, dict):
            raise InvalidValue("request body must be a JSON object")
        return body

    def _field(self, body, name, kind=str):
        value = body.get(name)
        if value is None:
            raise InvalidValue(f"missing field {name!r}")
        if kind is float:
            try:
                return float(value)
            except (TypeError, ValueError):
                raise InvalidValue(f"field {name!r} must be a number") from None
        if kind is str and not isinstance(value, str):
            raise InvalidValue(f"field {name!r} must be a string")
        return value

    def _query_value(self, name, default=None):
        values = self._query.get(name)
        return values[0] if values else default

    def _session_user(self) -> str:
        header = self.headers.get("Authorization") or ""
        token = ""
        if header.startswith("Bearer "):
            token = header[len("Bearer "):].strip()
        if not token:
            token = self._query_value("token", "")
        if not token:
            raise Unauthenticated("missing bearer token")
        return self.app.auth.authenticate(token)

    def _send_json(self, obj, status=200):
        payload = json.dumps(obj).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def _send_error_body(self, status, code, message):
        try:
            self._send_json({"error": {"code": code, "message": message}}, status=status)
        except (BrokenPipeError, ConnectionResetError):
            pass

    # -- routes ------------------------------------------------------------------

    def _health(self):
        self._send_json({
            "status": "ok",
            "users": len(self.app.auth.all_user_ids()),
            "commit": self.app.store.commit_count,
            "pois": self.app.geo.poi_count,
            "streams": self.app.streams.connection_count(),
            "pending": self.app.notify.pending_count(),
        })

    def _register(self):
        body = self._json_body()
        user_id, _ = self.app.auth.register(
            self._field(body, "first_name"),
            self._field(body, "last_name"),
            self._field(body, "email"),
            self._field(body, "password"),
        )
        self._send_json({"user_id": user_id, "verification": "sent"})

    def _verify(self):
        body = self._json_body()
        user_id = self.app.auth.verify_email(self._field(body, "token"))
        self._send_json({"user_id": user_id, "verified": True})

    def _login(self):
        body = self._json_body()
        session = self.app.auth.login(
            self._field(body, "email"), self._field(body, "password")
        )
        user = self.app.auth.get_user(session.user_id)
        if "login" in self.app.chat.checkpoints:
            self.app.chat.checkpoint(session.user_id, "login")
        self._send_json({
            "token": session.token,
            "expires_at": session.expires_at,
            "user": {
                "id": user.id,
                "first_name": user.first_name,
                "last_name": user.last_name,
                "email": user.email,
                "is_admin": user.is_admin,
            },
        })

    def _device_token(self):
        user_id = self._session_user()
        body = self._json_body()
        self.app.auth.register_device_token(user_id, self._field(body, "token"))
        self._send_json({"ok": True})

    def _put_contacts(self):
        user_id = self._session_user()
        body = self._json_body()
        numbers = body.get("numbers")
        if not isinstance(numbers, list):
            raise InvalidValue("field 'numbers' must be a list")
        stored = self.app.sos.set_contacts(user_id, numbers)
        self._send_json({"numbers": stored})

    def _get_contacts(self):
        user_id = self._session_user()
        self._send_json({"numbers": self.app.sos.get_contacts(user_id)})

    def _sos(self):
        user_id = self._session_user()
        body = self._json_body()
        location = GeoPoint(self._field(body, "lat", float), self._field(body, "lon", float))
        alert = self.app.sos.trigger_sos(user_id, location)
        self._send_json(_alert_json(alert))

    def _alerts(self):
        user_id = self._session_user()
        alerts = self.app.sos.list_alerts(user_id)
        self._send_json({"alerts": [_alert_json(a) for a in alerts]})

    def _nearby(self):
        self._session_user()
        lat = self._query_value("lat")
        lon = self._query_value("lon")
        if lat is None or lon is None:
            raise InvalidValue("lat and lon query parameters are required")
        try:
            center = GeoPoint(float(lat), float(lon))
            k = int(self._query_value("k", self.app.geo.default_k))
            radius = float(self._query_value("radius", self.app.geo.default_radius_m))
        except ValueError:
            raise InvalidValue("lat, lon, k, radius must be numeric") from None
        category = self._query_value("category") or None
        results = self.app.geo.nearby(center, category, k, radius)
        self._send_json({"results": [
            {
                "id": poi.id,
                "name": poi.name,
                "category": poi.category,
                "lat": poi.location.lat,
                "lon": poi.location.lon,
                "distance_m": distance,
            }
            for poi, distance in results
        ]})

    def _search(self):
        self._session_user()
        query = self._query_value("q", "")
        try:
            limit = int(self._query_value("limit", 20))
        except ValueError:
            raise InvalidValue("limit must be an integer") from None
        rows = self.app.chat.search_users(query, limit)
        self._send_json({"results": [
            {
                "user_id": row_id,
                "display_name": display,
                "presence": {
                    "state": presence.state,
                    "seconds_since_seen": presence.seconds_since_seen,
                },
            }
            for row_id, display, presence in rows
        ]})

    def _send_chat(self, peer_id):
        user_id = self._session_user()
        body = self._json_body()
        message = self.app.chat.send_message(user_id, peer_id, self._field(body, "body"))
        self._send_json(_message_json(message))

    def _get_chat(self, peer_id):
        user_id = self._session_user()
        after = self._query_value("after")
        try:
            limit = int(self._query_value("limit", 100))
        except ValueError:
            raise InvalidValue("limit must be an integer") from None
        messages = self.app.chat.get_conversation(user_id, peer_id, after, limit)
        self._send_json({"messages": [_message_json(m) for m in messages]})

    def _checkpoint(self):
        user_id = self._session_user()
        body = self._json_body()
        self.app.chat.checkpoint(user_id, self._field(body, "name"))
        self._send_json({"ok": True})

    def _presence(self, target_id):
        self._session_user()
        summary = self.app.chat.presence(target_id)
        self._send_json({
            "user_id": target_id,
            "state": summary.state,
            "seconds_since_seen": summary.seconds_since_seen,
        })

    def _broadcast(self):
        user_id = self._session_user()
        if not self.app.auth.get_user(user_id).is_admin:
            raise Forbidden("admin credential required")
        body = self._json_body()
        title = self._field(body, "title")
        text = self._field(body, "body")
        broadcast_id = self.app.store.push("broadcast", {
            "title": title,
            "body": text,
            "sender_id": user_id,
            "sent_at": int(time.time()),
        })
        self._send_json({"ok": True, "broadcast_id": broadcast_id})

    # -- stream --------------------------------------------------------------------

    def _stream(self):
        user_id = self._session_user()
        q = self.app.streams.open(user_id)
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Connection", "close")
            self.end_headers()
            self.wfile.write(b": connected\n\n")
            self.wfile.flush()
            while True:
                try:
                    event = q.get(timeout=STREAM_PING_SECONDS)
                except queue.Empty:
                    self.wfile.write(b": ping\n\n")
                    self.wfile.flush()
                    continue
                if event is None:
                    break
                frame = f"event: {event['type']}\ndata: {json.dumps(event)}\n\n"
                self.wfile.write(frame.encode())
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, TimeoutError):
            pass
        finally:
            self.app.streams.close(user_id, q)
            self.close_connection = True

    # -- static webui ----------------------------------------------------------------

    def _static(self, parts):
        root = self.app.config.webui_dir
        if not root:
            self._send_error_body(404, "NotFound", "webui not configured")
            return
        root_path = Path(root).resolve()
        rel = "/".join(parts) or "index.html"
        target = (root_path / rel).resolve()
        if not str(target).startswith(str(root_path)) or not target.is_file():
            self._send_error_body(404, "NotFound", f"no such asset {rel!r}")
            return
        content_type = mimetypes.guess_type(target.name)[0] or "application/octet-stream"
        payload = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, handler, app: App):
        self.app = app
        super().__init__(address, handler)


class GatewayServer:
    """Owns the HTTP server plus the app's background workers."""

    def __init__(self, app: App):
        self.app = app
        try:
            self._httpd = _Server((app.config.host, app.config.port), _Handler, app)
        except OSError as exc:
            raise BindFailure(f"cannot bind {app.config.bind_address}: {exc}") from exc
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="gateway-http", daemon=True
        )

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    def start(self):
        self.app.start_background()
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()
        self.app.close()
        self._thread.join(timeout=5)


def serve(config=None) -> GatewayServer:
    """Build an App from config and start serving; returns the running server."""
    return GatewayServer(App(config)).start()
