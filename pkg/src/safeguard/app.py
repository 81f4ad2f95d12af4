"""Composition root: wires the store, services, sinks, and stream fan-out.

One App owns everything behind the HTTP layer. Live stream routing works
the same way notifications do: tree-store triggers on conversations,
presence, and alerts push events into per-user queues held by the
StreamRegistry; the gateway drains those queues into server-sent events.
"""

from __future__ import annotations

import logging
import os
import queue
import threading
from typing import Optional

from .auth import AuthService
from .chat import ChatService, split_conversation_key
from .config import ServiceConfig
from .errors import UnknownUser
from .geo import GeoService
from .notify import DispatchWorker, NotifyService
from .ports import (
    FilePushSink,
    FileSmsGateway,
    MemoryPushSink,
    MemorySmsGateway,
    OutboxMailer,
)
from .sos import SosService
from .treestore import ABSENT, PushIdGenerator, TreeStore

log = logging.getLogger("safeguard.app")


class StreamRegistry:
    """Per-user event queues for open stream connections."""

    def __init__(self):
        self._lock = threading.Lock()
        self._queues: dict[str, list[queue.Queue]] = {}

    def open(self, user_id: str) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._queues.setdefault(user_id, []).append(q)
        return q

    def close(self, user_id: str, q: queue.Queue):
        with self._lock:
            queues = self._queues.get(user_id, [])
            if q in queues:
                queues.remove(q)
            if not queues:
                self._queues.pop(user_id, None)

    def has_stream(self, user_id: str) -> bool:
        with self._lock:
            return bool(self._queues.get(user_id))

    def streaming_users(self) -> list[str]:
        with self._lock:
            return list(self._queues)

    def connection_count(self) -> int:
        with self._lock:
            return sum(len(queues) for queues in self._queues.values())

    def push(self, user_id: str, event: dict):
        with self._lock:
            queues = list(self._queues.get(user_id, ()))
        for q in queues:
            q.put(event)

    def shutdown(self):
        with self._lock:
            queues = [q for qs in self._queues.values() for q in qs]
            self._queues.clear()
        for q in queues:
            q.put(None)


class App:
    def __init__(self, config: Optional[ServiceConfig] = None):
        self.config = config or ServiceConfig()
        cfg = self.config
        cfg.data_path.mkdir(parents=True, exist_ok=True)
        cfg.outbox_path.mkdir(parents=True, exist_ok=True)

        self.store = TreeStore()
        if cfg.snapshot_path.exists():
            self.store.restore(cfg.snapshot_path.read_text(encoding="utf-8"))
        self.push_ids = PushIdGenerator()
        self.store.use_push_generator(self.push_ids)

        self.mailer = OutboxMailer(cfg.outbox_path)
        if cfg.sms_sink == "memory":
            self.sms_gateway = MemorySmsGateway()
        else:
            self.sms_gateway = FileSmsGateway(
                cfg.outbox_path / "sms-outbox.log", fail_every=cfg.sms_fail_every
            )
        if cfg.push_sink == "memory":
            self.push_sink = MemoryPushSink()
        else:
            self.push_sink = FilePushSink(cfg.outbox_path / "push-outbox.log")

        self.streams = StreamRegistry()
        self.auth = AuthService(
            self.store,
            self.mailer,
            session_ttl_s=cfg.session_ttl_seconds,
            verification_ttl_s=cfg.verification_ttl_seconds,
            iterations=cfg.password_iterations,
        )
        self.geo = GeoService(
            cell_size_deg=cfg.grid_cell_degrees,
            default_k=cfg.nearby_default_k,
            default_radius_m=cfg.nearby_default_radius_m,
        )
        if cfg.pois_path.exists():
            accepted, rejected = self.geo.ingest_pois(cfg.pois_path)
            log.info("loaded %d POIs (%d rejected) from %s", accepted, len(rejected), cfg.pois_path)
        self.sos = SosService(self.store, self.auth, self.sms_gateway, self.push_ids)
        self.chat = ChatService(
            self.store,
            self.auth,
            self.push_ids,
            checkpoints=cfg.checkpoints,
            activity_threshold_s=cfg.activity_threshold_seconds,
        )
        self.notify = NotifyService(
            self.store,
            self.auth,
            self.push_sink,
            self.push_ids,
            pending_ttl_s=cfg.pending_ttl_seconds,
            is_foreground=self.streams.has_stream,
        ).attach()

        self._wire_stream_events()
        self._snapshotted_commit = self.store.commit_count
        self._snapshot_lock = threading.Lock()
        self._dispatch_worker: Optional[DispatchWorker] = None
        self._snapshot_stop = threading.Event()
        self._snapshot_thread: Optional[threading.Thread] = None
        self._closed = False

    # -- live stream fan-out (handlers run on the trigger drain thread) ----------

    def _wire_stream_events(self):
        self.store.subscribe(
            ("conversations", "*", "messages", "*"), "stream-messages", self._on_message_write
        )
        self.store.subscribe(("presence", "*", "*"), "stream-presence", self._on_presence_write)
        self.store.subscribe(("alerts", "*", "*"), "stream-alerts", self._on_alert_write)

    def _on_message_write(self, event):
        if event.old is not ABSENT or not isinstance(event.new, dict):
            return
        key = event.segments[1]
        a, b = split_conversation_key(key)
        base = {
            "type": "message",
            "conversation": key,
            "id": event.segments[3],
            "sender_id": event.new.get("sender_id"),
            "sender_name": event.new.get("sender_name", ""),
            "body": event.new.get("body", ""),
            "sent_at": event.new.get("sent_at"),
        }
        for user_id, peer in ((a, b), (b, a)):
            if self.streams.has_stream(user_id):
                self.streams.push(user_id, {**base, "peer": peer})

    def _on_presence_write(self, event):
        user_id = event.segments[1]
        try:
            summary = self.chat.presence(user_id)
        except UnknownUser:
            return
        payload = {
            "type": "presence",
            "user_id": user_id,
            "state": summary.state,
            "seconds_since_seen": summary.seconds_since_seen,
        }
        for watcher in self.streams.streaming_users():
            if watcher != user_id and user_id in self.chat.partners_of(watcher):
                self.streams.push(watcher, payload)

    def _on_alert_write(self, event):
        user_id = event.segments[1]
        if event.new is ABSENT or not self.streams.has_stream(user_id):
            return
        deliveries = event.new.get("deliveries", {})
        self.streams.push(user_id, {
            "type": "sos",
            "alert_id": event.segments[2],
            "triggered_at": event.new.get("triggered_at"),
            "deliveries": [deliveries[k] for k in sorted(deliveries, key=int)]
            if isinstance(deliveries, dict) else [],
        })

    # -- background workers --------------------------------------------------------

    def start_background(self):
        self._dispatch_worker = DispatchWorker(
            self.notify, self.store, interval_s=self.config.dispatch_interval_seconds
        ).start()
        self._snapshot_thread = threading.Thread(
            target=self._snapshot_loop, name="snapshot-loop", daemon=True
        )
        self._snapshot_thread.start()
        return self

    def _snapshot_loop(self):
        while not self._snapshot_stop.wait(timeout=self.config.snapshot_interval_seconds):
            try:
                self.snapshot_now()
            except Exception:
                log.exception("periodic snapshot failed")

    def snapshot_now(self, force: bool = False):
        """Write the snapshot atomically if there are unsnapshotted commits."""
        with self._snapshot_lock:
            commit = self.store.commit_count
            if not force and commit == self._snapshotted_commit:
                return False
            document = self.store.snapshot()
            tmp = self.config.snapshot_path.with_suffix(".tmp")
            tmp.write_text(document, encoding="utf-8")
            os.replace(tmp, self.config.snapshot_path)
            self._snapshotted_commit = commit
            return True

    def close(self):
        if self._closed:
            return
        self._closed = True
        if self._dispatch_worker is not None:
            self._dispatch_worker.stop()
        self._snapshot_stop.set()
        if self._snapshot_thread is not None:
            self._snapshot_thread.join(timeout=5)
        self.store.wait_idle(timeout=5)
        self.streams.shutdown()
        self.snapshot_now()
        self.notify.detach()
        self.store.close()
