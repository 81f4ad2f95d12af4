"""Write-triggered notification pipeline.

Tree-store triggers turn qualifying writes (chat messages, admin
broadcasts) into pending notifications stored under /pending; a dispatch
cycle drains them to every device token of the recipient through the push
sink port. Recipients with no tokens keep their pending until a token shows
up or the TTL passes. A recipient with an open stream already saw the
message live, so their pending is consumed without a push.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass
from typing import Callable

from .chat import CONVERSATIONS_PATH, split_conversation_key
from .ports import DeadTokenError
from .treestore import ABSENT, PushIdGenerator, TreeStore, WriteEvent

log = logging.getLogger("safeguard.notify")

PENDING_PATH = "pending"
BROADCAST_PATH = "broadcast"
ALL_USERS = "*"

KIND_CHAT = "chat-message"
KIND_BROADCAST = "admin-broadcast"

PREVIEW_CHARS = 120
DEFAULT_PENDING_TTL_S = 72 * 3600


@dataclass(frozen=True)
class DispatchRecord:
    notification_id: str
    device_token: str
    status: str  # delivered | dead-token
    attempted_at: int


class NotifyService:
    def __init__(
        self,
        store: TreeStore,
        auth,
        sink,
        push_ids: PushIdGenerator,
        *,
        pending_ttl_s: int = DEFAULT_PENDING_TTL_S,
        is_foreground: Callable[[str], bool] = lambda user_id: False,
    ):
        self._store = store
        self._auth = auth
        self._sink = sink
        self._push_ids = push_ids
        self._pending_ttl = pending_ttl_s
        self._is_foreground = is_foreground
        self._subscriptions = []
        self._dispatch_lock = threading.Lock()

    def attach(self):
        """Register the tree-store triggers feeding the pending queue."""
        self._subscriptions = [
            self._store.subscribe(
                (CONVERSATIONS_PATH, "*", "messages", "*"),
                "notify-chat-message",
                self._on_chat_write,
            ),
            self._store.subscribe(
                (BROADCAST_PATH, "*"),
                "notify-broadcast",
                self._on_broadcast_write,
            ),
        ]
        return self

    def detach(self):
        for sub in self._subscriptions:
            sub.cancel()
        self._subscriptions = []

    # -- enqueue (runs on the trigger drain thread) -----------------------------

    def _on_chat_write(self, event: WriteEvent):
        if event.old is not ABSENT or not isinstance(event.new, dict):
            return  # only fresh message creations qualify
        sender_id = event.new.get("sender_id")
        body = event.new.get("body")
        if not sender_id or not isinstance(body, str):
            log.warning("skipping malformed chat write at %s", event.path)
            return
        a, b = split_conversation_key(event.segments[1])
        recipient = b if sender_id == a else a
        self._enqueue(recipient, KIND_CHAT, {
            "sender_name": event.new.get("sender_name", ""),
            "preview": body[:PREVIEW_CHARS],
            "conversation": event.segments[1],
            "message_id": event.segments[3],
        }, created_at=event.new.get("sent_at"))

    def _on_broadcast_write(self, event: WriteEvent):
        if event.new is ABSENT or not isinstance(event.new, dict):
            return
        title = event.new.get("title", "")
        body = event.new.get("body", "")
        if not title and not body:
            log.warning("skipping malformed broadcast at %s", event.path)
            return
        self._enqueue(ALL_USERS, KIND_BROADCAST, {
            "title": title,
            "preview": str(body)[:PREVIEW_CHARS],
        }, created_at=event.new.get("sent_at"))

    def _enqueue(self, recipient_id, kind, payload, created_at=None):
        created_at = int(time.time()) if created_at is None else int(created_at)
        pending_id = self._push_ids.next_id()
        self._store.set((PENDING_PATH, pending_id), {
            "recipient_id": recipient_id,
            "kind": kind,
            "payload": payload,
            "created_at": created_at,
        })

    # -- dispatch ------------------------------------------------------------------

    def pending_count(self) -> int:
        node = self._store.get(PENDING_PATH)
        return len(node) if isinstance(node, dict) else 0

    def dispatch_pending(self, now: int | None = None) -> list[DispatchRecord]:
        """One dispatch cycle: send every deliverable pending to every current
        device token of its recipient, then drop it from the queue."""
        with self._dispatch_lock:
            return self._dispatch(int(time.time()) if now is None else now)

    def _dispatch(self, now: int) -> list[DispatchRecord]:
        node = self._store.get(PENDING_PATH)
        if node is ABSENT:
            return []
        token_index = self._auth.device_token_index()
        records: list[DispatchRecord] = []
        for pending_id in sorted(node):
            entry = node[pending_id]
            if not isinstance(entry, dict) or "recipient_id" not in entry:
                log.warning("dropping malformed pending %s", pending_id)
                self._store.set((PENDING_PATH, pending_id), ABSENT)
                continue
            recipient = entry["recipient_id"]
            kind = entry.get("kind", KIND_CHAT)
            payload = entry.get("payload", {})

            if recipient == ALL_USERS:
                tokens = sorted(t for toks in token_index.values() for t in toks)
            elif kind == KIND_CHAT and self._is_foreground(recipient):
                # already delivered over the live stream; consume silently
                self._store.set((PENDING_PATH, pending_id), ABSENT)
                continue
            else:
                tokens = token_index.get(recipient, [])

            if not tokens:
                if now - entry.get("created_at", now) > self._pending_ttl:
                    self._store.set((PENDING_PATH, pending_id), ABSENT)
                continue

            for token in tokens:
                try:
                    self._sink.deliver(token, kind, payload)
                    records.append(DispatchRecord(pending_id, token, "delivered", now))
                except DeadTokenError:
                    records.append(DispatchRecord(pending_id, token, "dead-token", now))
                    self._auth.unregister_device_token(token)
            self._store.set((PENDING_PATH, pending_id), ABSENT)
        return records


class DispatchWorker:
    """Drives dispatch cycles: woken by pending writes, swept at least every
    interval_s as a fallback."""

    def __init__(self, notify: NotifyService, store: TreeStore, interval_s: float = 1.0):
        self._notify = notify
        self._interval = interval_s
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._sub = store.subscribe(
            (PENDING_PATH, "*"), "dispatch-worker-wake", lambda event: self._wake.set()
        )
        self._thread = threading.Thread(target=self._run, name="notify-dispatch", daemon=True)

    def start(self):
        self._thread.start()
        return self

    def _run(self):
        while not self._stop.is_set():
            self._wake.wait(timeout=self._interval)
            self._wake.clear()
            if self._stop.is_set():
                return
            try:
                self._notify.dispatch_pending()
            except Exception:
                log.exception("dispatch cycle failed")

    def stop(self):
        self._sub.cancel()
        self._stop.set()
        self._wake.set()
        self._thread.join(timeout=5)
