"""User search, pairwise chat, and checkpoint-based presence.

A conversation is stored once, under a canonical key built from the sorted
participant pair, so both sides read the same message log and nothing is
double-stored. Presence is derived data: the freshest checkpoint timestamp
against the current time, thresholded into active/away.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .errors import (
    BodyTooLong,
    EmptyBody,
    EmptyQuery,
    NotParticipant,
    SelfMessage,
    UnknownCheckpoint,
    UnknownRecipient,
    UnknownUser,
)
from .treestore import ABSENT, PushIdGenerator, TreeStore

CONVERSATIONS_PATH = "conversations"
PARTNERS_PATH = "chats"
PRESENCE_PATH = "presence"

MAX_BODY_CHARS = 4096
DEFAULT_CHECKPOINTS = ("login", "chat-open", "profile-open")
DEFAULT_ACTIVITY_THRESHOLD_S = 300


@dataclass(frozen=True)
class Message:
    id: str
    sender_id: str
    sender_name: str
    body: str
    sent_at: int


@dataclass(frozen=True)
class PresenceSummary:
    state: str  # active | away
    seconds_since_seen: Optional[int]  # None when the user never checkpointed


def conversation_key(a: str, b: str) -> str:
    """Order-independent key: smaller id, '~', larger id."""
    return f"{a}~{b}" if a < b else f"{b}~{a}"


def split_conversation_key(key: str) -> tuple[str, str]:
    a, _, b = key.partition("~")
    return a, b


class ChatService:
    def __init__(
        self,
        store: TreeStore,
        auth,
        push_ids: PushIdGenerator,
        *,
        checkpoints=DEFAULT_CHECKPOINTS,
        activity_threshold_s: int = DEFAULT_ACTIVITY_THRESHOLD_S,
    ):
        self._store = store
        self._auth = auth
        self._push_ids = push_ids
        self.checkpoints = tuple(checkpoints)
        self.activity_threshold_s = activity_threshold_s

    # -- search -----------------------------------------------------------------

    def search_users(self, query: str, limit: int = 20, now: int | None = None):
        """Users whose first or last name contains the query, case-insensitive,
        sorted by display name then id."""
        query = query.strip()
        if not query:
            raise EmptyQuery("search query is empty")
        now = int(time.time()) if now is None else now
        needle = query.casefold()
        users = self._store.get("users")
        rows = []
        if isinstance(users, dict):
            for user_id, record in users.items():
                if not isinstance(record, dict):
                    continue
                first = str(record.get("first_name", ""))
                last = str(record.get("last_name", ""))
                if needle in first.casefold() or needle in last.casefold():
                    display = f"{first} {last}".strip()
                    rows.append((display.casefold(), user_id, display))
        rows.sort(key=lambda r: (r[0], r[1]))
        return [
            (user_id, display, self.presence(user_id, now))
            for _, user_id, display in rows[: max(0, limit)]
        ]

    # -- messaging ---------------------------------------------------------------

    def send_message(self, sender_id: str, recipient_id: str, body: str,
                     now: int | None = None) -> Message:
        now = int(time.time()) if now is None else now
        if sender_id == recipient_id:
            raise SelfMessage("cannot message yourself")
        if not body:
            raise EmptyBody("message body is empty")
        if len(body) > MAX_BODY_CHARS:
            raise BodyTooLong(f"message bodies are capped at {MAX_BODY_CHARS} characters")
        sender = self._auth.get_user(sender_id)
        if not self._auth.user_exists(recipient_id):
            raise UnknownRecipient(f"no user {recipient_id!r}")

        key = conversation_key(sender_id, recipient_id)
        message_id = self._store.push(
            (CONVERSATIONS_PATH, key, "messages"),
            {
                "sender_id": sender_id,
                "sender_name": sender.display_name,
                "body": body,
                "sent_at": now,
            },
            now_ms=now * 1000,
        )
        self._store.set((PARTNERS_PATH, sender_id, "partners", recipient_id), True)
        self._store.set((PARTNERS_PATH, recipient_id, "partners", sender_id), True)
        return Message(message_id, sender_id, sender.display_name, body, now)

    def get_conversation(self, user_id: str, peer_id: str,
                         after: Optional[str] = None, limit: int = 100) -> list[Message]:
        """Messages with id > after, ascending, at most limit."""
        if user_id == peer_id:
            raise NotParticipant("no conversation with yourself")
        key = conversation_key(user_id, peer_id)
        node = self._store.get((CONVERSATIONS_PATH, key, "messages"))
        if node is ABSENT:
            return []
        out = []
        for message_id in sorted(node):
            if after is not None and message_id <= after:
                continue
            record = node[message_id]
            out.append(Message(
                id=message_id,
                sender_id=record["sender_id"],
                sender_name=record.get("sender_name", ""),
                body=record.get("body", ""),
                sent_at=record.get("sent_at", 0),
            ))
            if len(out) >= limit:
                break
        return out

    def partners_of(self, user_id: str) -> list[str]:
        node = self._store.get((PARTNERS_PATH, user_id, "partners"))
        return sorted(node) if isinstance(node, dict) else []

    # -- presence ----------------------------------------------------------------

    def checkpoint(self, user_id: str, name: str, now: int | None = None):
        now = int(time.time()) if now is None else now
        if name not in self.checkpoints:
            raise UnknownCheckpoint(f"checkpoint {name!r} is not configured")
        self._auth.get_user(user_id)

        def clamp(previous):
            return now if previous is ABSENT or previous < now else previous

        self._store.transform((PRESENCE_PATH, user_id, name), clamp)

    def presence(self, user_id: str, now: int | None = None) -> PresenceSummary:
        now = int(time.time()) if now is None else now
        if not self._auth.user_exists(user_id):
            raise UnknownUser(f"no user {user_id!r}")
        node = self._store.get((PRESENCE_PATH, user_id))
        if node is ABSENT:
            return PresenceSummary("away", None)
        last_seen = max(node.values())
        delta = now - last_seen
        state = "active" if delta <= self.activity_threshold_s else "away"
        return PresenceSummary(state, delta)
