"""Outbound delivery ports: mail, SMS, push.

Real carriers and push services are out of scope; the shipped
implementations append human-readable audit lines (or .eml files) under the
data directory's outbox/. Memory variants exist for tests, and both flavors
can fail deterministically to exercise partial-failure paths.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from datetime import datetime, timezone
from pathlib import Path


class SmsDeliveryError(Exception):
    """The SMS gateway refused or dropped one send."""


class DeadTokenError(Exception):
    """The push sink reports this device token as gone."""


def _iso_now() -> str:
    return datetime.now(timezone.utc).isoformat()


class OutboxMailer:
    """Writes one RFC-822-style file per mail: outbox/<epoch-ms>-<rand>.eml"""

    def __init__(self, outbox_dir):
        self.outbox_dir = Path(outbox_dir)
        self.outbox_dir.mkdir(parents=True, exist_ok=True)

    def send(self, to: str, subject: str, body: str):
        name = f"{int(time.time() * 1000)}-{secrets.token_hex(4)}.eml"
        path = self.outbox_dir / name
        path.write_text(f"To: {to}\nSubject: {subject}\n\n{body}\n", encoding="utf-8")
        return name


class MemoryMailer:
    def __init__(self):
        self.messages: list[tuple[str, str, str]] = []

    def send(self, to, subject, body):
        self.messages.append((to, subject, body))


class FileSmsGateway:
    """Appends `<iso8601>\\t<number>\\t<body>` per delivered SMS.

    fail_every=N makes every Nth send raise, deterministically, for
    partial-failure tests; failed sends write nothing.
    """

    def __init__(self, log_path, fail_every: int = 0):
        self.log_path = Path(log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        self.fail_every = fail_every
        self._count = 0
        self._lock = threading.Lock()

    def send(self, number: str, body: str) -> str:
        with self._lock:
            self._count += 1
            n = self._count
            if self.fail_every and n % self.fail_every == 0:
                raise SmsDeliveryError(f"simulated gateway failure for send #{n}")
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(f"{_iso_now()}\t{number}\t{body}\n")
        return f"sms-{n:08d}"


class MemorySmsGateway:
    def __init__(self, fail_numbers=()):
        self.sent: list[tuple[str, str]] = []
        self.fail_numbers = set(fail_numbers)
        self._count = 0
        self._lock = threading.Lock()

    def send(self, number, body):
        with self._lock:
            if number in self.fail_numbers:
                raise SmsDeliveryError(f"simulated failure for {number}")
            self._count += 1
            self.sent.append((number, body))
            return f"mem-{self._count:08d}"


class FilePushSink:
    """Appends `<iso8601>\\t<device-token>\\t<kind>\\t<compact-payload>` per push."""

    def __init__(self, log_path, dead_tokens=()):
        self.log_path = Path(log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        self.dead_tokens = set(dead_tokens)
        self._lock = threading.Lock()

    def deliver(self, token: str, kind: str, payload: dict):
        if token in self.dead_tokens:
            raise DeadTokenError(token)
        line = f"{_iso_now()}\t{token}\t{kind}\t{_compact(payload)}\n"
        with self._lock:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line)


class MemoryPushSink:
    def __init__(self, dead_tokens=()):
        self.delivered: list[tuple[str, str, dict]] = []
        self.dead_tokens = set(dead_tokens)
        self._lock = threading.Lock()

    def deliver(self, token, kind, payload):
        if token in self.dead_tokens:
            raise DeadTokenError(token)
        with self._lock:
            self.delivered.append((token, kind, dict(payload)))


def _compact(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"), sort_keys=True, ensure_ascii=False)
