"""Path-addressed realtime tree store.

A single-process stand-in for a cloud realtime database: slash-separated
paths address nested maps of scalars, every write commits atomically under
one global order, and registered path patterns get called back exactly once
per matching committed write. Trigger callbacks run on a dedicated drain
thread, never inside the writer's critical section, in commit order.

Values are plain Python: str / int / float / bool scalars, dicts with string
keys, and lists (normalized on write to maps keyed "0", "1", ...). Writing
:data:`ABSENT` (or an empty container) deletes; maps never keep empty or
absent children.
"""

from __future__ import annotations

import copy
import json
import logging
import queue
import random
import re
import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from .errors import CorruptDocument, DuplicateHandler, InvalidPath, InvalidValue

log = logging.getLogger("safeguard.treestore")

WILDCARD = "*"

_FORBIDDEN_CHARS = set('/.#$[]')

PathLike = Union[str, Sequence[str]]
Scalar = Union[str, int, float, bool]


class _Absent:
    """Singleton marking "no value here"; writing it deletes the subtree."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ABSENT"

    def __bool__(self):
        return False

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self


ABSENT = _Absent()


def _check_segment(seg: str, allow_wildcard: bool = False) -> str:
    if not isinstance(seg, str) or not seg:
        raise InvalidPath(f"empty or non-string path segment: {seg!r}")
    if seg == WILDCARD:
        if allow_wildcard:
            return seg
        raise InvalidPath("wildcard segment only allowed in trigger patterns")
    for ch in seg:
        if ch in _FORBIDDEN_CHARS or ord(ch) < 0x20 or ch == "\x7f":
            raise InvalidPath(f"illegal character {ch!r} in segment {seg!r}")
    return seg


def split_path(path: PathLike, allow_wildcard: bool = False) -> tuple[str, ...]:
    """Normalize a path to a tuple of validated segments.

    Accepts "a/b/c" (leading/trailing slashes ignored) or an iterable of
    segments. The empty path addresses the root.
    """
    if isinstance(path, str):
        parts = [p for p in path.split("/") if p != ""]
    else:
        parts = list(path)
    return tuple(_check_segment(p, allow_wildcard) for p in parts)


def join_path(segments: Iterable[str]) -> str:
    return "/".join(segments)


def pattern_matches(pattern: tuple[str, ...], path: tuple[str, ...]) -> bool:
    """Wildcard segments match exactly one concrete segment each."""
    if len(pattern) != len(path):
        return False
    return all(p == WILDCARD or p == s for p, s in zip(pattern, path))


def is_scalar(value) -> bool:
    return isinstance(value, (str, int, float, bool))


def _normalize(value):
    """Validate a caller-supplied value and convert it to stored shape.

    Lists become maps keyed by zero-based integer strings; empty maps and
    lists collapse to ABSENT; ABSENT children are dropped from maps.
    """
    if value is ABSENT:
        return ABSENT
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise InvalidValue("non-finite floats cannot be stored")
        return value
    if isinstance(value, dict):
        out = {}
        for key, child in value.items():
            if not isinstance(key, str):
                raise InvalidValue(f"map keys must be strings, got {key!r}")
            _check_segment(key)
            norm = _normalize(child)
            if norm is not ABSENT:
                out[key] = norm
        return out if out else ABSENT
    if isinstance(value, (list, tuple)):
        out = {}
        for i, child in enumerate(value):
            norm = _normalize(child)
            if norm is ABSENT:
                raise InvalidValue("lists cannot contain absent entries")
            out[str(i)] = norm
        return out if out else ABSENT
    raise InvalidValue(f"unsupported value type {type(value).__name__}")


# Push IDs: 20 chars, 8-char millisecond timestamp prefix + 12-char suffix,
# over a 64-symbol alphabet in ASCII order so string order equals time order.
PUSH_ALPHABET = "-0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ_abcdefghijklmnopqrstuvwxyz"
_PUSH_INDEX = {c: i for i, c in enumerate(PUSH_ALPHABET)}

assert len(PUSH_ALPHABET) == 64


class PushIdGenerator:
    """Mints chronologically sortable 20-character keys.

    Keys generated in the same millisecond reuse the previous random suffix
    incremented by one, so call order is preserved; a clock that stands
    still (or steps backward) therefore still yields strictly increasing
    keys.
    """

    def __init__(self, rng: random.Random | None = None):
        self._rng = rng or random.SystemRandom()
        self._lock = threading.Lock()
        self._last_ms = -1
        self._last_suffix: list[int] = []

    def next_id(self, now_ms: int | None = None) -> str:
        if now_ms is None:
            now_ms = int(time.time() * 1000)
        if now_ms < 0:
            raise InvalidValue("push timestamps must be non-negative")
        with self._lock:
            if now_ms <= self._last_ms:
                now_ms = self._last_ms
                self._increment_suffix()
            else:
                self._last_suffix = [self._rng.randrange(64) for _ in range(12)]
            self._last_ms = now_ms
            ts = []
            rem = now_ms
            for _ in range(8):
                ts.append(PUSH_ALPHABET[rem % 64])
                rem //= 64
            ts.reverse()
            return "".join(ts) + "".join(PUSH_ALPHABET[i] for i in self._last_suffix)

    def _increment_suffix(self):
        for i in range(11, -1, -1):
            if self._last_suffix[i] < 63:
                self._last_suffix[i] += 1
                return
            self._last_suffix[i] = 0
        # 64^12 increments within one millisecond; not reachable in practice
        self._last_ms += 1
        self._last_suffix = [self._rng.randrange(64) for _ in range(12)]


def decode_push_ms(push_id: str) -> int:
    """Read the millisecond timestamp back out of a push ID prefix."""
    if len(push_id) != 20:
        raise InvalidValue(f"push ids are 20 characters, got {len(push_id)}")
    ms = 0
    for ch in push_id[:8]:
        if ch not in _PUSH_INDEX:
            raise InvalidValue(f"illegal push id character {ch!r}")
        ms = ms * 64 + _PUSH_INDEX[ch]
    return ms


@dataclass(frozen=True)
class WriteEvent:
    """Delivered to trigger handlers after the write committed."""

    commit: int
    segments: tuple[str, ...]
    old: object
    new: object

    @property
    def path(self) -> str:
        return join_path(self.segments)


class Subscription:
    def __init__(self, store: "TreeStore", handler_id: str):
        self._store = store
        self.handler_id = handler_id

    def cancel(self):
        self._store.unsubscribe(self.handler_id)


_HEADER_RE = re.compile(r"^safeguard-tree v1 commit=(\d+)$")


class TreeStore:
    def __init__(self):
        self._root: dict = {}
        self._lock = threading.RLock()
        self._push_gen = PushIdGenerator()
        self._commit = 0
        self._subs: dict[str, tuple[tuple[str, ...], Callable[[WriteEvent], None]]] = {}
        self._events: queue.SimpleQueue = queue.SimpleQueue()
        self._idle = threading.Condition()
        self._in_flight = 0
        self._closed = False
        self._drainer = threading.Thread(
            target=self._drain_loop, name="treestore-drain", daemon=True
        )
        self._drainer.start()

    # -- reads ---------------------------------------------------------------

    @property
    def commit_count(self) -> int:
        with self._lock:
            return self._commit

    def get(self, path: PathLike = ()):
        """Deep copy of the subtree at path, or ABSENT."""
        segments = split_path(path)
        with self._lock:
            node = self._resolve(segments)
            if node is ABSENT:
                return ABSENT
            return copy.deepcopy(node)

    def _resolve(self, segments: tuple[str, ...]):
        node = self._root
        for seg in segments:
            if not isinstance(node, dict) or seg not in node:
                return ABSENT
            node = node[seg]
        if isinstance(node, dict) and not node:
            return ABSENT
        return node

    # -- writes --------------------------------------------------------------

    def set(self, path: PathLike, value) -> int:
        """Replace the subtree at path; returns the commit sequence number."""
        segments = split_path(path)
        norm = _normalize(value)
        if not segments and is_scalar(norm):
            raise InvalidPath("the root cannot hold a scalar")
        with self._lock:
            old = copy.deepcopy(self._resolve(segments))
            self._apply(segments, norm)
            self._commit += 1
            commit = self._commit
            self._fanout(commit, segments, old, copy.deepcopy(norm))
        return commit

    def push(self, path: PathLike, value, now_ms: int | None = None) -> str:
        """Store value under a fresh push-ID child of path; returns the key."""
        segments = split_path(path)
        norm = _normalize(value)
        if norm is ABSENT:
            raise InvalidValue("cannot push an absent value")
        with self._lock:
            node = self._resolve(segments)
            if node is not ABSENT and not isinstance(node, dict):
                raise InvalidPath(f"push target {join_path(segments)!r} holds a scalar")
            key = self._push_gen.next_id(now_ms)
            child = segments + (key,)
            self._apply(child, norm)
            self._commit += 1
            self._fanout(self._commit, child, ABSENT, copy.deepcopy(norm))
        return key

    def use_push_generator(self, gen: PushIdGenerator):
        """Share one generator across services (keeps all IDs totally ordered)."""
        self._push_gen = gen

    def transform(self, path: PathLike, fn) -> int:
        """Atomically replace the subtree at path with fn(current value)."""
        with self._lock:
            return self.set(path, fn(self.get(path)))

    def _apply(self, segments: tuple[str, ...], norm):
        if not segments:
            self._root = {} if norm is ABSENT else norm
            return
        if norm is ABSENT:
            self._delete(segments)
            return
        node = self._root
        for seg in segments[:-1]:
            child = node.get(seg)
            if not isinstance(child, dict):
                child = {}
                node[seg] = child
            node = child
        node[segments[-1]] = norm

    def _delete(self, segments: tuple[str, ...]):
        chain = [self._root]
        node = self._root
        for seg in segments[:-1]:
            child = node.get(seg) if isinstance(node, dict) else None
            if not isinstance(child, dict):
                return
            chain.append(child)
            node = child
        if not isinstance(node, dict) or segments[-1] not in node:
            return
        del node[segments[-1]]
        # prune now-empty ancestors so maps never sit empty
        for i in range(len(chain) - 1, 0, -1):
            if chain[i]:
                break
            del chain[i - 1][segments[i - 1]]

    # -- triggers ------------------------------------------------------------

    def subscribe(
        self,
        pattern: PathLike,
        handler_id: str,
        callback: Callable[[WriteEvent], None],
    ) -> Subscription:
        parsed = split_path(pattern, allow_wildcard=True)
        with self._lock:
            if handler_id in self._subs:
                raise DuplicateHandler(f"handler id {handler_id!r} already registered")
            self._subs[handler_id] = (parsed, callback)
        return Subscription(self, handler_id)

    def unsubscribe(self, handler_id: str):
        with self._lock:
            self._subs.pop(handler_id, None)

    def _fanout(self, commit, segments, old, new):
        for handler_id, (pattern, callback) in self._subs.items():
            if pattern_matches(pattern, segments):
                with self._idle:
                    self._in_flight += 1
                self._events.put((handler_id, callback, WriteEvent(commit, segments, old, new)))

    def _drain_loop(self):
        while True:
            item = self._events.get()
            if item is None:
                return
            handler_id, callback, event = item
            try:
                with self._lock:
                    active = handler_id in self._subs
                if active:
                    callback(event)
            except Exception:
                log.exception("trigger handler %s failed for %s", handler_id, event.path)
            finally:
                with self._idle:
                    self._in_flight -= 1
                    if self._in_flight == 0:
                        self._idle.notify_all()

    def wait_idle(self, timeout: float = 10.0) -> bool:
        """Block until all queued trigger deliveries (and cascades) finished."""
        with self._idle:
            return self._idle.wait_for(lambda: self._in_flight == 0, timeout=timeout)

    def close(self):
        with self._lock:
            if self._closed:
                return
            self._closed = True
        self._events.put(None)
        self._drainer.join(timeout=5)

    # -- persistence ---------------------------------------------------------

    def snapshot(self) -> str:
        """Serialize the full tree to the line-delimited text document."""
        with self._lock:
            leaves: list[tuple[str, Scalar]] = []
            self._collect_leaves((), self._root, leaves)
            commit = self._commit
        leaves.sort(key=lambda item: item[0])
        lines = [f"safeguard-tree v1 commit={commit}"]
        for path, value in leaves:
            lines.append(f"{path}\t{_encode_scalar(value)}")
        return "\n".join(lines) + "\n"

    def _collect_leaves(self, prefix, node, out):
        if isinstance(node, dict):
            for key, child in node.items():
                self._collect_leaves(prefix + (key,), child, out)
        else:
            out.append((join_path(prefix), node))

    def restore(self, document: str):
        """Replace store contents with a previously snapshotted document."""
        lines = document.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise CorruptDocument("empty document")
        header = _HEADER_RE.match(lines[0])
        if not header:
            raise CorruptDocument(f"bad header line: {lines[0]!r}")
        commit = int(header.group(1))
        root: dict = {}
        for lineno, line in enumerate(lines[1:], start=2):
            fields = line.split("\t")
            if len(fields) != 3:
                raise CorruptDocument(f"line {lineno}: expected 3 tab-separated fields")
            raw_path, tag, encoded = fields
            try:
                segments = split_path(raw_path)
            except InvalidPath as exc:
                raise CorruptDocument(f"line {lineno}: {exc.message}") from exc
            if not segments:
                raise CorruptDocument(f"line {lineno}: leaf at root")
            value = _decode_scalar(tag, encoded, lineno)
            node = root
            for seg in segments[:-1]:
                child = node.get(seg)
                if child is None:
                    child = node[seg] = {}
                elif not isinstance(child, dict):
                    raise CorruptDocument(f"line {lineno}: {raw_path!r} conflicts with a scalar")
                node = child
            if segments[-1] in node:
                raise CorruptDocument(f"line {lineno}: duplicate or conflicting path {raw_path!r}")
            node[segments[-1]] = value
        with self._lock:
            self._root = root
            self._commit = commit


def _encode_scalar(value: Scalar) -> str:
    if isinstance(value, bool):
        return "bool\t" + ("true" if value else "false")
    if isinstance(value, int):
        return f"int\t{value}"
    if isinstance(value, float):
        return f"float\t{value!r}"
    if isinstance(value, str):
        return "str\t" + json.dumps(value, ensure_ascii=False)
    raise InvalidValue(f"not a scalar: {value!r}")


def _decode_scalar(tag: str, encoded: str, lineno: int) -> Scalar:
    try:
        if tag == "bool":
            if encoded == "true":
                return True
            if encoded == "false":
                return False
            raise ValueError(encoded)
        if tag == "int":
            return int(encoded)
        if tag == "float":
            value = float(encoded)
            if value != value or value in (float("inf"), float("-inf")):
                raise ValueError(encoded)
            return value
        if tag == "str":
            decoded = json.loads(encoded)
            if not isinstance(decoded, str):
                raise ValueError(encoded)
            return decoded
    except (ValueError, json.JSONDecodeError) as exc:
        raise CorruptDocument(f"line {lineno}: bad {tag} scalar {encoded!r}") from exc
    raise CorruptDocument(f"line {lineno}: unknown type tag {tag!r}")
