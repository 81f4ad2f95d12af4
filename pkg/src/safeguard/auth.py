"""Registration, email verification, sessions, and device tokens.

The only entrance to everything else is a verified login. Passwords are
stored as salted PBKDF2 digests only; plaintext never touches the tree.
Sessions and verification tokens are ephemeral and live in service memory;
user records and device tokens persist in the tree store.
"""

from __future__ import annotations

import hashlib
import hmac
import re
import secrets
import threading
import time
from dataclasses import dataclass

from .errors import (
    AlreadyUsed,
    BadCredentials,
    EmailTaken,
    EmailUnverified,
    ExpiredToken,
    InvalidEmail,
    Unauthenticated,
    UnknownToken,
    UnknownUser,
    WeakPassword,
)
from .treestore import ABSENT, TreeStore

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")

MIN_PASSWORD_LENGTH = 8
MIN_HASH_ITERATIONS = 4096  # 2^12, the floor of the cost contract

USERS_PATH = "users"
DEVICE_TOKENS_PATH = "device-tokens"


@dataclass(frozen=True)
class UserRecord:
    id: str
    first_name: str
    last_name: str
    email: str
    verified: bool
    created_at: int
    is_admin: bool = False

    @property
    def display_name(self) -> str:
        return f"{self.first_name} {self.last_name}".strip()


@dataclass(frozen=True)
class VerificationToken:
    token: str
    user_id: str
    expires_at: int


@dataclass(frozen=True)
class Session:
    token: str
    user_id: str
    issued_at: int
    expires_at: int


def hash_password(password: str, iterations: int) -> str:
    salt = secrets.token_bytes(16)
    digest = hashlib.pbkdf2_hmac("sha256", password.encode(), salt, iterations)
    return f"pbkdf2-sha256${iterations}${salt.hex()}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, iters, salt_hex, digest_hex = stored.split("$")
        if scheme != "pbkdf2-sha256":
            return False
        digest = hashlib.pbkdf2_hmac(
            "sha256", password.encode(), bytes.fromhex(salt_hex), int(iters)
        )
        return hmac.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


class AuthService:
    def __init__(
        self,
        store: TreeStore,
        mailer,
        *,
        session_ttl_s: int = 7 * 24 * 3600,
        verification_ttl_s: int = 24 * 3600,
        iterations: int = 16384,
    ):
        if iterations < MIN_HASH_ITERATIONS:
            raise ValueError(f"hash cost below contract minimum {MIN_HASH_ITERATIONS}")
        self._store = store
        self._mailer = mailer
        self._session_ttl = session_ttl_s
        self._verification_ttl = verification_ttl_s
        self._iterations = iterations
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._verifications: dict[str, dict] = {}
        # burned once on unknown emails so login timing stays flat
        self._decoy_digest = hash_password("decoy-password", iterations)

    # -- registration and verification ----------------------------------------

    def register(self, first: str, last: str, email: str, password: str):
        email = email.strip().lower()
        if not _EMAIL_RE.match(email):
            raise InvalidEmail(f"{email!r} is not a valid address")
        if len(password) < MIN_PASSWORD_LENGTH:
            raise WeakPassword(f"passwords need at least {MIN_PASSWORD_LENGTH} characters")
        digest = hash_password(password, self._iterations)
        with self._lock:
            if self._find_user_id_by_email(email) is not None:
                raise EmailTaken(f"{email} already has an account")
            user_id = secrets.token_hex(8)
            now = int(time.time())
            self._store.set((USERS_PATH, user_id), {
                "id": user_id,
                "first_name": first,
                "last_name": last,
                "email": email,
                "verified": False,
                "password_digest": digest,
                "created_at": now,
            })
            token = secrets.token_urlsafe(32)
            self._verifications[token] = {
                "user_id": user_id,
                "expires_at": now + self._verification_ttl,
                "used": False,
            }
        self._mailer.send(
            email,
            "Verify your SecureIT account",
            "Welcome to SecureIT.\n"
            "Paste this verification token into the app to activate your account:\n"
            f"{token}",
        )
        return user_id, VerificationToken(token, user_id, now + self._verification_ttl)

    def verify_email(self, token: str, now: int | None = None) -> str:
        now = int(time.time()) if now is None else now
        with self._lock:
            entry = self._verifications.get(token)
            if entry is None:
                raise UnknownToken("no such verification token")
            if entry["used"]:
                raise AlreadyUsed("verification token already consumed")
            if now > entry["expires_at"]:
                raise ExpiredToken("verification token expired")
            entry["used"] = True
            user_id = entry["user_id"]
        self._store.set((USERS_PATH, user_id, "verified"), True)
        return user_id

    # -- login and sessions ----------------------------------------------------

    def login(self, email: str, password: str, now: int | None = None) -> Session:
        now = int(time.time()) if now is None else now
        email = email.strip().lower()
        user_id = self._find_user_id_by_email(email)
        if user_id is None:
            verify_password(password, self._decoy_digest)
            raise BadCredentials("wrong email or password")
        record = self._store.get((USERS_PATH, user_id))
        if not verify_password(password, record.get("password_digest", "")):
            raise BadCredentials("wrong email or password")
        if not record.get("verified"):
            raise EmailUnverified("verify your email before logging in")
        session = Session(
            token=secrets.token_urlsafe(32),
            user_id=user_id,
            issued_at=now,
            expires_at=now + self._session_ttl,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def authenticate(self, session_token: str, now: int | None = None) -> str:
        now = int(time.time()) if now is None else now
        with self._lock:
            session = self._sessions.get(session_token or "")
        if session is None or now >= session.expires_at:
            raise Unauthenticated("missing, invalid, or expired session")
        return session.user_id

    def logout(self, session_token: str):
        with self._lock:
            self._sessions.pop(session_token, None)

    # -- users -------------------------------------------------------------------

    def get_user(self, user_id: str) -> UserRecord:
        record = self._store.get((USERS_PATH, user_id))
        if record is ABSENT:
            raise UnknownUser(f"no user {user_id!r}")
        return UserRecord(
            id=record["id"],
            first_name=record.get("first_name", ""),
            last_name=record.get("last_name", ""),
            email=record.get("email", ""),
            verified=bool(record.get("verified")),
            created_at=record.get("created_at", 0),
            is_admin=bool(record.get("is_admin")),
        )

    def user_exists(self, user_id: str) -> bool:
        return self._store.get((USERS_PATH, user_id)) is not ABSENT

    def all_user_ids(self) -> list[str]:
        users = self._store.get(USERS_PATH)
        return sorted(users) if isinstance(users, dict) else []

    def _find_user_id_by_email(self, email: str):
        users = self._store.get(USERS_PATH)
        if not isinstance(users, dict):
            return None
        for user_id, record in users.items():
            if isinstance(record, dict) and record.get("email") == email:
                return user_id
        return None

    # -- device tokens -------------------------------------------------------------

    def register_device_token(self, user_id: str, token: str, now: int | None = None):
        if not self.user_exists(user_id):
            raise UnknownUser(f"no user {user_id!r}")
        if not token:
            raise Unauthenticated("empty device token")
        now = int(time.time()) if now is None else now
        key = hashlib.sha256(token.encode()).hexdigest()
        self._store.set((DEVICE_TOKENS_PATH, key), {
            "token": token,
            "user_id": user_id,
            "registered_at": now,
        })

    def unregister_device_token(self, token: str):
        key = hashlib.sha256(token.encode()).hexdigest()
        self._store.set((DEVICE_TOKENS_PATH, key), ABSENT)

    def device_tokens_for(self, user_id: str) -> list[str]:
        index = self.device_token_index()
        return index.get(user_id, [])

    def device_token_index(self) -> dict[str, list[str]]:
        """user_id -> device tokens, each list sorted for determinism."""
        node = self._store.get(DEVICE_TOKENS_PATH)
        index: dict[str, list[str]] = {}
        if isinstance(node, dict):
            for entry in node.values():
                if isinstance(entry, dict) and "token" in entry and "user_id" in entry:
                    index.setdefault(entry["user_id"], []).append(entry["token"])
        for tokens in index.values():
            tokens.sort()
        return index
