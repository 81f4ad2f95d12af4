"""Service configuration: flat key=value text file, env override via
SAFEGUARD_CONFIG."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

ENV_VAR = "SAFEGUARD_CONFIG"


@dataclass
class ServiceConfig:
    bind_address: str = "127.0.0.1:8787"
    data_dir: str = "./safeguard-data"
    session_ttl_seconds: int = 7 * 24 * 3600
    verification_ttl_seconds: int = 24 * 3600
    activity_threshold_seconds: int = 300
    nearby_default_k: int = 10
    nearby_default_radius_m: float = 5000.0
    grid_cell_degrees: float = 0.25
    checkpoints: tuple = ("login", "chat-open", "profile-open")
    snapshot_interval_seconds: float = 30.0
    dispatch_interval_seconds: float = 1.0
    pending_ttl_seconds: int = 72 * 3600
    password_iterations: int = 16384
    sms_sink: str = "file"        # file | memory
    push_sink: str = "file"       # file | memory
    sms_fail_every: int = 0
    webui_dir: str = ""

    def __post_init__(self):
        host, _, port = self.bind_address.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bind_address must be host:port, got {self.bind_address!r}")
        for name in ("session_ttl_seconds", "verification_ttl_seconds",
                     "activity_threshold_seconds", "snapshot_interval_seconds",
                     "dispatch_interval_seconds", "pending_ttl_seconds"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def host(self) -> str:
        return self.bind_address.rpartition(":")[0]

    @property
    def port(self) -> int:
        return int(self.bind_address.rpartition(":")[2])

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir)

    @property
    def outbox_path(self) -> Path:
        return self.data_path / "outbox"

    @property
    def snapshot_path(self) -> Path:
        return self.data_path / "tree.snapshot"

    @property
    def pois_path(self) -> Path:
        return self.data_path / "pois.csv"


_INT_FIELDS = {"session_ttl_seconds", "verification_ttl_seconds", "activity_threshold_seconds",
               "nearby_default_k", "pending_ttl_seconds", "password_iterations",
               "sms_fail_every"}
_FLOAT_FIELDS = {"nearby_default_radius_m", "grid_cell_degrees",
                 "snapshot_interval_seconds", "dispatch_interval_seconds"}


def load_config(path=None) -> ServiceConfig:
    """Read key=value lines; missing file or None path yields defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    values = {}
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        known = {f.name for f in fields(ServiceConfig)}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in known:
                raise ValueError(f"{path}:{lineno}: unknown config line {line!r}")
            if key in _INT_FIELDS:
                values[key] = int(value)
            elif key in _FLOAT_FIELDS:
                values[key] = float(value)
            elif key == "checkpoints":
                values[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            else:
                values[key] = value
    return ServiceConfig(**values)
