"""Server configuration with flag > environment > default precedence."""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

DEFAULT_PORT = 8080
DEFAULT_DATA_DIR = "./data"
DEFAULT_TOKEN_TTL_HOURS = 72
DEFAULT_MAX_FILE_MB = 2048

ENV_PREFIX = "DATADOCK_"


@dataclass(frozen=True)
class ServerConfig:
    data_dir: Path = Path(DEFAULT_DATA_DIR)
    host: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    token_ttl_hours: float = DEFAULT_TOKEN_TTL_HOURS
    max_file_mb: int = DEFAULT_MAX_FILE_MB
    allow_anon_read: bool = False
    cors_origin: str | None = None
    static_dir: Path | None = None
    password_cost: int = 2**14

    @property
    def max_file_bytes(self) -> int:
        return self.max_file_mb * 1024 * 1024

    @classmethod
    def from_env(cls, env=os.environ) -> "ServerConfig":
        cfg = cls()
        if v := env.get(ENV_PREFIX + "DATA_DIR"):
            cfg = replace(cfg, data_dir=Path(v))
        if v := env.get(ENV_PREFIX + "PORT"):
            cfg = replace(cfg, port=int(v))
        if v := env.get(ENV_PREFIX + "TOKEN_TTL_HOURS"):
            cfg = replace(cfg, token_ttl_hours=float(v))
        if v := env.get(ENV_PREFIX + "MAX_FILE_MB"):
            cfg = replace(cfg, max_file_mb=int(v))
        if v := env.get(ENV_PREFIX + "ALLOW_ANON_READ"):
            cfg = replace(cfg, allow_anon_read=v.strip().lower() in ("1", "true", "yes"))
        return cfg

    def with_overrides(self, **overrides) -> "ServerConfig":
        """Apply CLI flags; None means 'not given, keep current value'."""
        set_fields = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **set_fields)
