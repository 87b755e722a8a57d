from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest
from fastapi.testclient import TestClient

from datadock.api import create_app
from datadock.backend import Backend
from datadock.config import ServerConfig

# low scrypt cost keeps the suite fast; the deliberate-slowness property is
# tested separately against the default cost
TEST_PASSWORD_COST = 256
PASSWORD = "hunter2hunter2"


class TickClock:
    """Controllable clock for token-expiry tests."""

    def __init__(self, start: datetime | None = None):
        self.now = start or datetime.now(timezone.utc)

    def __call__(self) -> datetime:
        return self.now

    def advance(self, **kwargs) -> None:
        self.now += timedelta(**kwargs)


def make_backend(tmp_path, **overrides) -> Backend:
    cfg = ServerConfig(
        data_dir=tmp_path / "data", password_cost=TEST_PASSWORD_COST, **overrides
    )
    return Backend.open(cfg)


@pytest.fixture
def backend(tmp_path) -> Backend:
    return make_backend(tmp_path)


@pytest.fixture
def client(backend) -> TestClient:
    return TestClient(create_app(backend), raise_server_exceptions=False)


def register(backend: Backend, username: str, **kwargs):
    return backend.auth.register(
        username, kwargs.pop("email", f"{username}@example.org"), PASSWORD, **kwargs
    )


def auth_headers(backend: Backend, user) -> dict[str, str]:
    secret, _ = backend.auth.issue_token(user.id)
    return {"Authorization": f"Token {secret}"}
