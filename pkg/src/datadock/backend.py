"""Wires the storage layers and services into one application object."""

from __future__ import annotations

from datetime import timedelta
from pathlib import Path

from .auth import AuthService
from .blobs import BlobStore
from .catalog import CatalogService
from .config import ServerConfig
from .db import Database
from .messaging import MessagingService
from .notifications import NotificationService
from .orgs import OrgService
from .reviews import ReviewService


class Backend:
    """All services over one data directory. Construct with open()."""

    def __init__(self, config: ServerConfig):
        self.config = config
        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)
        self.db = Database(data_dir / "db")
        self.blobs = BlobStore(data_dir, max_bytes=config.max_file_bytes)
        self.auth = AuthService(
            self.db,
            token_ttl=timedelta(hours=config.token_ttl_hours),
            password_cost=config.password_cost,
        )
        self.notifications = NotificationService(self.db)
        self.orgs = OrgService(self.db)
        self.catalog = CatalogService(
            self.db,
            self.blobs,
            notifications=self.notifications,
            allow_anonymous_public=config.allow_anon_read,
        )
        self.reviews = ReviewService(
            self.db,
            notifications=self.notifications,
            allow_anonymous_public=config.allow_anon_read,
        )
        self.messaging = MessagingService(self.db, notifications=self.notifications)

    @classmethod
    def open(cls, config: ServerConfig) -> "Backend":
        backend = cls(config)
        backend.db.migrate()
        return backend
