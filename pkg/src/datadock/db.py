"""Transactional SQLite store with embedded, numbered schema migrations.

The store is a single file at ``<data-dir>/db``. Each unit of work gets its
own connection (SQLite connections are cheap and this sidesteps cross-thread
sharing); write transactions take the write lock up front with BEGIN
IMMEDIATE so conflicting writers queue on the busy timeout instead of
failing mid-transaction.

journal_mode stays DELETE so the store remains one file at rest;
synchronous=NORMAL keeps integrity on crash while avoiding an fsync per
commit.
"""

from __future__ import annotations

import sqlite3
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from .errors import (
    ConflictError,
    ForeignKeyViolation,
    MigrationError,
    StoreUnavailable,
    UniquenessViolation,
)

BUSY_TIMEOUT_MS = 30_000

# Applied in order; schema_migrations records the contiguous prefix.
MIGRATIONS: list[tuple[int, str, str]] = [
    (
        1,
        "0001_accounts",
        """
        CREATE TABLE users (
            id              TEXT PRIMARY KEY,
            username        TEXT NOT NULL,
            email           TEXT NOT NULL,
            password_digest TEXT NOT NULL,
            display_name    TEXT NOT NULL,
            is_admin        INTEGER NOT NULL DEFAULT 0,
            is_active       INTEGER NOT NULL DEFAULT 1,
            created_at      INTEGER NOT NULL
        );
        CREATE UNIQUE INDEX users_username ON users(username);

        CREATE TABLE tokens (
            token_id   TEXT PRIMARY KEY,
            user_id    TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
            digest     TEXT NOT NULL,
            created_at INTEGER NOT NULL,
            expires_at INTEGER NOT NULL
        );
        CREATE UNIQUE INDEX tokens_digest ON tokens(digest);
        CREATE INDEX tokens_user ON tokens(user_id);

        CREATE TABLE orgs (
            id          TEXT PRIMARY KEY,
            name        TEXT NOT NULL,
            description TEXT NOT NULL DEFAULT '',
            creator_id  TEXT NOT NULL REFERENCES users(id),
            created_at  INTEGER NOT NULL
        );
        CREATE UNIQUE INDEX orgs_name_ci ON orgs(lower(name));

        CREATE TABLE memberships (
            org_id    TEXT NOT NULL REFERENCES orgs(id) ON DELETE CASCADE,
            user_id   TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
            role      TEXT NOT NULL CHECK (role IN ('owner', 'member')),
            joined_at INTEGER NOT NULL,
            PRIMARY KEY (org_id, user_id)
        );
        CREATE INDEX memberships_user ON memberships(user_id);
        """,
    ),
    (
        2,
        "0002_datasets",
        """
        CREATE TABLE datasets (
            id          TEXT PRIMARY KEY,
            owner_id    TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
            name        TEXT NOT NULL,
            description TEXT NOT NULL DEFAULT '',
            visibility  TEXT NOT NULL CHECK (visibility IN ('public', 'org', 'private')),
            created_at  INTEGER NOT NULL,
            updated_at  INTEGER NOT NULL
        );
        CREATE INDEX datasets_owner ON datasets(owner_id);
        CREATE INDEX datasets_created ON datasets(created_at DESC, id ASC);

        -- org_id deliberately has no foreign key: a dissolved organization
        -- leaves its dataset bindings in place (the datasets then fall back
        -- to owner-only visibility).
        CREATE TABLE dataset_orgs (
            dataset_id TEXT NOT NULL REFERENCES datasets(id) ON DELETE CASCADE,
            org_id     TEXT NOT NULL,
            PRIMARY KEY (dataset_id, org_id)
        );
        CREATE INDEX dataset_orgs_org ON dataset_orgs(org_id);

        CREATE TABLE dataset_tags (
            dataset_id TEXT NOT NULL REFERENCES datasets(id) ON DELETE CASCADE,
            tag        TEXT NOT NULL,
            PRIMARY KEY (dataset_id, tag)
        );
        CREATE INDEX dataset_tags_tag ON dataset_tags(tag);

        CREATE TABLE entries (
            dataset_id   TEXT NOT NULL REFERENCES datasets(id) ON DELETE CASCADE,
            path         TEXT NOT NULL,
            blob_digest  TEXT NOT NULL,
            size_bytes   INTEGER NOT NULL,
            content_type TEXT NOT NULL,
            PRIMARY KEY (dataset_id, path)
        );
        CREATE INDEX entries_digest ON entries(blob_digest);

        CREATE TABLE reviews (
            id         TEXT PRIMARY KEY,
            dataset_id TEXT NOT NULL REFERENCES datasets(id) ON DELETE CASCADE,
            author_id  TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
            rating     INTEGER NOT NULL CHECK (rating BETWEEN 1 AND 5),
            comment    TEXT NOT NULL DEFAULT '',
            created_at INTEGER NOT NULL,
            updated_at INTEGER NOT NULL,
            UNIQUE (dataset_id, author_id)
        );
        """,
    ),
    (
        3,
        "0003_messaging",
        """
        CREATE TABLE conversations (
            id         TEXT PRIMARY KEY,
            user_a     TEXT NOT NULL REFERENCES users(id),
            user_b     TEXT NOT NULL REFERENCES users(id),
            created_at INTEGER NOT NULL,
            UNIQUE (user_a, user_b),
            CHECK (user_a < user_b)
        );

        CREATE TABLE messages (
            seq             INTEGER PRIMARY KEY AUTOINCREMENT,
            id              TEXT NOT NULL UNIQUE,
            conversation_id TEXT NOT NULL REFERENCES conversations(id) ON DELETE CASCADE,
            sender_id       TEXT NOT NULL REFERENCES users(id),
            body            TEXT NOT NULL,
            sent_at         INTEGER NOT NULL
        );
        CREATE INDEX messages_conversation ON messages(conversation_id, sent_at);

        CREATE TABLE conversation_reads (
            conversation_id TEXT NOT NULL REFERENCES conversations(id) ON DELETE CASCADE,
            user_id         TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
            last_read_at    INTEGER NOT NULL,
            PRIMARY KEY (conversation_id, user_id)
        );

        CREATE TABLE notifications (
            id              TEXT PRIMARY KEY,
            recipient_id    TEXT NOT NULL REFERENCES users(id) ON DELETE CASCADE,
            kind            TEXT NOT NULL CHECK (kind IN
                                ('dataset_in_org', 'review_received', 'message_received')),
            dataset_id      TEXT REFERENCES datasets(id) ON DELETE CASCADE,
            review_id       TEXT REFERENCES reviews(id) ON DELETE CASCADE,
            org_id          TEXT,
            conversation_id TEXT REFERENCES conversations(id) ON DELETE CASCADE,
            message_id      TEXT REFERENCES messages(id) ON DELETE CASCADE,
            is_read         INTEGER NOT NULL DEFAULT 0,
            created_at      INTEGER NOT NULL
        );
        CREATE INDEX notifications_recipient
            ON notifications(recipient_id, created_at DESC);
        """,
    ),
]

LATEST_VERSION = MIGRATIONS[-1][0]


def translate_integrity_error(exc: sqlite3.IntegrityError) -> Exception:
    text = str(exc)
    if "UNIQUE constraint failed" in text:
        return UniquenessViolation(text)
    if "FOREIGN KEY constraint failed" in text:
        return ForeignKeyViolation(text)
    return ConflictError(text)


class Database:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def _connect(self) -> sqlite3.Connection:
        try:
            cx = sqlite3.connect(
                self.path, timeout=BUSY_TIMEOUT_MS / 1000, isolation_level=None
            )
        except sqlite3.OperationalError as exc:
            raise StoreUnavailable(f"cannot open store at {self.path}: {exc}") from exc
        cx.row_factory = sqlite3.Row
        cx.execute("PRAGMA foreign_keys = ON")
        cx.execute("PRAGMA synchronous = NORMAL")
        return cx

    def version(self) -> int:
        """Current schema version; 0 for an empty store."""
        with self._guarded() as cx:
            has = cx.execute(
                "SELECT name FROM sqlite_master WHERE type='table'"
                " AND name='schema_migrations'"
            ).fetchone()
            if not has:
                return 0
            row = cx.execute("SELECT MAX(version) AS v FROM schema_migrations").fetchone()
            return row["v"] or 0

    def migrate(self, target: int | None = None) -> int:
        """Apply all migrations up to ``target`` (default: latest).

        Each step commits on its own, so a failure leaves the store at the
        last fully-applied version. Idempotent at a fixed target.
        """
        if target is None:
            target = LATEST_VERSION
        current = self.version()
        if target < current:
            raise MigrationError(
                f"target version {target} is below current version {current}"
            )
        if target > LATEST_VERSION:
            raise MigrationError(f"unknown target version {target}")
        with self._guarded() as cx:
            cx.execute(
                "CREATE TABLE IF NOT EXISTS schema_migrations ("
                " version INTEGER PRIMARY KEY, name TEXT NOT NULL,"
                " applied_at INTEGER NOT NULL)"
            )
            for version, name, sql in MIGRATIONS:
                if version <= current or version > target:
                    continue
                try:
                    cx.execute("BEGIN IMMEDIATE")
                    # not executescript(): it would autocommit around the script
                    for statement in _split_statements(sql):
                        cx.execute(statement)
                    cx.execute(
                        "INSERT INTO schema_migrations (version, name, applied_at)"
                        " VALUES (?, ?, strftime('%s','now'))",
                        (version, name),
                    )
                    cx.execute("COMMIT")
                except sqlite3.Error as exc:
                    cx.execute("ROLLBACK")
                    raise MigrationError(f"migration {name} failed: {exc}") from exc
        return self.version()

    @contextmanager
    def _guarded(self) -> Iterator[sqlite3.Connection]:
        cx = self._connect()
        try:
            yield cx
        finally:
            cx.close()

    @contextmanager
    def transaction(self, write: bool = True) -> Iterator[sqlite3.Connection]:
        """One atomic unit of work. Commits on normal exit, rolls back on
        any exception. Integrity errors surface as UniquenessViolation /
        ForeignKeyViolation; lock timeouts as ConflictError (retryable).
        """
        cx = self._connect()
        try:
            try:
                cx.execute("BEGIN IMMEDIATE" if write else "BEGIN")
                yield cx
                cx.execute("COMMIT")
            except BaseException:
                try:
                    cx.execute("ROLLBACK")
                except sqlite3.Error:
                    pass
                raise
        except sqlite3.IntegrityError as exc:
            raise translate_integrity_error(exc) from exc
        except sqlite3.OperationalError as exc:
            if "locked" in str(exc) or "busy" in str(exc):
                raise ConflictError(f"store busy: {exc}") from exc
            raise StoreUnavailable(str(exc)) from exc
        finally:
            cx.close()

    @contextmanager
    def read(self) -> Iterator[sqlite3.Connection]:
        with self.transaction(write=False) as cx:
            yield cx

    def integrity_check(self) -> bool:
        with self._guarded() as cx:
            ok = cx.execute("PRAGMA integrity_check").fetchone()[0] == "ok"
            fk = cx.execute("PRAGMA foreign_key_check").fetchall()
            return ok and not fk


def _split_statements(script: str) -> list[str]:
    # Migration SQL contains no string literals with semicolons, so a plain
    # split is sufficient and keeps every statement inside the transaction.
    return [s.strip() for s in script.split(";") if s.strip()]
