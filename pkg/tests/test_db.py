from __future__ import annotations

import threading
from datetime import datetime, timezone

import pytest

from datadock import repo
from datadock.db import LATEST_VERSION, Database, MIGRATIONS
from datadock.errors import (
    ForeignKeyViolation,
    MigrationError,
    UniquenessViolation,
)
from datadock.model import Review, UserAccount

NOW = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def make_user(username="alice", user_id="u1") -> UserAccount:
    return UserAccount(
        id=user_id,
        username=username,
        email=f"{username}@example.org",
        password_digest="scrypt$x",
        display_name=username.title(),
        is_admin=False,
        created_at=NOW,
    )


@pytest.fixture
def db(tmp_path) -> Database:
    database = Database(tmp_path / "db")
    database.migrate()
    return database


# -- migrations ---------------------------------------------------------------------


def test_fresh_store_migrates_to_latest(tmp_path):
    db = Database(tmp_path / "db")
    assert db.version() == 0
    assert db.migrate() == LATEST_VERSION
    with db.read() as cx:
        tables = {
            r["name"]
            for r in cx.execute("SELECT name FROM sqlite_master WHERE type='table'")
        }
    assert {"users", "tokens", "datasets", "entries", "reviews", "orgs",
            "memberships", "conversations", "messages", "notifications"} <= tables


def test_migrate_is_idempotent_at_fixed_target(tmp_path):
    db = Database(tmp_path / "db")
    assert db.migrate() == LATEST_VERSION
    assert db.migrate() == LATEST_VERSION


def test_migrate_below_current_rejected(tmp_path):
    db = Database(tmp_path / "db")
    db.migrate()
    with pytest.raises(MigrationError):
        db.migrate(target=0)


def test_migrations_apply_contiguous_prefix(tmp_path):
    db = Database(tmp_path / "db")
    first_version = MIGRATIONS[0][0]
    assert db.migrate(target=first_version) == first_version
    assert db.migrate() == LATEST_VERSION
    with db.read() as cx:
        versions = [
            r["version"]
            for r in cx.execute("SELECT version FROM schema_migrations ORDER BY version")
        ]
    assert versions == list(range(1, LATEST_VERSION + 1))


# -- transactions --------------------------------------------------------------------


def test_failed_work_persists_nothing(db):
    with pytest.raises(RuntimeError):
        with db.transaction() as cx:
            repo.insert_user(cx, make_user())
            raise RuntimeError("boom")
    with db.read() as cx:
        assert repo.get_user(cx, "u1") is None


def test_empty_transaction_is_identity(db):
    with db.transaction():
        pass
    assert db.integrity_check()


def test_read_your_writes_within_transaction(db):
    with db.transaction() as cx:
        repo.insert_user(cx, make_user())
        assert repo.get_user(cx, "u1") is not None


def test_concurrent_same_username_exactly_one_wins(db):
    """Two writers race to claim one username; exactly one commit succeeds."""
    barrier = threading.Barrier(2)
    outcomes: list[str] = []
    lock = threading.Lock()

    def worker(user_id: str):
        barrier.wait()
        try:
            with db.transaction() as cx:
                repo.insert_user(cx, make_user(username="alice", user_id=user_id))
            result = "ok"
        except UniquenessViolation:
            result = "conflict"
        with lock:
            outcomes.append(result)

    threads = [threading.Thread(target=worker, args=(f"u{i}",)) for i in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(outcomes) == ["conflict", "ok"]
    with db.read() as cx:
        count = cx.execute("SELECT COUNT(*) FROM users WHERE username='alice'").fetchone()[0]
    assert count == 1


# -- entity CRUD constraints -------------------------------------------------------------


def test_review_for_missing_dataset_is_fk_violation(db):
    with db.transaction() as cx:
        repo.insert_user(cx, make_user())
    review = Review(
        id="r1", dataset_id="does-not-exist", author_id="u1", rating=4,
        comment="", created_at=NOW, updated_at=NOW,
    )
    with pytest.raises(ForeignKeyViolation):
        with db.transaction() as cx:
            repo.insert_review(cx, review)


def test_duplicate_review_same_author_is_uniqueness_violation(db, tmp_path):
    from datadock.model import Dataset, FileEntry, Visibility

    with db.transaction() as cx:
        repo.insert_user(cx, make_user("alice", "u1"))
        repo.insert_user(cx, make_user("bob", "u2"))
        dataset = Dataset(
            id="d1", owner_id="u1", name="x", description="",
            visibility=Visibility.PUBLIC, org_ids=frozenset(), tags=frozenset(),
            created_at=NOW, updated_at=NOW,
            entries=[FileEntry(path="a", blob_digest="0" * 64, size_bytes=0)],
        )
        repo.insert_dataset(cx, dataset)
        repo.insert_review(
            cx,
            Review(id="r1", dataset_id="d1", author_id="u2", rating=4, comment="",
                   created_at=NOW, updated_at=NOW),
        )
    with pytest.raises(UniquenessViolation):
        with db.transaction() as cx:
            repo.insert_review(
                cx,
                Review(id="r2", dataset_id="d1", author_id="u2", rating=2, comment="",
                       created_at=NOW, updated_at=NOW),
            )


def test_get_after_insert_round_trips_fields(db):
    user = make_user()
    with db.transaction() as cx:
        repo.insert_user(cx, user)
    with db.read() as cx:
        loaded = repo.get_user(cx, "u1")
    assert loaded == user


def test_dataset_delete_cascades_children(db):
    from datadock.model import Dataset, FileEntry, Visibility

    with db.transaction() as cx:
        repo.insert_user(cx, make_user())
        dataset = Dataset(
            id="d1", owner_id="u1", name="x", description="",
            visibility=Visibility.PRIVATE, org_ids=frozenset(), tags=frozenset({"t"}),
            created_at=NOW, updated_at=NOW,
            entries=[FileEntry(path="a", blob_digest="0" * 64, size_bytes=0)],
        )
        repo.insert_dataset(cx, dataset)
    with db.transaction() as cx:
        repo.delete_dataset(cx, "d1")
    with db.read() as cx:
        assert cx.execute("SELECT COUNT(*) FROM entries").fetchone()[0] == 0
        assert cx.execute("SELECT COUNT(*) FROM dataset_tags").fetchone()[0] == 0
    assert db.integrity_check()
