"""Row mapping between SQLite and the domain types.

Every function takes an open connection from Database.transaction()/read()
so callers control transaction boundaries and get read-your-writes inside
a unit of work. Timestamps are stored as integer microseconds since the
epoch (exact ordering, no parsing).
"""

from __future__ import annotations

import sqlite3
from datetime import datetime, timedelta, timezone

from .model import (
    Conversation,
    Membership,
    Message,
    Notification,
    NotificationKind,
    Organization,
    Review,
    Role,
    UserAccount,
    Visibility,
)

# -- timestamp codec ---------------------------------------------------------

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MICROSECOND = timedelta(microseconds=1)


def to_micros(dt: datetime) -> int:
    # integer arithmetic: exact round-trip, no float drift on tie-breaking
    return (dt - _EPOCH) // _MICROSECOND


def from_micros(us: int) -> datetime:
    return _EPOCH + us * _MICROSECOND


# -- users --------------------------------------------------------------------


def insert_user(cx: sqlite3.Connection, u: UserAccount) -> None:
    cx.execute(
        "INSERT INTO users (id, username, email, password_digest, display_name,"
        " is_admin, is_active, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
        (
            u.id,
            u.username,
            u.email,
            u.password_digest,
            u.display_name,
            int(u.is_admin),
            int(u.is_active),
            to_micros(u.created_at),
        ),
    )


def _user_from_row(row: sqlite3.Row) -> UserAccount:
    user = UserAccount.__new__(UserAccount)
    # bypass __post_init__: stored rows are canonical already, and tombstoned
    # rows intentionally carry cleared fields that would fail validation
    user.id = row["id"]
    user.username = row["username"]
    user.email = row["email"]
    user.password_digest = row["password_digest"]
    user.display_name = row["display_name"]
    user.is_admin = bool(row["is_admin"])
    user.is_active = bool(row["is_active"])
    user.created_at = from_micros(row["created_at"])
    return user


def get_user(cx: sqlite3.Connection, user_id: str) -> UserAccount | None:
    row = cx.execute("SELECT * FROM users WHERE id = ?", (user_id,)).fetchone()
    return _user_from_row(row) if row else None


def get_user_by_username(cx: sqlite3.Connection, username: str) -> UserAccount | None:
    row = cx.execute("SELECT * FROM users WHERE username = ?", (username,)).fetchone()
    return _user_from_row(row) if row else None


def update_user_fields(cx: sqlite3.Connection, user_id: str, **fields) -> None:
    columns = ", ".join(f"{k} = ?" for k in fields)
    cx.execute(f"UPDATE users SET {columns} WHERE id = ?", (*fields.values(), user_id))


# -- tokens -------------------------------------------------------------------


def insert_token(
    cx: sqlite3.Connection,
    token_id: str,
    user_id: str,
    digest: str,
    created_at: datetime,
    expires_at: datetime,
) -> None:
    cx.execute(
        "INSERT INTO tokens (token_id, user_id, digest, created_at, expires_at)"
        " VALUES (?, ?, ?, ?, ?)",
        (token_id, user_id, digest, to_micros(created_at), to_micros(expires_at)),
    )


def get_token_by_digest(cx: sqlite3.Connection, digest: str) -> sqlite3.Row | None:
    return cx.execute("SELECT * FROM tokens WHERE digest = ?", (digest,)).fetchone()


def delete_token(cx: sqlite3.Connection, token_id: str) -> bool:
    cur = cx.execute("DELETE FROM tokens WHERE token_id = ?", (token_id,))
    return cur.rowcount > 0


def delete_user_tokens(
    cx: sqlite3.Connection, user_id: str, keep_token_id: str | None = None
) -> int:
    if keep_token_id is None:
        cur = cx.execute("DELETE FROM tokens WHERE user_id = ?", (user_id,))
    else:
        cur = cx.execute(
            "DELETE FROM tokens WHERE user_id = ? AND token_id != ?",
            (user_id, keep_token_id),
        )
    return cur.rowcount


# -- organizations ------------------------------------------------------------


def insert_org(cx: sqlite3.Connection, org: Organization) -> None:
    cx.execute(
        "INSERT INTO orgs (id, name, description, creator_id, created_at)"
        " VALUES (?, ?, ?, ?, ?)",
        (org.id, org.name, org.description, org.creator_id, to_micros(org.created_at)),
    )


def _org_from_row(row: sqlite3.Row) -> Organization:
    return Organization(
        id=row["id"],
        name=row["name"],
        description=row["description"],
        creator_id=row["creator_id"],
        created_at=from_micros(row["created_at"]),
    )


def get_org(cx: sqlite3.Connection, org_id: str) -> Organization | None:
    row = cx.execute("SELECT * FROM orgs WHERE id = ?", (org_id,)).fetchone()
    return _org_from_row(row) if row else None


def list_orgs(
    cx: sqlite3.Connection, page: int, page_size: int
) -> tuple[list[tuple[Organization, int]], int]:
    total = cx.execute("SELECT COUNT(*) FROM orgs").fetchone()[0]
    rows = cx.execute(
        "SELECT o.*, (SELECT COUNT(*) FROM memberships m WHERE m.org_id = o.id)"
        "   AS member_count"
        " FROM orgs o ORDER BY lower(o.name) ASC, o.id ASC LIMIT ? OFFSET ?",
        (page_size, (page - 1) * page_size),
    ).fetchall()
    return [(_org_from_row(r), r["member_count"]) for r in rows], total


def delete_org(cx: sqlite3.Connection, org_id: str) -> None:
    cx.execute("DELETE FROM orgs WHERE id = ?", (org_id,))


# -- memberships ---------------------------------------------------------------


def insert_membership(cx: sqlite3.Connection, m: Membership) -> None:
    cx.execute(
        "INSERT INTO memberships (org_id, user_id, role, joined_at)"
        " VALUES (?, ?, ?, ?)",
        (m.org_id, m.user_id, m.role.value, to_micros(m.joined_at)),
    )


def get_membership(
    cx: sqlite3.Connection, org_id: str, user_id: str
) -> Membership | None:
    row = cx.execute(
        "SELECT * FROM memberships WHERE org_id = ? AND user_id = ?",
        (org_id, user_id),
    ).fetchone()
    if not row:
        return None
    return Membership(
        org_id=row["org_id"],
        user_id=row["user_id"],
        role=Role(row["role"]),
        joined_at=from_micros(row["joined_at"]),
    )


def delete_membership(cx: sqlite3.Connection, org_id: str, user_id: str) -> bool:
    cur = cx.execute(
        "DELETE FROM memberships WHERE org_id = ? AND user_id = ?", (org_id, user_id)
    )
    return cur.rowcount > 0


def list_members(
    cx: sqlite3.Connection, org_id: str, page: int, page_size: int
) -> tuple[list[tuple[str, Role, datetime]], int]:
    total = cx.execute(
        "SELECT COUNT(*) FROM memberships WHERE org_id = ?", (org_id,)
    ).fetchone()[0]
    rows = cx.execute(
        "SELECT u.username, m.role, m.joined_at FROM memberships m"
        " JOIN users u ON u.id = m.user_id"
        " WHERE m.org_id = ? ORDER BY m.joined_at ASC, u.username ASC"
        " LIMIT ? OFFSET ?",
        (org_id, page_size, (page - 1) * page_size),
    ).fetchall()
    return [
        (r["username"], Role(r["role"]), from_micros(r["joined_at"])) for r in rows
    ], total


def count_members(cx: sqlite3.Connection, org_id: str) -> int:
    return cx.execute(
        "SELECT COUNT(*) FROM memberships WHERE org_id = ?", (org_id,)
    ).fetchone()[0]


def count_owners(cx: sqlite3.Connection, org_id: str) -> int:
    return cx.execute(
        "SELECT COUNT(*) FROM memberships WHERE org_id = ? AND role = 'owner'",
        (org_id,),
    ).fetchone()[0]


def list_user_memberships(cx: sqlite3.Connection, user_id: str) -> list[Membership]:
    rows = cx.execute(
        "SELECT * FROM memberships WHERE user_id = ? ORDER BY joined_at ASC",
        (user_id,),
    ).fetchall()
    return [
        Membership(
            org_id=r["org_id"],
            user_id=r["user_id"],
            role=Role(r["role"]),
            joined_at=from_micros(r["joined_at"]),
        )
        for r in rows
    ]


def user_in_any_org(cx: sqlite3.Connection, user_id: str, org_ids) -> bool:
    ids = list(org_ids)
    if not ids:
        return False
    placeholders = ",".join("?" for _ in ids)
    row = cx.execute(
        f"SELECT 1 FROM memberships WHERE user_id = ? AND org_id IN ({placeholders})"
        " LIMIT 1",
        (user_id, *ids),
    ).fetchone()
    return row is not None


def member_ids_of_orgs(cx: sqlite3.Connection, org_ids) -> set[str]:
    ids = list(org_ids)
    if not ids:
        return set()
    placeholders = ",".join("?" for _ in ids)
    rows = cx.execute(
        f"SELECT DISTINCT user_id FROM memberships WHERE org_id IN ({placeholders})",
        ids,
    ).fetchall()
    return {r["user_id"] for r in rows}


def earliest_member_except(
    cx: sqlite3.Connection, org_id: str, excluding_user_id: str
) -> str | None:
    row = cx.execute(
        "SELECT user_id FROM memberships WHERE org_id = ? AND user_id != ?"
        " ORDER BY joined_at ASC, user_id ASC LIMIT 1",
        (org_id, excluding_user_id),
    ).fetchone()
    return row["user_id"] if row else None


def set_membership_role(
    cx: sqlite3.Connection, org_id: str, user_id: str, role: Role
) -> None:
    cx.execute(
        "UPDATE memberships SET role = ? WHERE org_id = ? AND user_id = ?",
        (role.value, org_id, user_id),
    )


# -- datasets --------------------------------------------------------------------


def insert_dataset(cx: sqlite3.Connection, d) -> None:
    cx.execute(
        "INSERT INTO datasets (id, owner_id, name, description, visibility,"
        " created_at, updated_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
        (
            d.id,
            d.owner_id,
            d.name,
            d.description,
            d.visibility.value,
            to_micros(d.created_at),
            to_micros(d.updated_at),
        ),
    )
    for entry in d.entries:
        cx.execute(
            "INSERT INTO entries (dataset_id, path, blob_digest, size_bytes,"
            " content_type) VALUES (?, ?, ?, ?, ?)",
            (d.id, entry.path, entry.blob_digest, entry.size_bytes, entry.content_type),
        )
    for tag in sorted(d.tags):
        cx.execute(
            "INSERT INTO dataset_tags (dataset_id, tag) VALUES (?, ?)", (d.id, tag)
        )
    for org_id in sorted(d.org_ids):
        cx.execute(
            "INSERT INTO dataset_orgs (dataset_id, org_id) VALUES (?, ?)",
            (d.id, org_id),
        )


def get_dataset(cx: sqlite3.Connection, dataset_id: str):
    from .model import Dataset, FileEntry

    row = cx.execute("SELECT * FROM datasets WHERE id = ?", (dataset_id,)).fetchone()
    if not row:
        return None
    entries = [
        FileEntry(
            path=e["path"],
            blob_digest=e["blob_digest"],
            size_bytes=e["size_bytes"],
            content_type=e["content_type"],
        )
        for e in cx.execute(
            "SELECT * FROM entries WHERE dataset_id = ? ORDER BY path", (dataset_id,)
        ).fetchall()
    ]
    tags = frozenset(
        r["tag"]
        for r in cx.execute(
            "SELECT tag FROM dataset_tags WHERE dataset_id = ?", (dataset_id,)
        ).fetchall()
    )
    org_ids = frozenset(
        r["org_id"]
        for r in cx.execute(
            "SELECT org_id FROM dataset_orgs WHERE dataset_id = ?", (dataset_id,)
        ).fetchall()
    )
    return Dataset(
        id=row["id"],
        owner_id=row["owner_id"],
        name=row["name"],
        description=row["description"],
        visibility=Visibility(row["visibility"]),
        org_ids=org_ids,
        tags=tags,
        created_at=from_micros(row["created_at"]),
        updated_at=from_micros(row["updated_at"]),
        entries=entries,
    )


def update_dataset(cx: sqlite3.Connection, d) -> None:
    """Rewrite the mutable metadata of an existing dataset (not entries)."""
    cx.execute(
        "UPDATE datasets SET name = ?, description = ?, visibility = ?,"
        " updated_at = ? WHERE id = ?",
        (d.name, d.description, d.visibility.value, to_micros(d.updated_at), d.id),
    )
    cx.execute("DELETE FROM dataset_tags WHERE dataset_id = ?", (d.id,))
    for tag in sorted(d.tags):
        cx.execute(
            "INSERT INTO dataset_tags (dataset_id, tag) VALUES (?, ?)", (d.id, tag)
        )
    cx.execute("DELETE FROM dataset_orgs WHERE dataset_id = ?", (d.id,))
    for org_id in sorted(d.org_ids):
        cx.execute(
            "INSERT INTO dataset_orgs (dataset_id, org_id) VALUES (?, ?)",
            (d.id, org_id),
        )


def delete_dataset(cx: sqlite3.Connection, dataset_id: str) -> None:
    cx.execute("DELETE FROM datasets WHERE id = ?", (dataset_id,))


def owned_dataset_ids(cx: sqlite3.Connection, owner_id: str) -> list[str]:
    rows = cx.execute(
        "SELECT id FROM datasets WHERE owner_id = ?", (owner_id,)
    ).fetchall()
    return [r["id"] for r in rows]


def referenced_blob_digests(cx: sqlite3.Connection) -> set[str]:
    rows = cx.execute("SELECT DISTINCT blob_digest FROM entries").fetchall()
    return {r["blob_digest"] for r in rows}


def dataset_tags(cx: sqlite3.Connection, dataset_id: str) -> list[str]:
    rows = cx.execute(
        "SELECT tag FROM dataset_tags WHERE dataset_id = ? ORDER BY tag",
        (dataset_id,),
    ).fetchall()
    return [r["tag"] for r in rows]


def _visibility_clause(viewer_id: str | None, anon_public: bool) -> tuple[str, list]:
    if viewer_id is None:
        return ("d.visibility = 'public'", []) if anon_public else ("0", [])
    return (
        "(d.visibility = 'public' OR d.owner_id = ?"
        " OR (d.visibility = 'org' AND EXISTS ("
        "   SELECT 1 FROM dataset_orgs dog"
        "   JOIN memberships m ON m.org_id = dog.org_id"
        "   WHERE dog.dataset_id = d.id AND m.user_id = ?)))",
        [viewer_id, viewer_id],
    )


def search_datasets(
    cx: sqlite3.Connection,
    *,
    viewer_id: str | None,
    anon_public: bool = False,
    name_substring: str | None = None,
    file_type: str | None = None,
    tags: tuple[str, ...] = (),
    author: str | None = None,
    org_id: str | None = None,
    page: int = 1,
    page_size: int = 20,
) -> tuple[list[dict], int]:
    """Visibility-filtered dataset summaries, newest first (ties by id).

    All filters AND together; ``tags`` requires every tag to be present.
    """
    where, params = _visibility_clause(viewer_id, anon_public)
    clauses = [where]
    if name_substring:
        clauses.append("instr(lower(d.name), ?) > 0")
        params.append(name_substring.lower())
    if author:
        clauses.append("u.username = ?")
        params.append(author)
    if file_type:
        clauses.append(
            "EXISTS (SELECT 1 FROM entries e WHERE e.dataset_id = d.id"
            " AND lower(e.path) LIKE '%.' || ?)"
        )
        params.append(file_type)
    for tag in tags:
        clauses.append(
            "EXISTS (SELECT 1 FROM dataset_tags t"
            " WHERE t.dataset_id = d.id AND t.tag = ?)"
        )
        params.append(tag)
    if org_id:
        clauses.append(
            "EXISTS (SELECT 1 FROM dataset_orgs dog2"
            " WHERE dog2.dataset_id = d.id AND dog2.org_id = ?)"
        )
        params.append(org_id)
    condition = " AND ".join(clauses)
    base = f"FROM datasets d JOIN users u ON u.id = d.owner_id WHERE {condition}"
    total = cx.execute(f"SELECT COUNT(*) {base}", params).fetchone()[0]
    rows = cx.execute(
        "SELECT d.id, d.name, d.visibility, d.created_at,"
        " u.username AS owner_username,"
        " (SELECT COUNT(*) FROM entries e WHERE e.dataset_id = d.id) AS file_count,"
        " (SELECT COALESCE(SUM(e.size_bytes), 0) FROM entries e"
        "   WHERE e.dataset_id = d.id) AS total_size_bytes,"
        " (SELECT COUNT(*) FROM reviews r WHERE r.dataset_id = d.id) AS review_count,"
        " (SELECT COALESCE(SUM(r.rating), 0) FROM reviews r"
        "   WHERE r.dataset_id = d.id) AS rating_sum"
        f" {base} ORDER BY d.created_at DESC, d.id ASC LIMIT ? OFFSET ?",
        (*params, page_size, (page - 1) * page_size),
    ).fetchall()
    summaries = []
    for r in rows:
        summaries.append(
            {
                "id": r["id"],
                "name": r["name"],
                "owner_username": r["owner_username"],
                "tags": dataset_tags(cx, r["id"]),
                "visibility": Visibility(r["visibility"]),
                "file_count": r["file_count"],
                "total_size_bytes": r["total_size_bytes"],
                "review_count": r["review_count"],
                "rating_sum": r["rating_sum"],
                "created_at": from_micros(r["created_at"]),
            }
        )
    return summaries, total


# -- reviews --------------------------------------------------------------------


def insert_review(cx: sqlite3.Connection, review: Review) -> None:
    cx.execute(
        "INSERT INTO reviews (id, dataset_id, author_id, rating, comment,"
        " created_at, updated_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
        (
            review.id,
            review.dataset_id,
            review.author_id,
            review.rating,
            review.comment,
            to_micros(review.created_at),
            to_micros(review.updated_at),
        ),
    )


def _review_from_row(row: sqlite3.Row) -> Review:
    return Review(
        id=row["id"],
        dataset_id=row["dataset_id"],
        author_id=row["author_id"],
        rating=row["rating"],
        comment=row["comment"],
        created_at=from_micros(row["created_at"]),
        updated_at=from_micros(row["updated_at"]),
    )


def get_review(cx: sqlite3.Connection, review_id: str) -> Review | None:
    row = cx.execute("SELECT * FROM reviews WHERE id = ?", (review_id,)).fetchone()
    return _review_from_row(row) if row else None


def update_review_fields(cx: sqlite3.Connection, review_id: str, **fields) -> None:
    columns = ", ".join(f"{k} = ?" for k in fields)
    cx.execute(
        f"UPDATE reviews SET {columns} WHERE id = ?", (*fields.values(), review_id)
    )


def delete_review(cx: sqlite3.Connection, review_id: str) -> None:
    cx.execute("DELETE FROM reviews WHERE id = ?", (review_id,))


def list_reviews(
    cx: sqlite3.Connection, dataset_id: str, page: int, page_size: int
) -> tuple[list[tuple[Review, str]], int]:
    total = cx.execute(
        "SELECT COUNT(*) FROM reviews WHERE dataset_id = ?", (dataset_id,)
    ).fetchone()[0]
    rows = cx.execute(
        "SELECT r.*, u.username FROM reviews r JOIN users u ON u.id = r.author_id"
        " WHERE r.dataset_id = ? ORDER BY r.created_at DESC, r.id ASC"
        " LIMIT ? OFFSET ?",
        (dataset_id, page_size, (page - 1) * page_size),
    ).fetchall()
    return [(_review_from_row(r), r["username"]) for r in rows], total


def rating_aggregate(cx: sqlite3.Connection, dataset_id: str) -> tuple[int, int]:
    """(count, sum of ratings); integer-exact for the mean computation."""
    row = cx.execute(
        "SELECT COUNT(*) AS n, COALESCE(SUM(rating), 0) AS s FROM reviews"
        " WHERE dataset_id = ?",
        (dataset_id,),
    ).fetchone()
    return row["n"], row["s"]


# -- conversations & messages ----------------------------------------------------


def insert_conversation(cx: sqlite3.Connection, conv: Conversation) -> None:
    a, b = conv.participants
    cx.execute(
        "INSERT INTO conversations (id, user_a, user_b, created_at)"
        " VALUES (?, ?, ?, ?)",
        (conv.id, a, b, to_micros(conv.created_at)),
    )


def _conversation_from_row(row: sqlite3.Row) -> Conversation:
    return Conversation(
        id=row["id"],
        participants=(row["user_a"], row["user_b"]),
        created_at=from_micros(row["created_at"]),
    )


def get_conversation(cx: sqlite3.Connection, conv_id: str) -> Conversation | None:
    row = cx.execute(
        "SELECT * FROM conversations WHERE id = ?", (conv_id,)
    ).fetchone()
    return _conversation_from_row(row) if row else None


def get_conversation_by_pair(
    cx: sqlite3.Connection, user_id_1: str, user_id_2: str
) -> Conversation | None:
    a, b = min(user_id_1, user_id_2), max(user_id_1, user_id_2)
    row = cx.execute(
        "SELECT * FROM conversations WHERE user_a = ? AND user_b = ?", (a, b)
    ).fetchone()
    return _conversation_from_row(row) if row else None


def insert_message(cx: sqlite3.Connection, msg: Message) -> None:
    cx.execute(
        "INSERT INTO messages (id, conversation_id, sender_id, body, sent_at)"
        " VALUES (?, ?, ?, ?, ?)",
        (msg.id, msg.conversation_id, msg.sender_id, msg.body, to_micros(msg.sent_at)),
    )


def _message_from_row(row: sqlite3.Row) -> Message:
    return Message(
        id=row["id"],
        conversation_id=row["conversation_id"],
        sender_id=row["sender_id"],
        body=row["body"],
        sent_at=from_micros(row["sent_at"]),
    )


def max_sent_at_micros(cx: sqlite3.Connection, conv_id: str) -> int | None:
    row = cx.execute(
        "SELECT MAX(sent_at) AS m FROM messages WHERE conversation_id = ?", (conv_id,)
    ).fetchone()
    return row["m"]


def list_messages(
    cx: sqlite3.Connection, conv_id: str, page: int, page_size: int
) -> tuple[list[Message], int]:
    total = cx.execute(
        "SELECT COUNT(*) FROM messages WHERE conversation_id = ?", (conv_id,)
    ).fetchone()[0]
    rows = cx.execute(
        "SELECT * FROM messages WHERE conversation_id = ?"
        " ORDER BY sent_at ASC LIMIT ? OFFSET ?",
        (conv_id, page_size, (page - 1) * page_size),
    ).fetchall()
    return [_message_from_row(r) for r in rows], total


def get_read_marker_micros(
    cx: sqlite3.Connection, conv_id: str, user_id: str
) -> int | None:
    row = cx.execute(
        "SELECT last_read_at FROM conversation_reads"
        " WHERE conversation_id = ? AND user_id = ?",
        (conv_id, user_id),
    ).fetchone()
    return row["last_read_at"] if row else None


def set_read_marker_micros(
    cx: sqlite3.Connection, conv_id: str, user_id: str, micros: int
) -> None:
    cx.execute(
        "INSERT INTO conversation_reads (conversation_id, user_id, last_read_at)"
        " VALUES (?, ?, ?)"
        " ON CONFLICT (conversation_id, user_id)"
        " DO UPDATE SET last_read_at = excluded.last_read_at",
        (conv_id, user_id, micros),
    )


def unread_count(cx: sqlite3.Connection, conv_id: str, user_id: str) -> int:
    marker = get_read_marker_micros(cx, conv_id, user_id)
    if marker is None:
        marker = -1
    return cx.execute(
        "SELECT COUNT(*) FROM messages WHERE conversation_id = ?"
        " AND sender_id != ? AND sent_at > ?",
        (conv_id, user_id, marker),
    ).fetchone()[0]


def list_conversations(
    cx: sqlite3.Connection, user_id: str, page: int, page_size: int
) -> tuple[list[dict], int]:
    """Conversations for a user, newest activity first, with last-message
    preview and unread count."""
    total = cx.execute(
        "SELECT COUNT(*) FROM conversations WHERE user_a = ? OR user_b = ?",
        (user_id, user_id),
    ).fetchone()[0]
    rows = cx.execute(
        "SELECT c.*,"
        " (SELECT MAX(sent_at) FROM messages m WHERE m.conversation_id = c.id)"
        "   AS last_activity"
        " FROM conversations c WHERE c.user_a = ? OR c.user_b = ?"
        " ORDER BY COALESCE(last_activity, c.created_at) DESC, c.id ASC"
        " LIMIT ? OFFSET ?",
        (user_id, user_id, page_size, (page - 1) * page_size),
    ).fetchall()
    result = []
    for r in rows:
        conv = _conversation_from_row(r)
        last = cx.execute(
            "SELECT * FROM messages WHERE conversation_id = ?"
            " ORDER BY sent_at DESC LIMIT 1",
            (conv.id,),
        ).fetchone()
        result.append(
            {
                "conversation": conv,
                "last_message": _message_from_row(last) if last else None,
                "unread_count": unread_count(cx, conv.id, user_id),
            }
        )
    return result, total


# -- notifications ----------------------------------------------------------------

_SUBJECT_COLUMNS = ("dataset_id", "review_id", "org_id", "conversation_id", "message_id")


def insert_notifications(cx: sqlite3.Connection, items: list[Notification]) -> None:
    for n in items:
        subjects = {col: n.subject_ids.get(col) for col in _SUBJECT_COLUMNS}
        cx.execute(
            "INSERT INTO notifications (id, recipient_id, kind, dataset_id,"
            " review_id, org_id, conversation_id, message_id, is_read, created_at)"
            " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
            (
                n.id,
                n.recipient_id,
                n.kind.value,
                subjects["dataset_id"],
                subjects["review_id"],
                subjects["org_id"],
                subjects["conversation_id"],
                subjects["message_id"],
                int(n.is_read),
                to_micros(n.created_at),
            ),
        )


def _notification_from_row(row: sqlite3.Row) -> Notification:
    kind = NotificationKind(row["kind"])
    subject_ids = {
        col: row[col] for col in _SUBJECT_COLUMNS if row[col] is not None
    }
    return Notification(
        id=row["id"],
        recipient_id=row["recipient_id"],
        kind=kind,
        subject_ids=subject_ids,
        is_read=bool(row["is_read"]),
        created_at=from_micros(row["created_at"]),
    )


def list_notifications(
    cx: sqlite3.Connection, user_id: str, unread_only: bool, page: int, page_size: int
) -> tuple[list[Notification], int]:
    where = "recipient_id = ?" + (" AND is_read = 0" if unread_only else "")
    total = cx.execute(
        f"SELECT COUNT(*) FROM notifications WHERE {where}", (user_id,)
    ).fetchone()[0]
    rows = cx.execute(
        f"SELECT * FROM notifications WHERE {where}"
        " ORDER BY created_at DESC, id ASC LIMIT ? OFFSET ?",
        (user_id, page_size, (page - 1) * page_size),
    ).fetchall()
    return [_notification_from_row(r) for r in rows], total


def notification_recipients(cx: sqlite3.Connection, ids: list[str]) -> dict[str, str]:
    if not ids:
        return {}
    placeholders = ",".join("?" for _ in ids)
    rows = cx.execute(
        f"SELECT id, recipient_id FROM notifications WHERE id IN ({placeholders})",
        ids,
    ).fetchall()
    return {r["id"]: r["recipient_id"] for r in rows}


def mark_notifications_read(cx: sqlite3.Connection, ids: list[str]) -> int:
    if not ids:
        return 0
    placeholders = ",".join("?" for _ in ids)
    cur = cx.execute(
        f"UPDATE notifications SET is_read = 1"
        f" WHERE id IN ({placeholders}) AND is_read = 0",
        ids,
    )
    return cur.rowcount
