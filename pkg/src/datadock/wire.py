"""JSON wire representations: snake_case fields, RFC 3339 UTC timestamps,
string ids, lowercase enum spellings.

Encoders produce plain dicts for the API layer; matching decoders exist for
the entity types so round-tripping is testable and client tooling can reuse
them.
"""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Any

from .catalog import DatasetSummary
from .model import (
    Conversation,
    Dataset,
    FileEntry,
    Message,
    Notification,
    NotificationKind,
    Organization,
    Review,
    UserAccount,
    Visibility,
)
from .reviews import RatingSummary


def format_timestamp(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        return f"{base}.{dt.microsecond:06d}Z"
    return f"{base}Z"


def parse_timestamp(raw: str) -> datetime:
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    return datetime.fromisoformat(raw).astimezone(timezone.utc)


def page_envelope(items: list, page: int, page_size: int, total: int) -> dict:
    return {"items": items, "page": page, "page_size": page_size, "total": total}


# -- users ----------------------------------------------------------------------


def user_to_wire(u: UserAccount) -> dict:
    return {
        "id": u.id,
        "username": u.username,
        "email": u.email,
        "display_name": u.display_name,
        "is_admin": u.is_admin,
        "created_at": format_timestamp(u.created_at),
    }


def user_from_wire(data: dict) -> UserAccount:
    return UserAccount(
        id=data["id"],
        username=data["username"],
        email=data["email"],
        password_digest="!",
        display_name=data["display_name"],
        is_admin=data["is_admin"],
        created_at=parse_timestamp(data["created_at"]),
    )


def public_identity(u: UserAccount | None) -> dict:
    """How another user appears in listings; tombstoned accounts show a
    placeholder instead of their historical identity."""
    if u is None or not u.is_active:
        return {"id": u.id if u else None, "username": "deleted user", "display_name": "deleted user"}
    return {"id": u.id, "username": u.username, "display_name": u.display_name}


# -- datasets --------------------------------------------------------------------


def entry_to_wire(e: FileEntry) -> dict:
    return {
        "path": e.path,
        "blob_digest": e.blob_digest,
        "size_bytes": e.size_bytes,
        "content_type": e.content_type,
    }


def entry_from_wire(data: dict) -> FileEntry:
    return FileEntry(
        path=data["path"],
        blob_digest=data["blob_digest"],
        size_bytes=data["size_bytes"],
        content_type=data["content_type"],
    )


def dataset_to_wire(
    d: Dataset, owner: UserAccount, rating: RatingSummary | None = None
) -> dict:
    body: dict[str, Any] = {
        "id": d.id,
        "name": d.name,
        "description": d.description,
        "visibility": d.visibility.value,
        "org_ids": sorted(d.org_ids),
        "tags": sorted(d.tags),
        "owner": public_identity(owner),
        "created_at": format_timestamp(d.created_at),
        "updated_at": format_timestamp(d.updated_at),
        "entries": [entry_to_wire(e) for e in d.entries],
    }
    if rating is not None:
        body["rating"] = rating_summary_to_wire(rating)
    return body


def dataset_from_wire(data: dict) -> Dataset:
    return Dataset(
        id=data["id"],
        owner_id=data["owner"]["id"],
        name=data["name"],
        description=data["description"],
        visibility=Visibility(data["visibility"]),
        org_ids=frozenset(data["org_ids"]),
        tags=frozenset(data["tags"]),
        created_at=parse_timestamp(data["created_at"]),
        updated_at=parse_timestamp(data["updated_at"]),
        entries=[entry_from_wire(e) for e in data["entries"]],
    )


def summary_to_wire(s: DatasetSummary) -> dict:
    rating = RatingSummary(count=s.review_count, rating_sum=s.rating_sum)
    return {
        "id": s.id,
        "name": s.name,
        "owner_username": s.owner_username,
        "tags": list(s.tags),
        "visibility": s.visibility.value,
        "file_count": s.file_count,
        "total_size_bytes": s.total_size_bytes,
        "average_rating": None if rating.average is None else float(rating.average),
        "review_count": s.review_count,
        "created_at": format_timestamp(s.created_at),
    }


# -- reviews ---------------------------------------------------------------------


def rating_summary_to_wire(r: RatingSummary) -> dict:
    return {
        "average": None if r.average is None else float(r.average),
        "count": r.count,
    }


def review_to_wire(r: Review, author_username: str) -> dict:
    return {
        "id": r.id,
        "dataset_id": r.dataset_id,
        "author_username": author_username,
        "rating": r.rating,
        "comment": r.comment,
        "created_at": format_timestamp(r.created_at),
        "updated_at": format_timestamp(r.updated_at),
    }


def review_from_wire(data: dict, author_id: str = "") -> Review:
    return Review(
        id=data["id"],
        dataset_id=data["dataset_id"],
        author_id=author_id or data.get("author_id", ""),
        rating=data["rating"],
        comment=data["comment"],
        created_at=parse_timestamp(data["created_at"]),
        updated_at=parse_timestamp(data["updated_at"]),
    )


# -- organizations ------------------------------------------------------------------


def org_to_wire(o: Organization, member_count: int | None = None) -> dict:
    body = {
        "id": o.id,
        "name": o.name,
        "description": o.description,
        "creator_id": o.creator_id,
        "created_at": format_timestamp(o.created_at),
    }
    if member_count is not None:
        body["member_count"] = member_count
    return body


def org_from_wire(data: dict) -> Organization:
    return Organization(
        id=data["id"],
        name=data["name"],
        description=data["description"],
        creator_id=data["creator_id"],
        created_at=parse_timestamp(data["created_at"]),
    )


# -- messaging ----------------------------------------------------------------------


def message_to_wire(m: Message, sender: UserAccount | None = None) -> dict:
    body = {
        "id": m.id,
        "conversation_id": m.conversation_id,
        "sender_id": m.sender_id,
        "body": m.body,
        "sent_at": format_timestamp(m.sent_at),
    }
    if sender is not None:
        body["sender"] = public_identity(sender)
    return body


def message_from_wire(data: dict) -> Message:
    return Message(
        id=data["id"],
        conversation_id=data["conversation_id"],
        sender_id=data["sender_id"],
        body=data["body"],
        sent_at=parse_timestamp(data["sent_at"]),
    )


def conversation_to_wire(
    c: Conversation,
    viewer_id: str,
    counterpart: UserAccount | None,
    last_message: Message | None,
    unread_count: int,
) -> dict:
    return {
        "id": c.id,
        "participants": list(c.participants),
        "counterpart": public_identity(counterpart),
        "created_at": format_timestamp(c.created_at),
        "last_message": None if last_message is None else message_to_wire(last_message),
        "unread_count": unread_count,
    }


# -- notifications ---------------------------------------------------------------------


def notification_to_wire(n: Notification) -> dict:
    return {
        "id": n.id,
        "kind": n.kind.value,
        "subject_ids": dict(n.subject_ids),
        "is_read": n.is_read,
        "created_at": format_timestamp(n.created_at),
    }


def notification_from_wire(data: dict, recipient_id: str = "") -> Notification:
    return Notification(
        id=data["id"],
        recipient_id=recipient_id or data.get("recipient_id", ""),
        kind=NotificationKind(data["kind"]),
        subject_ids=dict(data["subject_ids"]),
        is_read=data["is_read"],
        created_at=parse_timestamp(data["created_at"]),
    )
