"""Core entity types, value validation, and normalization rules.

Everything here is a pure value: constructors reject invariant-violating
field combinations and nothing touches storage or I/O. Usernames and tags
are lowercased once, at this boundary, so the rest of the system can rely
on a single canonical form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import ValidationError

USERNAME_RE = re.compile(r"^[a-z0-9_-]{3,32}$")
TAG_RE = re.compile(r"^[a-z0-9][a-z0-9 _-]*$")

MAX_NAME_LEN = 200
MAX_DESCRIPTION_LEN = 10_000
MAX_COMMENT_LEN = 5_000
MAX_MESSAGE_LEN = 10_000
MAX_PATH_LEN = 1024
MAX_TAG_LEN = 50
MAX_ORG_NAME_LEN = 100
MAX_DISPLAY_NAME_LEN = 200

#: Shown in place of a removed account's identity.
TOMBSTONE_DISPLAY = "deleted user"


def now_utc() -> datetime:
    return datetime.now(timezone.utc)


class Visibility(str, Enum):
    PUBLIC = "public"
    ORG = "org"
    PRIVATE = "private"


class Role(str, Enum):
    OWNER = "owner"
    MEMBER = "member"


class NotificationKind(str, Enum):
    DATASET_IN_ORG = "dataset_in_org"
    REVIEW_RECEIVED = "review_received"
    MESSAGE_RECEIVED = "message_received"


def validate_username(raw: str) -> str:
    """Lowercase and validate a username; returns the canonical form."""
    canonical = raw.strip().lower()
    if not USERNAME_RE.match(canonical):
        raise ValidationError(
            "username must be 3-32 characters of a-z, 0-9, '_' or '-'",
            details={"username": "3-32 chars, a-z 0-9 _ -"},
        )
    return canonical


def validate_email(raw: str) -> str:
    value = raw.strip()
    local, sep, domain = value.partition("@")
    if not sep or not local or not domain or "@" in domain:
        raise ValidationError(
            "email must contain exactly one '@' with non-empty local and domain parts",
            details={"email": "expected local@domain"},
        )
    return value


def normalize_tag(raw: str) -> str:
    """Trim + lowercase a tag and check the tag grammar. Idempotent."""
    tag = raw.strip().lower()
    if not tag:
        raise ValidationError("tag is empty", details={"tag": "empty after trimming"})
    if len(tag) > MAX_TAG_LEN:
        raise ValidationError(
            f"tag longer than {MAX_TAG_LEN} characters", details={"tag": raw}
        )
    if not TAG_RE.match(tag):
        raise ValidationError(
            "tag must start with a letter or digit and contain only "
            "a-z, 0-9, spaces, '_' or '-'",
            details={"tag": raw},
        )
    return tag


def normalize_tags(raw_tags) -> frozenset[str]:
    return frozenset(normalize_tag(t) for t in raw_tags)


def validate_path(raw: str) -> str:
    """Check a relative, slash-separated file path. Returned unchanged."""
    if len(raw) > MAX_PATH_LEN:
        raise ValidationError(
            f"path longer than {MAX_PATH_LEN} characters", details={"path": raw[:80]}
        )
    if raw.startswith("/"):
        raise ValidationError("path must be relative", details={"path": raw})
    segments = raw.split("/")
    for seg in segments:
        if seg == "":
            raise ValidationError("path has an empty segment", details={"path": raw})
        if seg in (".", ".."):
            raise ValidationError(
                "path must not contain '.' or '..' segments", details={"path": raw}
            )
    return raw


def validate_name(raw: str, *, what: str = "name", max_len: int = MAX_NAME_LEN) -> str:
    name = raw.strip()
    if not name:
        raise ValidationError(f"{what} is empty", details={what: "required"})
    if len(name) > max_len:
        raise ValidationError(
            f"{what} longer than {max_len} characters", details={what: "too long"}
        )
    return name


def _require_utc(value: datetime, what: str) -> datetime:
    if value.tzinfo is None or value.utcoffset() is None:
        raise ValidationError(f"{what} must be timezone-aware UTC")
    return value.astimezone(timezone.utc)


@dataclass
class UserAccount:
    id: str
    username: str
    email: str
    password_digest: str
    display_name: str
    is_admin: bool
    created_at: datetime
    is_active: bool = True

    def __post_init__(self):
        self.username = validate_username(self.username)
        if self.is_active:
            self.email = validate_email(self.email)
        self.created_at = _require_utc(self.created_at, "created_at")


@dataclass
class FileEntry:
    path: str
    blob_digest: str
    size_bytes: int
    content_type: str = "application/octet-stream"

    def __post_init__(self):
        self.path = validate_path(self.path)
        if self.size_bytes < 0:
            raise ValidationError("size_bytes must be non-negative")
        if not re.fullmatch(r"[0-9a-f]{64}", self.blob_digest):
            raise ValidationError("blob_digest must be 64 lowercase hex characters")
        if not self.content_type:
            self.content_type = "application/octet-stream"


@dataclass
class Dataset:
    id: str
    owner_id: str
    name: str
    description: str
    visibility: Visibility
    org_ids: frozenset[str]
    tags: frozenset[str]
    created_at: datetime
    updated_at: datetime
    entries: list[FileEntry] = field(default_factory=list)

    def __post_init__(self):
        self.name = validate_name(self.name)
        if len(self.description) > MAX_DESCRIPTION_LEN:
            raise ValidationError(
                f"description longer than {MAX_DESCRIPTION_LEN} characters",
                details={"description": "too long"},
            )
        self.visibility = Visibility(self.visibility)
        self.org_ids = frozenset(self.org_ids)
        if (self.visibility is Visibility.ORG) != bool(self.org_ids):
            raise ValidationError(
                "org visibility requires at least one organization; "
                "other visibilities require none",
                details={"org_ids": "must be non-empty iff visibility is 'org'"},
            )
        self.tags = normalize_tags(self.tags)
        if not self.entries:
            raise ValidationError("dataset must contain at least one file")
        paths = [e.path for e in self.entries]
        if len(paths) != len(set(paths)):
            raise ValidationError("file paths must be pairwise distinct")
        self.created_at = _require_utc(self.created_at, "created_at")
        self.updated_at = _require_utc(self.updated_at, "updated_at")


@dataclass
class Review:
    id: str
    dataset_id: str
    author_id: str
    rating: int
    comment: str
    created_at: datetime
    updated_at: datetime

    def __post_init__(self):
        validate_rating(self.rating)
        validate_comment(self.comment)
        self.created_at = _require_utc(self.created_at, "created_at")
        self.updated_at = _require_utc(self.updated_at, "updated_at")


def validate_rating(rating) -> int:
    if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 5:
        raise ValidationError(
            "rating must be an integer between 1 and 5", details={"rating": str(rating)}
        )
    return rating


def validate_comment(comment: str) -> str:
    if len(comment) > MAX_COMMENT_LEN:
        raise ValidationError(
            f"comment longer than {MAX_COMMENT_LEN} characters",
            details={"comment": "too long"},
        )
    return comment


@dataclass
class Organization:
    id: str
    name: str
    description: str
    creator_id: str
    created_at: datetime

    def __post_init__(self):
        self.name = validate_name(self.name, what="name", max_len=MAX_ORG_NAME_LEN)
        self.created_at = _require_utc(self.created_at, "created_at")


@dataclass
class Membership:
    org_id: str
    user_id: str
    role: Role
    joined_at: datetime

    def __post_init__(self):
        self.role = Role(self.role)
        self.joined_at = _require_utc(self.joined_at, "joined_at")


@dataclass
class Conversation:
    id: str
    participants: tuple[str, str]
    created_at: datetime

    def __post_init__(self):
        a, b = self.participants
        if a == b:
            raise ValidationError("conversation participants must be distinct")
        # Canonical order makes the unordered pair unique by construction.
        self.participants = (min(a, b), max(a, b))
        self.created_at = _require_utc(self.created_at, "created_at")


@dataclass
class Message:
    id: str
    conversation_id: str
    sender_id: str
    body: str
    sent_at: datetime

    def __post_init__(self):
        validate_message_body(self.body)
        self.sent_at = _require_utc(self.sent_at, "sent_at")


def validate_message_body(body: str) -> str:
    if not body.strip():
        raise ValidationError("message body is empty", details={"body": "required"})
    if len(body) > MAX_MESSAGE_LEN:
        raise ValidationError(
            f"message body longer than {MAX_MESSAGE_LEN} characters",
            details={"body": "too long"},
        )
    return body


#: subject ids each notification kind must carry, and nothing else.
NOTIFICATION_SUBJECTS = {
    NotificationKind.DATASET_IN_ORG: ("dataset_id", "org_id"),
    NotificationKind.REVIEW_RECEIVED: ("dataset_id", "review_id"),
    NotificationKind.MESSAGE_RECEIVED: ("conversation_id", "message_id"),
}


@dataclass
class Notification:
    id: str
    recipient_id: str
    kind: NotificationKind
    subject_ids: dict[str, str]
    is_read: bool
    created_at: datetime

    def __post_init__(self):
        self.kind = NotificationKind(self.kind)
        required = NOTIFICATION_SUBJECTS[self.kind]
        if set(self.subject_ids) != set(required) or not all(
            self.subject_ids[k] for k in required
        ):
            raise ValidationError(
                f"notification kind {self.kind.value} requires subject ids "
                f"{', '.join(required)}"
            )
        self.created_at = _require_utc(self.created_at, "created_at")
