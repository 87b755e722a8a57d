"""In-app notification inbox: fan-out, listing, and mark-read.

Emission runs after the source event's transaction has committed, so a
rolled-back upload/review/message can never leave a phantom notification.
Each source event notifies each recipient exactly once.
"""

from __future__ import annotations

import uuid

from . import repo
from .catalog import validate_page
from .db import Database
from .errors import ForbiddenError
from .model import (
    Dataset,
    Message,
    Notification,
    NotificationKind,
    Review,
    UserAccount,
    now_utc,
)


class NotificationService:
    def __init__(self, db: Database):
        self.db = db

    # -- emission ---------------------------------------------------------------

    def emit_dataset_in_org(self, dataset: Dataset) -> int:
        """Notify every member of the dataset's organizations except the
        uploader; members of several listed orgs get one notification."""
        if not dataset.org_ids:
            return 0
        with self.db.transaction() as cx:
            recipients = repo.member_ids_of_orgs(cx, dataset.org_ids) - {
                dataset.owner_id
            }
            org_for = {}
            for user_id in recipients:
                for org_id in sorted(dataset.org_ids):
                    if repo.get_membership(cx, org_id, user_id) is not None:
                        org_for[user_id] = org_id
                        break
            items = [
                Notification(
                    id=uuid.uuid4().hex,
                    recipient_id=user_id,
                    kind=NotificationKind.DATASET_IN_ORG,
                    subject_ids={"dataset_id": dataset.id, "org_id": org_for[user_id]},
                    is_read=False,
                    created_at=now_utc(),
                )
                for user_id in sorted(recipients)
            ]
            repo.insert_notifications(cx, items)
        return len(items)

    def emit_review_received(self, review: Review, dataset_owner_id: str) -> int:
        with self.db.transaction() as cx:
            repo.insert_notifications(
                cx,
                [
                    Notification(
                        id=uuid.uuid4().hex,
                        recipient_id=dataset_owner_id,
                        kind=NotificationKind.REVIEW_RECEIVED,
                        subject_ids={
                            "dataset_id": review.dataset_id,
                            "review_id": review.id,
                        },
                        is_read=False,
                        created_at=now_utc(),
                    )
                ],
            )
        return 1

    def emit_message_received(self, message: Message, recipient_id: str) -> int:
        with self.db.transaction() as cx:
            repo.insert_notifications(
                cx,
                [
                    Notification(
                        id=uuid.uuid4().hex,
                        recipient_id=recipient_id,
                        kind=NotificationKind.MESSAGE_RECEIVED,
                        subject_ids={
                            "conversation_id": message.conversation_id,
                            "message_id": message.id,
                        },
                        is_read=False,
                        created_at=now_utc(),
                    )
                ],
            )
        return 1

    # -- inbox ------------------------------------------------------------------

    def list_notifications(
        self, user: UserAccount, unread_only: bool, page: int, page_size: int
    ) -> tuple[list[Notification], int]:
        validate_page(page, page_size)
        with self.db.read() as cx:
            return repo.list_notifications(cx, user.id, unread_only, page, page_size)

    def mark_read(self, user: UserAccount, notification_ids: list[str]) -> int:
        """Flip the given notifications to read; idempotent. If any id is
        unknown or belongs to someone else, nothing is updated."""
        ids = list(dict.fromkeys(notification_ids))
        if not ids:
            return 0
        with self.db.transaction() as cx:
            owners = repo.notification_recipients(cx, ids)
            if len(owners) != len(ids) or any(
                recipient != user.id for recipient in owners.values()
            ):
                raise ForbiddenError("notification ids must all belong to the caller")
            return repo.mark_notifications_read(cx, ids)
