"""One-to-one conversations and messages.

A pair of users has at most one conversation (participants are stored in
canonical order and uniquely indexed, so creation races collapse into a
retry). Message timestamps are strictly increasing per conversation, which
makes the per-user last-read timestamp an exact unread boundary.
"""

from __future__ import annotations

import logging
import uuid

from . import repo
from .catalog import validate_page
from .db import Database
from .errors import (
    ForbiddenError,
    NotFoundError,
    UniquenessViolation,
    ValidationError,
)
from .model import (
    Conversation,
    Message,
    UserAccount,
    now_utc,
    validate_message_body,
)

logger = logging.getLogger(__name__)


class MessagingService:
    def __init__(self, db: Database, notifications=None):
        self.db = db
        self.notifications = notifications

    def start_conversation(
        self, initiator: UserAccount, other_user_id: str
    ) -> Conversation:
        if other_user_id == initiator.id:
            raise ValidationError("cannot start a conversation with yourself")
        with self.db.transaction() as cx:
            other = repo.get_user(cx, other_user_id)
            if other is None or not other.is_active:
                raise NotFoundError("user not found")
            existing = repo.get_conversation_by_pair(cx, initiator.id, other_user_id)
            if existing is not None:
                return existing
        conv = Conversation(
            id=uuid.uuid4().hex,
            participants=(initiator.id, other_user_id),
            created_at=now_utc(),
        )
        try:
            with self.db.transaction() as cx:
                repo.insert_conversation(cx, conv)
            return conv
        except UniquenessViolation:
            # lost the creation race; the winner's conversation is the answer
            with self.db.read() as cx:
                existing = repo.get_conversation_by_pair(cx, initiator.id, other_user_id)
            assert existing is not None
            return existing

    def send_message(
        self, sender: UserAccount, conversation_id: str, body: str
    ) -> Message:
        validate_message_body(body)
        with self.db.transaction() as cx:
            conv = repo.get_conversation(cx, conversation_id)
            if conv is None:
                raise NotFoundError("conversation not found")
            if sender.id not in conv.participants:
                raise ForbiddenError("only participants can send messages")
            # strictly increasing sent_at keeps read markers exact
            now_us = repo.to_micros(now_utc())
            prev = repo.max_sent_at_micros(cx, conversation_id)
            if prev is not None and now_us <= prev:
                now_us = prev + 1
            message = Message(
                id=uuid.uuid4().hex,
                conversation_id=conversation_id,
                sender_id=sender.id,
                body=body,
                sent_at=repo.from_micros(now_us),
            )
            repo.insert_message(cx, message)
            recipient = (
                conv.participants[0]
                if conv.participants[1] == sender.id
                else conv.participants[1]
            )
        if self.notifications is not None:
            try:
                self.notifications.emit_message_received(message, recipient)
            except Exception:
                logger.exception("message notification failed for %s", message.id)
        return message

    def list_conversations(
        self, user: UserAccount, page: int, page_size: int
    ) -> tuple[list[dict], int]:
        validate_page(page, page_size)
        with self.db.read() as cx:
            return repo.list_conversations(cx, user.id, page, page_size)

    def list_messages(
        self, user: UserAccount, conversation_id: str, page: int, page_size: int
    ) -> tuple[list[Message], int]:
        """Chronological page of messages; fetching marks the conversation
        read for the caller."""
        validate_page(page, page_size)
        with self.db.transaction() as cx:
            conv = repo.get_conversation(cx, conversation_id)
            if conv is None:
                raise NotFoundError("conversation not found")
            if user.id not in conv.participants:
                raise ForbiddenError("only participants can read a conversation")
            messages, total = repo.list_messages(cx, conversation_id, page, page_size)
            latest = repo.max_sent_at_micros(cx, conversation_id)
            if latest is not None:
                repo.set_read_marker_micros(cx, conversation_id, user.id, latest)
            return messages, total

    def unread_count(self, user: UserAccount, conversation_id: str) -> int:
        with self.db.read() as cx:
            return repo.unread_count(cx, conversation_id, user.id)
