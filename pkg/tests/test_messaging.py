from __future__ import annotations

import threading

import pytest

from conftest import PASSWORD, register
from datadock.errors import ForbiddenError, NotFoundError, ValidationError


@pytest.fixture
def users(backend):
    return {name: register(backend, name) for name in ("alice", "bob", "carol")}


# -- start_conversation --------------------------------------------------------------


def test_start_twice_returns_same_conversation(backend, users):
    first = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    second = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    assert first.id == second.id


def test_reverse_direction_is_same_conversation(backend, users):
    first = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    second = backend.messaging.start_conversation(users["bob"], users["alice"].id)
    assert first.id == second.id


def test_self_conversation_rejected(backend, users):
    with pytest.raises(ValidationError):
        backend.messaging.start_conversation(users["alice"], users["alice"].id)


def test_unknown_user_not_found(backend, users):
    with pytest.raises(NotFoundError):
        backend.messaging.start_conversation(users["alice"], "ghost")


def test_concurrent_starts_yield_one_conversation(backend, users):
    barrier = threading.Barrier(4)
    ids: list[str] = []
    lock = threading.Lock()

    def start(initiator, other):
        barrier.wait()
        conv = backend.messaging.start_conversation(initiator, other)
        with lock:
            ids.append(conv.id)

    threads = [
        threading.Thread(
            target=start,
            args=(users["alice"], users["bob"].id)
            if i % 2
            else (users["bob"], users["alice"].id),
        )
        for i in range(4)
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(ids)) == 1


# -- send_message ----------------------------------------------------------------------


def test_message_visible_to_both_participants(backend, users):
    conv = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    backend.messaging.send_message(users["alice"], conv.id, "What sampling rate?")
    for reader in ("alice", "bob"):
        messages, total = backend.messaging.list_messages(users[reader], conv.id, 1, 20)
        assert total == 1 and messages[0].body == "What sampling rate?"


def test_non_participant_cannot_send_or_read(backend, users):
    conv = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    with pytest.raises(ForbiddenError):
        backend.messaging.send_message(users["carol"], conv.id, "hello?")
    with pytest.raises(ForbiddenError):
        backend.messaging.list_messages(users["carol"], conv.id, 1, 20)


def test_blank_body_rejected(backend, users):
    conv = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    with pytest.raises(ValidationError):
        backend.messaging.send_message(users["alice"], conv.id, "   ")


def test_send_emits_notification_to_counterpart_only(backend, users):
    conv = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    message = backend.messaging.send_message(users["alice"], conv.id, "hey")
    bob_items, bob_total = backend.notifications.list_notifications(
        users["bob"], False, 1, 20
    )
    assert bob_total == 1
    assert bob_items[0].subject_ids == {
        "conversation_id": conv.id,
        "message_id": message.id,
    }
    _, alice_total = backend.notifications.list_notifications(users["alice"], False, 1, 20)
    assert alice_total == 0


# -- ordering and read tracking ------------------------------------------------------------


def test_messages_chronological_and_strictly_ordered(backend, users):
    conv = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    bodies = [f"message {i}" for i in range(5)]
    for body in bodies:
        backend.messaging.send_message(users["alice"], conv.id, body)
    messages, _ = backend.messaging.list_messages(users["bob"], conv.id, 1, 20)
    assert [m.body for m in messages] == bodies
    times = [m.sent_at for m in messages]
    assert all(a < b for a, b in zip(times, times[1:]))


def test_unread_counts_follow_read_markers(backend, users):
    conv = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    backend.messaging.send_message(users["alice"], conv.id, "one")
    backend.messaging.send_message(users["alice"], conv.id, "two")
    rows, _ = backend.messaging.list_conversations(users["bob"], 1, 20)
    assert rows[0]["unread_count"] == 2

    backend.messaging.list_messages(users["bob"], conv.id, 1, 20)
    rows, _ = backend.messaging.list_conversations(users["bob"], 1, 20)
    assert rows[0]["unread_count"] == 0

    # own messages never count as unread for the sender; alice has never
    # fetched, so only bob's message is unread for her
    backend.messaging.send_message(users["bob"], conv.id, "three")
    assert backend.messaging.unread_count(users["bob"], conv.id) == 0
    assert backend.messaging.unread_count(users["alice"], conv.id) == 1


def test_conversations_ordered_by_latest_activity(backend, users):
    conv_ab = backend.messaging.start_conversation(users["alice"], users["bob"].id)
    conv_ac = backend.messaging.start_conversation(users["alice"], users["carol"].id)
    backend.messaging.send_message(users["bob"], conv_ab.id, "first thread")
    backend.messaging.send_message(users["carol"], conv_ac.id, "second thread")
    rows, _ = backend.messaging.list_conversations(users["alice"], 1, 20)
    assert [r["conversation"].id for r in rows] == [conv_ac.id, conv_ab.id]
    backend.messaging.send_message(users["bob"], conv_ab.id, "hello again")
    rows, _ = backend.messaging.list_conversations(users["alice"], 1, 20)
    assert [r["conversation"].id for r in rows] == [conv_ab.id, conv_ac.id]
    assert rows[0]["last_message"].body == "hello again"


def test_no_conversations_empty_page(backend, users):
    rows, total = backend.messaging.list_conversations(users["alice"], 1, 20)
    assert rows == [] and total == 0


def test_cannot_start_conversation_with_deleted_account(backend, users):
    secret, _, _ = backend.auth.login("bob", PASSWORD)
    backend.auth.delete_account(backend.auth.authenticate(secret))
    with pytest.raises(NotFoundError):
        backend.messaging.start_conversation(users["alice"], users["bob"].id)
