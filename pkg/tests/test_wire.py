from __future__ import annotations

from datetime import datetime, timezone

from hypothesis import given, strategies as st

from datadock.model import (
    Dataset,
    FileEntry,
    Message,
    Notification,
    NotificationKind,
    Organization,
    Review,
    UserAccount,
    Visibility,
    NOTIFICATION_SUBJECTS,
)
from datadock.reviews import RatingSummary
from datadock.wire import (
    dataset_from_wire,
    dataset_to_wire,
    format_timestamp,
    message_from_wire,
    message_to_wire,
    notification_from_wire,
    notification_to_wire,
    org_from_wire,
    org_to_wire,
    parse_timestamp,
    rating_summary_to_wire,
    review_from_wire,
    review_to_wire,
    user_from_wire,
    user_to_wire,
)


def test_timestamp_wire_format_is_rfc3339_utc():
    t = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)
    assert format_timestamp(t) == "2024-01-02T03:04:05Z"
    assert parse_timestamp("2024-01-02T03:04:05Z") == t


def test_timestamp_keeps_microseconds():
    t = datetime(2024, 1, 2, 3, 4, 5, 123456, tzinfo=timezone.utc)
    encoded = format_timestamp(t)
    assert encoded == "2024-01-02T03:04:05.123456Z"
    assert parse_timestamp(encoded) == t


utc_timestamps = st.datetimes(
    min_value=datetime(1990, 1, 1),
    max_value=datetime(2100, 1, 1),
).map(lambda naive: naive.replace(tzinfo=timezone.utc))


@given(utc_timestamps)
def test_timestamp_round_trip(t):
    assert parse_timestamp(format_timestamp(t)) == t


def test_visibility_enum_spelling_on_wire():
    assert Visibility.ORG.value == "org"
    assert Visibility.PUBLIC.value == "public"
    assert Visibility.PRIVATE.value == "private"


def test_empty_rating_summary_serializes_null_average():
    assert rating_summary_to_wire(RatingSummary(count=0, rating_sum=0)) == {
        "average": None,
        "count": 0,
    }


identifiers = st.uuids().map(lambda u: u.hex)
usernames = st.from_regex(r"[a-z0-9_-]{3,16}", fullmatch=True)
tags = st.from_regex(r"[a-z0-9][a-z0-9 _-]{0,20}", fullmatch=True).map(
    lambda t: t.strip() or "t"
).filter(lambda t: t == t.strip())
paths = st.lists(
    st.from_regex(r"[a-z0-9][a-z0-9._-]{0,8}", fullmatch=True).filter(
        lambda seg: seg not in (".", "..")
    ),
    min_size=1,
    max_size=3,
).map("/".join)


@st.composite
def users(draw):
    return UserAccount(
        id=draw(identifiers),
        username=draw(usernames),
        email="someone@example.org",
        password_digest="scrypt$irrelevant",
        display_name=draw(st.text(min_size=1, max_size=20).filter(lambda s: s.strip())),
        is_admin=draw(st.booleans()),
        created_at=draw(utc_timestamps),
    )


@st.composite
def datasets(draw):
    visibility = draw(st.sampled_from(list(Visibility)))
    org_ids = (
        frozenset(draw(st.lists(identifiers, min_size=1, max_size=3)))
        if visibility is Visibility.ORG
        else frozenset()
    )
    entry_paths = draw(st.lists(paths, min_size=1, max_size=4, unique=True))
    t = draw(utc_timestamps)
    return Dataset(
        id=draw(identifiers),
        owner_id=draw(identifiers),
        name=draw(st.text(min_size=1, max_size=40).filter(lambda s: s.strip())),
        description=draw(st.text(max_size=200)),
        visibility=visibility,
        org_ids=org_ids,
        tags=frozenset(draw(st.lists(tags, max_size=4))),
        created_at=t,
        updated_at=t,
        entries=[
            FileEntry(path=p, blob_digest="ab" * 32, size_bytes=draw(st.integers(0, 100)))
            for p in entry_paths
        ],
    )


@given(users())
def test_user_wire_round_trip(user):
    decoded = user_from_wire(user_to_wire(user))
    assert (decoded.id, decoded.username, decoded.email, decoded.display_name,
            decoded.is_admin, decoded.created_at) == (
        user.id, user.username, user.email, user.display_name,
        user.is_admin, user.created_at)


@given(datasets(), users())
def test_dataset_wire_round_trip(dataset, owner):
    dataset.owner_id = owner.id
    decoded = dataset_from_wire(dataset_to_wire(dataset, owner))
    assert decoded == dataset


@given(st.integers(1, 5), utc_timestamps, identifiers, identifiers, identifiers)
def test_review_wire_round_trip(rating, t, review_id, dataset_id, author_id):
    review = Review(
        id=review_id, dataset_id=dataset_id, author_id=author_id, rating=rating,
        comment="fine", created_at=t, updated_at=t,
    )
    decoded = review_from_wire(review_to_wire(review, "someone"), author_id=author_id)
    assert decoded == review


@given(identifiers, identifiers, utc_timestamps)
def test_org_wire_round_trip(org_id, creator_id, t):
    org = Organization(
        id=org_id, name="Lab", description="d", creator_id=creator_id, created_at=t
    )
    assert org_from_wire(org_to_wire(org)) == org


@given(identifiers, identifiers, identifiers, utc_timestamps)
def test_message_wire_round_trip(message_id, conversation_id, sender_id, t):
    message = Message(
        id=message_id, conversation_id=conversation_id, sender_id=sender_id,
        body="hello there", sent_at=t,
    )
    assert message_from_wire(message_to_wire(message)) == message


@given(st.sampled_from(list(NotificationKind)), identifiers, identifiers, utc_timestamps,
       st.booleans())
def test_notification_wire_round_trip(kind, recipient_id, subject_a, t, is_read):
    subjects = {key: subject_a for key in NOTIFICATION_SUBJECTS[kind]}
    notification = Notification(
        id="n1", recipient_id=recipient_id, kind=kind, subject_ids=subjects,
        is_read=is_read, created_at=t,
    )
    decoded = notification_from_wire(
        notification_to_wire(notification), recipient_id=recipient_id
    )
    assert decoded == notification
