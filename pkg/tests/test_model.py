from __future__ import annotations

from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from datadock.errors import ValidationError
from datadock.model import (
    Conversation,
    Dataset,
    FileEntry,
    Notification,
    NotificationKind,
    Review,
    Visibility,
    normalize_tag,
    validate_path,
    validate_username,
)

NOW = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def entry(path="a.csv"):
    return FileEntry(path=path, blob_digest="0" * 64, size_bytes=1)


# -- normalize_tag ---------------------------------------------------------------


def test_tag_lowercases_and_trims():
    assert normalize_tag("EEG ") == "eeg"


def test_tag_already_normal_passes_through():
    assert normalize_tag("gene expression") == "gene expression"


def test_tag_empty_after_trim_rejected():
    with pytest.raises(ValidationError):
        normalize_tag("  ")


@pytest.mark.parametrize("bad", ["-leading", "_x", "a" * 51, "ümlaut", "semi;colon"])
def test_tag_charset_violations(bad):
    with pytest.raises(ValidationError):
        normalize_tag(bad)


@given(st.text(max_size=60))
def test_tag_normalization_idempotent(raw):
    try:
        once = normalize_tag(raw)
    except ValidationError:
        return
    assert normalize_tag(once) == once


# -- validate_path ---------------------------------------------------------------


def test_path_canonical_passes_unchanged():
    assert validate_path("sub/b.bin") == "sub/b.bin"


@pytest.mark.parametrize(
    "bad", ["../etc/passwd", "a//b", "/abs", "a/./b", "a/..", ".", "", "x/" ]
)
def test_path_rejections(bad):
    with pytest.raises(ValidationError):
        validate_path(bad)


def test_path_length_cap():
    assert validate_path("a/" * 510 + "b")
    with pytest.raises(ValidationError):
        validate_path("a/" * 600 + "b")


@given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=80))
def test_path_acceptance_matches_segment_rule(raw):
    segments = raw.split("/")
    should_pass = (
        len(raw) <= 1024
        and all(seg not in ("", ".", "..") for seg in segments)
    )
    try:
        validate_path(raw)
        assert should_pass
    except ValidationError:
        assert not should_pass


# -- validate_username --------------------------------------------------------------


def test_username_lowercased():
    assert validate_username("Alice") == "alice"


def test_username_too_short():
    with pytest.raises(ValidationError):
        validate_username("ab")


def test_username_canonical_passthrough():
    assert validate_username("bob_42") == "bob_42"


# -- type constructors ----------------------------------------------------------------


def test_visibility_has_exactly_three_values():
    assert {v.value for v in Visibility} == {"public", "org", "private"}


def test_dataset_org_coupling_enforced():
    with pytest.raises(ValidationError):
        Dataset(
            id="d1", owner_id="u1", name="x", description="",
            visibility=Visibility.ORG, org_ids=frozenset(), tags=frozenset(),
            created_at=NOW, updated_at=NOW, entries=[entry()],
        )
    with pytest.raises(ValidationError):
        Dataset(
            id="d1", owner_id="u1", name="x", description="",
            visibility=Visibility.PUBLIC, org_ids=frozenset({"o1"}), tags=frozenset(),
            created_at=NOW, updated_at=NOW, entries=[entry()],
        )


def test_dataset_requires_entries_and_distinct_paths():
    with pytest.raises(ValidationError):
        Dataset(
            id="d1", owner_id="u1", name="x", description="",
            visibility=Visibility.PRIVATE, org_ids=frozenset(), tags=frozenset(),
            created_at=NOW, updated_at=NOW, entries=[],
        )
    with pytest.raises(ValidationError):
        Dataset(
            id="d1", owner_id="u1", name="x", description="",
            visibility=Visibility.PRIVATE, org_ids=frozenset(), tags=frozenset(),
            created_at=NOW, updated_at=NOW, entries=[entry("a"), entry("a")],
        )


@pytest.mark.parametrize("rating", [0, 6, -1, 2.5, "3"])
def test_review_rating_bounds(rating):
    with pytest.raises(ValidationError):
        Review(
            id="r1", dataset_id="d1", author_id="u1", rating=rating,
            comment="", created_at=NOW, updated_at=NOW,
        )


def test_conversation_participants_distinct_and_canonical():
    with pytest.raises(ValidationError):
        Conversation(id="c1", participants=("u1", "u1"), created_at=NOW)
    conv = Conversation(id="c1", participants=("u2", "u1"), created_at=NOW)
    assert conv.participants == ("u1", "u2")


def test_notification_kind_determines_subjects():
    Notification(
        id="n1", recipient_id="u1", kind=NotificationKind.DATASET_IN_ORG,
        subject_ids={"dataset_id": "d1", "org_id": "o1"}, is_read=False,
        created_at=NOW,
    )
    with pytest.raises(ValidationError):
        Notification(
            id="n2", recipient_id="u1", kind=NotificationKind.DATASET_IN_ORG,
            subject_ids={"dataset_id": "d1"}, is_read=False, created_at=NOW,
        )
    with pytest.raises(ValidationError):
        Notification(
            id="n3", recipient_id="u1", kind=NotificationKind.MESSAGE_RECEIVED,
            subject_ids={"dataset_id": "d1", "org_id": "o1"}, is_read=False,
            created_at=NOW,
        )
