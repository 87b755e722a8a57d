from __future__ import annotations

import io
import random

import pytest

from conftest import register
from datadock.catalog import DatasetDraft
from datadock.errors import ForbiddenError
from datadock.model import Visibility
from oracles import fanout_oracle


def upload_to_orgs(backend, owner, org_ids, name="fanned out"):
    return backend.catalog.create_dataset(
        owner,
        DatasetDraft(
            name=name, visibility=Visibility.ORG, org_ids=frozenset(org_ids),
            files=[("a.txt", io.BytesIO(b"x"), "")],
        ),
    )


def recipients_of(backend, usernames, accounts, kind="dataset_in_org"):
    got = set()
    for name in usernames:
        items, _ = backend.notifications.list_notifications(accounts[name], False, 1, 100)
        if any(n.kind.value == kind for n in items):
            got.add(accounts[name].id)
    return got


# -- dataset fan-out ----------------------------------------------------------------


def test_fanout_excludes_uploader(backend):
    accounts = {n: register(backend, n) for n in ("alice", "bob", "carol")}
    org = backend.orgs.create_org(accounts["alice"], "Lab")
    backend.orgs.join_org(accounts["bob"], org.id)
    backend.orgs.join_org(accounts["carol"], org.id)
    upload_to_orgs(backend, accounts["alice"], [org.id])
    got = recipients_of(backend, accounts, accounts)
    assert got == {accounts["bob"].id, accounts["carol"].id}


def test_overlapping_orgs_dedup_to_one_notification(backend):
    accounts = {n: register(backend, n) for n in ("alice", "dave")}
    org1 = backend.orgs.create_org(accounts["alice"], "One")
    org2 = backend.orgs.create_org(accounts["alice"], "Two")
    backend.orgs.join_org(accounts["dave"], org1.id)
    backend.orgs.join_org(accounts["dave"], org2.id)
    upload_to_orgs(backend, accounts["alice"], [org1.id, org2.id])
    items, total = backend.notifications.list_notifications(accounts["dave"], False, 1, 20)
    assert total == 1
    assert items[0].subject_ids["dataset_id"]


def test_sole_member_uploader_emits_nothing(backend):
    alice = register(backend, "alice")
    org = backend.orgs.create_org(alice, "Solo")
    upload_to_orgs(backend, alice, [org.id])
    _, total = backend.notifications.list_notifications(alice, False, 1, 20)
    assert total == 0


def test_fanout_set_matches_oracle_on_random_graphs(backend):
    rng = random.Random(42)
    names = [f"member{i}" for i in range(8)]
    accounts = {n: register(backend, n) for n in names}
    for trial in range(15):
        org_members: dict[str, set[str]] = {}
        org_ids = []
        creator = rng.choice(names)
        for i in range(rng.randint(1, 3)):
            org = backend.orgs.create_org(accounts[creator], f"trial{trial} org{i}")
            members = {accounts[creator].id}
            for n in names:
                if n != creator and rng.random() < 0.5:
                    backend.orgs.join_org(accounts[n], org.id)
                    members.add(accounts[n].id)
            org_ids.append(org.id)
            org_members[org.id] = members
        uploader = accounts[creator]
        before = {
            accounts[n].id: backend.notifications.list_notifications(
                accounts[n], False, 1, 100
            )[1]
            for n in names
        }
        upload_to_orgs(backend, uploader, org_ids, name=f"trial {trial}")
        after = {
            accounts[n].id: backend.notifications.list_notifications(
                accounts[n], False, 1, 100
            )[1]
            for n in names
        }
        got = {uid for uid in after if after[uid] > before[uid]}
        duplicates = {uid for uid in after if after[uid] - before[uid] > 1}
        expected = fanout_oracle(org_members, org_ids, uploader.id)
        assert got == expected
        assert duplicates == set()


# -- inbox ---------------------------------------------------------------------------


@pytest.fixture
def inbox(backend):
    accounts = {n: register(backend, n) for n in ("alice", "bob")}
    org = backend.orgs.create_org(accounts["alice"], "Lab")
    backend.orgs.join_org(accounts["bob"], org.id)
    for i in range(5):
        upload_to_orgs(backend, accounts["alice"], [org.id], name=f"batch {i}")
    return backend, accounts


def test_unread_filter_and_newest_first(inbox):
    backend, accounts = inbox
    items, total = backend.notifications.list_notifications(accounts["bob"], True, 1, 20)
    assert total == 5
    times = [n.created_at for n in items]
    assert times == sorted(times, reverse=True)
    backend.notifications.mark_read(accounts["bob"], [items[0].id, items[1].id])
    _, unread_total = backend.notifications.list_notifications(accounts["bob"], True, 1, 20)
    _, all_total = backend.notifications.list_notifications(accounts["bob"], False, 1, 20)
    assert unread_total == 3 and all_total == 5


def test_recipient_isolation(inbox):
    backend, accounts = inbox
    _, total = backend.notifications.list_notifications(accounts["alice"], False, 1, 20)
    assert total == 0


def test_mark_read_idempotent_counts(inbox):
    backend, accounts = inbox
    items, _ = backend.notifications.list_notifications(accounts["bob"], True, 1, 20)
    ids = [items[0].id, items[1].id]
    assert backend.notifications.mark_read(accounts["bob"], ids) == 2
    assert backend.notifications.mark_read(accounts["bob"], ids) == 0


def test_mark_read_with_foreign_id_updates_nothing(inbox):
    backend, accounts = inbox
    items, _ = backend.notifications.list_notifications(accounts["bob"], True, 1, 20)
    own = items[0].id
    with pytest.raises(ForbiddenError):
        backend.notifications.mark_read(accounts["alice"], [own])
    with pytest.raises(ForbiddenError):
        backend.notifications.mark_read(accounts["bob"], [own, "not-a-real-id"])
    refreshed, _ = backend.notifications.list_notifications(accounts["bob"], True, 1, 20)
    assert any(n.id == own and not n.is_read for n in refreshed)


def test_mark_read_empty_list_is_zero(inbox):
    backend, accounts = inbox
    assert backend.notifications.mark_read(accounts["bob"], []) == 0


def test_rolled_back_source_emits_nothing(backend):
    """A review whose transaction fails must not leave a notification."""
    alice = register(backend, "alice")
    bob = register(backend, "bob")
    dataset = backend.catalog.create_dataset(
        alice,
        DatasetDraft(
            name="target", visibility=Visibility.PUBLIC,
            files=[("a", io.BytesIO(b"x"), "")],
        ),
    )
    backend.reviews.submit_review(bob, dataset.id, 4)
    try:
        backend.reviews.submit_review(bob, dataset.id, 5)  # duplicate -> conflict
    except Exception:
        pass
    _, total = backend.notifications.list_notifications(alice, False, 1, 20)
    assert total == 1
