"""Organizations (the product's research communities) and membership.

Membership gates org-scoped dataset visibility and the upload fan-out.
Every live organization always has at least one Owner; the last member
leaving dissolves the organization.
"""

from __future__ import annotations

import sqlite3
import uuid

from . import repo
from .catalog import validate_page
from .db import Database
from .errors import (
    ConflictError,
    ForbiddenError,
    NotFoundError,
    UniquenessViolation,
)
from .model import (
    Membership,
    Organization,
    Role,
    UserAccount,
    now_utc,
    validate_name,
    MAX_ORG_NAME_LEN,
    MAX_DESCRIPTION_LEN,
)
from .errors import ValidationError


def remove_user_from_all_orgs(cx: sqlite3.Connection, user_id: str) -> None:
    """Drop every membership of a user while preserving the ≥1-Owner
    invariant: sole-Owner orgs promote their earliest-joined member, and
    orgs left empty are dissolved."""
    for membership in repo.list_user_memberships(cx, user_id):
        _remove_member(cx, membership, allow_owner_handoff=True)


def _remove_member(
    cx: sqlite3.Connection, membership: Membership, allow_owner_handoff: bool
) -> None:
    org_id, user_id = membership.org_id, membership.user_id
    if repo.count_members(cx, org_id) == 1:
        repo.delete_membership(cx, org_id, user_id)
        repo.delete_org(cx, org_id)
        return
    if membership.role is Role.OWNER and repo.count_owners(cx, org_id) == 1:
        if not allow_owner_handoff:
            raise ForbiddenError(
                "sole owner cannot leave an organization that still has members"
            )
        successor = repo.earliest_member_except(cx, org_id, user_id)
        assert successor is not None
        repo.set_membership_role(cx, org_id, successor, Role.OWNER)
    repo.delete_membership(cx, org_id, user_id)


class OrgService:
    def __init__(self, db: Database):
        self.db = db

    def create_org(
        self, creator: UserAccount, name: str, description: str = ""
    ) -> Organization:
        name = validate_name(name, what="name", max_len=MAX_ORG_NAME_LEN)
        if len(description) > MAX_DESCRIPTION_LEN:
            raise ValidationError("description too long")
        org = Organization(
            id=uuid.uuid4().hex,
            name=name,
            description=description,
            creator_id=creator.id,
            created_at=now_utc(),
        )
        try:
            with self.db.transaction() as cx:
                repo.insert_org(cx, org)
                repo.insert_membership(
                    cx,
                    Membership(
                        org_id=org.id,
                        user_id=creator.id,
                        role=Role.OWNER,
                        joined_at=org.created_at,
                    ),
                )
        except UniquenessViolation:
            raise ConflictError(f"organization name '{name}' is taken") from None
        return org

    def get_org(self, org_id: str) -> Organization:
        with self.db.read() as cx:
            org = repo.get_org(cx, org_id)
        if org is None:
            raise NotFoundError("organization not found")
        return org

    def list_orgs(self, page: int, page_size: int) -> tuple[list[dict], int]:
        validate_page(page, page_size)
        with self.db.read() as cx:
            rows, total = repo.list_orgs(cx, page, page_size)
        return [
            {"org": org, "member_count": count} for org, count in rows
        ], total

    def join_org(self, user: UserAccount, org_id: str) -> Membership:
        membership = Membership(
            org_id=org_id, user_id=user.id, role=Role.MEMBER, joined_at=now_utc()
        )
        with self.db.transaction() as cx:
            if repo.get_org(cx, org_id) is None:
                raise NotFoundError("organization not found")
            if repo.get_membership(cx, org_id, user.id) is not None:
                raise ConflictError("already a member")
            repo.insert_membership(cx, membership)
        return membership

    def leave_org(self, user: UserAccount, org_id: str) -> None:
        with self.db.transaction() as cx:
            if repo.get_org(cx, org_id) is None:
                raise NotFoundError("organization not found")
            membership = repo.get_membership(cx, org_id, user.id)
            if membership is None:
                raise NotFoundError("not a member of this organization")
            _remove_member(cx, membership, allow_owner_handoff=False)

    def list_members(
        self, viewer: UserAccount, org_id: str, page: int, page_size: int
    ) -> tuple[list[dict], int]:
        validate_page(page, page_size)
        with self.db.read() as cx:
            if repo.get_org(cx, org_id) is None:
                raise NotFoundError("organization not found")
            if repo.get_membership(cx, org_id, viewer.id) is None:
                raise ForbiddenError("only members can view the roster")
            rows, total = repo.list_members(cx, org_id, page, page_size)
        return [
            {"username": username, "role": role, "joined_at": joined_at}
            for username, role, joined_at in rows
        ], total

    def is_member(self, user_id: str, org_id: str) -> bool:
        with self.db.read() as cx:
            return repo.get_membership(cx, org_id, user_id) is not None
