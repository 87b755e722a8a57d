"""Dataset lifecycle: create, read, update, delete, search, download.

Visibility is enforced here and nowhere else. Unviewable datasets are
reported as NotFound rather than Forbidden so their existence never leaks.
"""

from __future__ import annotations

import logging
import re
import sqlite3
import tempfile
import uuid
import zipfile
from dataclasses import dataclass, field
from datetime import datetime
from typing import BinaryIO

from . import repo
from .blobs import BlobStore
from .db import Database
from .errors import ForbiddenError, NotFoundError, ValidationError
from .model import (
    Dataset,
    FileEntry,
    UserAccount,
    Visibility,
    now_utc,
    normalize_tag,
    validate_name,
    validate_path,
    MAX_DESCRIPTION_LEN,
)

logger = logging.getLogger(__name__)

_EXTENSION_RE = re.compile(r"^[a-z0-9]+$")
MAX_PAGE_SIZE = 100


def validate_page(page: int, page_size: int) -> tuple[int, int]:
    if page < 1:
        raise ValidationError("page must be >= 1", details={"page": str(page)})
    if not 1 <= page_size <= MAX_PAGE_SIZE:
        raise ValidationError(
            f"page_size must be between 1 and {MAX_PAGE_SIZE}",
            details={"page_size": str(page_size)},
        )
    return page, page_size


@dataclass
class DatasetDraft:
    """Client-supplied dataset, validated before anything is stored.

    ``files`` holds (relative path, byte stream, content type) triples.
    """

    name: str
    description: str = ""
    visibility: Visibility = Visibility.PRIVATE
    org_ids: frozenset[str] = frozenset()
    tags: frozenset[str] = frozenset()
    files: list[tuple[str, BinaryIO, str]] = field(default_factory=list)

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
                "org visibility requires at least one organization;"
                " other visibilities require none",
                details={"org_ids": "must be non-empty iff visibility is 'org'"},
            )
        self.tags = frozenset(normalize_tag(t) for t in self.tags)
        if not self.files:
            raise ValidationError(
                "dataset must contain at least one file", details={"file": "required"}
            )
        paths = [validate_path(path) for path, _, _ in self.files]
        if len(paths) != len(set(paths)):
            raise ValidationError("file paths must be pairwise distinct")


@dataclass
class SearchQuery:
    name_substring: str | None = None
    file_type: str | None = None
    tags: tuple[str, ...] = ()
    author: str | None = None
    page: int = 1
    page_size: int = 20

    def __post_init__(self):
        validate_page(self.page, self.page_size)
        if self.name_substring == "":
            self.name_substring = None
        if self.file_type is not None:
            ext = self.file_type.lstrip(".").lower()
            if not _EXTENSION_RE.match(ext):
                raise ValidationError(
                    "file_type must be a bare extension like 'csv'",
                    details={"file_type": self.file_type},
                )
            self.file_type = ext
        self.tags = tuple(sorted({normalize_tag(t) for t in self.tags}))
        if self.author is not None:
            self.author = self.author.strip().lower() or None


@dataclass
class DatasetSummary:
    id: str
    name: str
    owner_username: str
    tags: list[str]
    visibility: Visibility
    file_count: int
    total_size_bytes: int
    review_count: int
    rating_sum: int
    created_at: datetime

    @property
    def average_rating(self) -> float | None:
        if self.review_count == 0:
            return None
        return self.rating_sum / self.review_count


def can_view(
    cx: sqlite3.Connection,
    viewer: UserAccount | None,
    dataset: Dataset,
    allow_anonymous_public: bool = False,
) -> bool:
    """The single access rule: Public needs an authenticated viewer,
    OrgOnly needs the owner or a member of a listed org, Private the owner.
    """
    if viewer is None:
        return allow_anonymous_public and dataset.visibility is Visibility.PUBLIC
    if dataset.visibility is Visibility.PUBLIC:
        return True
    if viewer.id == dataset.owner_id:
        return True
    if dataset.visibility is Visibility.ORG:
        return repo.user_in_any_org(cx, viewer.id, dataset.org_ids)
    return False


class CatalogService:
    def __init__(
        self,
        db: Database,
        blobs: BlobStore,
        notifications=None,
        allow_anonymous_public: bool = False,
    ):
        self.db = db
        self.blobs = blobs
        self.notifications = notifications
        self.allow_anonymous_public = allow_anonymous_public

    # -- write path ---------------------------------------------------------------

    def create_dataset(self, owner: UserAccount, draft: DatasetDraft) -> Dataset:
        with self.db.read() as cx:
            self._check_org_membership(cx, owner, draft.org_ids)
        now = now_utc()
        with self.blobs.pin_scope() as pins:
            entries = []
            for path, stream, content_type in draft.files:
                stat = pins.put(stream)
                entries.append(
                    FileEntry(
                        path=path,
                        blob_digest=stat.digest,
                        size_bytes=stat.size_bytes,
                        content_type=content_type or "application/octet-stream",
                    )
                )
            dataset = Dataset(
                id=uuid.uuid4().hex,
                owner_id=owner.id,
                name=draft.name,
                description=draft.description,
                visibility=draft.visibility,
                org_ids=draft.org_ids,
                tags=draft.tags,
                created_at=now,
                updated_at=now,
                entries=entries,
            )
            with self.db.transaction() as cx:
                repo.insert_dataset(cx, dataset)
        if self.notifications is not None and dataset.org_ids:
            # after the commit: a lost notification is tolerable, a phantom
            # one (for an upload that rolled back) is not
            try:
                self.notifications.emit_dataset_in_org(dataset)
            except Exception:
                logger.exception("dataset fan-out failed for %s", dataset.id)
        return dataset

    def update_metadata(
        self,
        caller: UserAccount,
        dataset_id: str,
        *,
        name: str | None = None,
        description: str | None = None,
        tags=None,
        visibility: Visibility | str | None = None,
        org_ids=None,
    ) -> Dataset:
        with self.db.transaction() as cx:
            dataset = self._viewable_dataset(cx, caller, dataset_id)
            if dataset.owner_id != caller.id:
                raise ForbiddenError("only the owner can update a dataset")
            if name is not None:
                dataset.name = validate_name(name)
            if description is not None:
                if len(description) > MAX_DESCRIPTION_LEN:
                    raise ValidationError("description too long")
                dataset.description = description
            if tags is not None:
                dataset.tags = frozenset(normalize_tag(t) for t in tags)
            if visibility is not None:
                dataset.visibility = Visibility(visibility)
            if org_ids is not None:
                dataset.org_ids = frozenset(org_ids)
            if (dataset.visibility is Visibility.ORG) != bool(dataset.org_ids):
                raise ValidationError(
                    "org visibility requires at least one organization;"
                    " other visibilities require none",
                    details={"org_ids": "must be non-empty iff visibility is 'org'"},
                )
            self._check_org_membership(cx, caller, dataset.org_ids)
            dataset.updated_at = now_utc()
            repo.update_dataset(cx, dataset)
            return repo.get_dataset(cx, dataset_id)

    def delete_dataset(self, caller: UserAccount, dataset_id: str) -> None:
        with self.db.transaction() as cx:
            dataset = repo.get_dataset(cx, dataset_id)
            if dataset is None:
                raise NotFoundError("dataset not found")
            if not caller.is_admin:
                if not can_view(cx, caller, dataset, self.allow_anonymous_public):
                    raise NotFoundError("dataset not found")
                if dataset.owner_id != caller.id:
                    raise ForbiddenError("only the owner can delete a dataset")
            repo.delete_dataset(cx, dataset_id)

    # -- read path ------------------------------------------------------------------

    def get_dataset(
        self, viewer: UserAccount | None, dataset_id: str
    ) -> tuple[Dataset, UserAccount]:
        with self.db.read() as cx:
            dataset = self._viewable_dataset(cx, viewer, dataset_id)
            owner = repo.get_user(cx, dataset.owner_id)
        assert owner is not None
        return dataset, owner

    def search(
        self, viewer: UserAccount | None, query: SearchQuery
    ) -> tuple[list[DatasetSummary], int]:
        with self.db.read() as cx:
            rows, total = repo.search_datasets(
                cx,
                viewer_id=viewer.id if viewer else None,
                anon_public=self.allow_anonymous_public,
                name_substring=query.name_substring,
                file_type=query.file_type,
                tags=query.tags,
                author=query.author,
                page=query.page,
                page_size=query.page_size,
            )
        return [DatasetSummary(**row) for row in rows], total

    def list_org_datasets(
        self, viewer: UserAccount, org_id: str, page: int, page_size: int
    ) -> tuple[list[DatasetSummary], int]:
        validate_page(page, page_size)
        with self.db.read() as cx:
            if repo.get_org(cx, org_id) is None:
                raise NotFoundError("organization not found")
            if repo.get_membership(cx, org_id, viewer.id) is None:
                raise ForbiddenError("only members can list an organization's datasets")
            rows, total = repo.search_datasets(
                cx, viewer_id=viewer.id, org_id=org_id, page=page, page_size=page_size
            )
        return [DatasetSummary(**row) for row in rows], total

    def download_file(
        self, viewer: UserAccount | None, dataset_id: str, path: str
    ) -> tuple[FileEntry, BinaryIO]:
        with self.db.read() as cx:
            dataset = self._viewable_dataset(cx, viewer, dataset_id)
        for entry in dataset.entries:
            if entry.path == path:
                return entry, self.blobs.open(entry.blob_digest)
        raise NotFoundError("file not found in dataset")

    def download_archive(
        self, viewer: UserAccount | None, dataset_id: str
    ) -> tuple[Dataset, BinaryIO]:
        """ZIP (deflate) of the dataset tree, spooled to a temp file so
        large archives never sit fully in memory."""
        with self.db.read() as cx:
            dataset = self._viewable_dataset(cx, viewer, dataset_id)
        spool = tempfile.SpooledTemporaryFile(max_size=32 * 1024 * 1024)
        with zipfile.ZipFile(spool, "w", compression=zipfile.ZIP_DEFLATED) as archive:
            for entry in dataset.entries:
                info = zipfile.ZipInfo(entry.path)
                info.compress_type = zipfile.ZIP_DEFLATED
                with self.blobs.open(entry.blob_digest) as blob, archive.open(
                    info, "w"
                ) as dest:
                    while True:
                        chunk = blob.read(1024 * 1024)
                        if not chunk:
                            break
                        dest.write(chunk)
        spool.seek(0)
        return dataset, spool

    def rating_summary_for(self, dataset_id: str) -> tuple[int, int]:
        with self.db.read() as cx:
            return repo.rating_aggregate(cx, dataset_id)

    def gc_blobs(self) -> int:
        """Delete blobs no FileEntry references (the referenced set is read
        inside one snapshot; in-flight uploads survive via the pin set)."""
        with self.db.read() as cx:
            referenced = repo.referenced_blob_digests(cx)
        return self.blobs.collect_garbage(referenced)

    # -- helpers ----------------------------------------------------------------------

    def _viewable_dataset(
        self, cx: sqlite3.Connection, viewer: UserAccount | None, dataset_id: str
    ) -> Dataset:
        dataset = repo.get_dataset(cx, dataset_id)
        if dataset is None or not can_view(
            cx, viewer, dataset, self.allow_anonymous_public
        ):
            raise NotFoundError("dataset not found")
        return dataset

    @staticmethod
    def _check_org_membership(cx: sqlite3.Connection, user: UserAccount, org_ids) -> None:
        for org_id in org_ids:
            if repo.get_membership(cx, org_id, user.id) is None:
                raise ForbiddenError(
                    "datasets can only be shared with organizations you belong to"
                )
