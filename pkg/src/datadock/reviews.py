"""Dataset reviews: 1-5 star ratings with comments, one per (user, dataset).

The displayed average rounds half-up to one decimal; the raw mean is kept
exact (integer sum over count) for anything that computes with it.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from . import repo
from .catalog import can_view, validate_page
from .db import Database
from .errors import ConflictError, ForbiddenError, NotFoundError, UniquenessViolation
from .model import (
    Review,
    UserAccount,
    now_utc,
    validate_comment,
    validate_rating,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RatingSummary:
    count: int
    rating_sum: int

    @property
    def raw_mean(self) -> float | None:
        return self.rating_sum / self.count if self.count else None

    @property
    def average(self) -> Decimal | None:
        """Half-up display rounding to one fractional digit."""
        if self.count == 0:
            return None
        return (Decimal(self.rating_sum) / Decimal(self.count)).quantize(
            Decimal("0.1"), rounding=ROUND_HALF_UP
        )

    @classmethod
    def from_aggregate(cls, count: int, rating_sum: int) -> "RatingSummary":
        return cls(count=count, rating_sum=rating_sum)


class ReviewService:
    def __init__(self, db: Database, notifications=None, allow_anonymous_public=False):
        self.db = db
        self.notifications = notifications
        self.allow_anonymous_public = allow_anonymous_public

    def submit_review(
        self, author: UserAccount, dataset_id: str, rating: int, comment: str = ""
    ) -> Review:
        validate_rating(rating)
        validate_comment(comment)
        now = now_utc()
        review = Review(
            id=uuid.uuid4().hex,
            dataset_id=dataset_id,
            author_id=author.id,
            rating=rating,
            comment=comment,
            created_at=now,
            updated_at=now,
        )
        try:
            with self.db.transaction() as cx:
                dataset = repo.get_dataset(cx, dataset_id)
                if dataset is None or not can_view(
                    cx, author, dataset, self.allow_anonymous_public
                ):
                    raise NotFoundError("dataset not found")
                if dataset.owner_id == author.id:
                    raise ForbiddenError("you cannot review your own dataset")
                repo.insert_review(cx, review)
        except UniquenessViolation:
            raise ConflictError("you have already reviewed this dataset") from None
        if self.notifications is not None:
            try:
                self.notifications.emit_review_received(review, dataset.owner_id)
            except Exception:
                logger.exception("review notification failed for %s", review.id)
        return review

    def update_review(
        self,
        caller: UserAccount,
        review_id: str,
        rating: int | None = None,
        comment: str | None = None,
    ) -> Review:
        with self.db.transaction() as cx:
            review = repo.get_review(cx, review_id)
            if review is None:
                raise NotFoundError("review not found")
            if review.author_id != caller.id:
                raise ForbiddenError("only the author can update a review")
            if rating is not None:
                review.rating = validate_rating(rating)
            if comment is not None:
                review.comment = validate_comment(comment)
            review.updated_at = now_utc()
            repo.update_review_fields(
                cx,
                review_id,
                rating=review.rating,
                comment=review.comment,
                updated_at=repo.to_micros(review.updated_at),
            )
        return review

    def delete_review(self, caller: UserAccount, review_id: str) -> None:
        with self.db.transaction() as cx:
            review = repo.get_review(cx, review_id)
            if review is None:
                raise NotFoundError("review not found")
            if review.author_id != caller.id and not caller.is_admin:
                raise ForbiddenError("only the author or an admin can delete a review")
            repo.delete_review(cx, review_id)

    def list_reviews(
        self, viewer: UserAccount | None, dataset_id: str, page: int, page_size: int
    ) -> tuple[list[tuple[Review, str]], int]:
        validate_page(page, page_size)
        with self.db.read() as cx:
            dataset = repo.get_dataset(cx, dataset_id)
            if dataset is None or not can_view(
                cx, viewer, dataset, self.allow_anonymous_public
            ):
                raise NotFoundError("dataset not found")
            return repo.list_reviews(cx, dataset_id, page, page_size)

    def rating_summary(self, dataset_id: str) -> RatingSummary:
        with self.db.read() as cx:
            if not cx.execute(
                "SELECT 1 FROM datasets WHERE id = ?", (dataset_id,)
            ).fetchone():
                raise NotFoundError("dataset not found")
            count, rating_sum = repo.rating_aggregate(cx, dataset_id)
        return RatingSummary.from_aggregate(count, rating_sum)
