"""Exception hierarchy shared by all service modules.

Each class maps to exactly one HTTP status in the API layer; service code
raises these and never touches status codes directly.
"""

from __future__ import annotations


class DataDockError(Exception):
    """Base class for all expected application failures."""

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


class ValidationError(DataDockError):
    """Input violates a domain rule. Optional field-level detail map."""

    def __init__(self, message: str, details: dict[str, str] | None = None):
        super().__init__(message)
        self.details = details or {}


class UnauthorizedError(DataDockError):
    """Missing or unusable credentials. Deliberately cause-agnostic."""


class TokenExpiredError(UnauthorizedError):
    """A matching token exists but is past its expiry."""


class ForbiddenError(DataDockError):
    """Authenticated, but not allowed to perform this action."""


class NotFoundError(DataDockError):
    """Entity absent, or hidden from this viewer (indistinguishable)."""


class ConflictError(DataDockError):
    """State conflict: duplicate submission, name taken, write race."""


class UniquenessViolation(ConflictError):
    """A uniqueness constraint rejected a write."""


class ForeignKeyViolation(DataDockError):
    """A referenced entity does not exist."""


class TooLargeError(DataDockError):
    """Payload exceeds the configured maximum file size."""


class MigrationError(DataDockError):
    """Schema migration could not be applied; store left at the last
    fully-applied version."""


class StoreUnavailable(DataDockError):
    """The store cannot currently serve requests (e.g. lock timeout)."""
