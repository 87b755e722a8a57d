"""Account lifecycle and bearer-token authentication.

Token secrets are 32 bytes of CSPRNG output, hex-encoded, handed to the
client exactly once; only their SHA-512 digest is stored. Passwords use
salted scrypt with a tunable cost so verification stays deliberately slow.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Callable

from . import repo
from .db import Database
from .errors import (
    ConflictError,
    NotFoundError,
    TokenExpiredError,
    UnauthorizedError,
    UniquenessViolation,
    ValidationError,
)
from .model import (
    MAX_DISPLAY_NAME_LEN,
    TOMBSTONE_DISPLAY,
    UserAccount,
    now_utc,
    validate_email,
    validate_username,
)
from .orgs import remove_user_from_all_orgs

MIN_PASSWORD_LEN = 10
TOKEN_SECRET_BYTES = 32
DEFAULT_SCRYPT_COST = 2**14  # ~tens of ms per verification
_SCRYPT_R = 8
_SCRYPT_P = 1
#: password_digest value for accounts that can never log in again
UNUSABLE_DIGEST = "!"


def hash_token(secret: str | bytes) -> str:
    """SHA-512 of the secret, lowercase hex (128 chars)."""
    data = secret.encode("utf-8") if isinstance(secret, str) else secret
    return hashlib.sha512(data).hexdigest()


def generate_token_secret() -> str:
    return secrets.token_hex(TOKEN_SECRET_BYTES)


def hash_password(password: str, cost: int = DEFAULT_SCRYPT_COST) -> str:
    salt = secrets.token_bytes(16)
    key = hashlib.scrypt(
        password.encode("utf-8"), salt=salt, n=cost, r=_SCRYPT_R, p=_SCRYPT_P, dklen=64
    )
    return f"scrypt${cost}${_SCRYPT_R}${_SCRYPT_P}${salt.hex()}${key.hex()}"


def verify_password(password: str, digest: str) -> bool:
    if digest == UNUSABLE_DIGEST:
        return False
    try:
        scheme, n, r, p, salt_hex, key_hex = digest.split("$")
        if scheme != "scrypt":
            return False
        key = hashlib.scrypt(
            password.encode("utf-8"),
            salt=bytes.fromhex(salt_hex),
            n=int(n),
            r=int(r),
            p=int(p),
            dklen=len(key_hex) // 2,
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(key.hex(), key_hex)


def validate_password(password: str) -> str:
    if len(password) < MIN_PASSWORD_LEN:
        raise ValidationError(
            f"password must be at least {MIN_PASSWORD_LEN} characters",
            details={"password": f"minimum {MIN_PASSWORD_LEN} characters"},
        )
    return password


@dataclass(frozen=True)
class Principal:
    """An authenticated caller: the account plus the token that proved it."""

    user: UserAccount
    token_id: str


class AuthService:
    def __init__(
        self,
        db: Database,
        token_ttl: timedelta = timedelta(hours=72),
        password_cost: int = DEFAULT_SCRYPT_COST,
        clock: Callable[[], datetime] = now_utc,
    ):
        self.db = db
        self.token_ttl = token_ttl
        self.password_cost = password_cost
        self.clock = clock

    # -- accounts ---------------------------------------------------------------

    def register(
        self, username: str, email: str, password: str, display_name: str = ""
    ) -> UserAccount:
        username = validate_username(username)
        email = validate_email(email)
        validate_password(password)
        display_name = display_name.strip() or username
        if len(display_name) > MAX_DISPLAY_NAME_LEN:
            raise ValidationError(
                f"display_name longer than {MAX_DISPLAY_NAME_LEN} characters",
                details={"display_name": "too long"},
            )
        user = UserAccount(
            id=uuid.uuid4().hex,
            username=username,
            email=email,
            password_digest=hash_password(password, self.password_cost),
            display_name=display_name,
            is_admin=False,
            created_at=self.clock(),
        )
        try:
            with self.db.transaction() as cx:
                repo.insert_user(cx, user)
        except UniquenessViolation:
            raise ConflictError(f"username '{username}' is taken") from None
        return user

    def create_admin(self, username: str, email: str, password: str) -> UserAccount:
        user = self.register(username, email, password)
        with self.db.transaction() as cx:
            repo.update_user_fields(cx, user.id, is_admin=1)
        return replace(user, is_admin=True)

    # -- tokens -----------------------------------------------------------------

    def login(self, username: str, password: str) -> tuple[str, datetime, UserAccount]:
        """Verify credentials and mint a fresh token.

        Returns (plaintext secret, expiry, account). The failure mode is a
        single UnauthorizedError regardless of cause, so callers cannot
        probe which usernames exist or which accounts are deactivated.
        """
        try:
            username = validate_username(username)
        except ValidationError:
            raise UnauthorizedError("invalid credentials") from None
        with self.db.read() as cx:
            user = repo.get_user_by_username(cx, username)
        if user is None:
            # burn comparable time so missing accounts are not detectable
            verify_password(password, hash_password("x" * 12, self.password_cost))
            raise UnauthorizedError("invalid credentials")
        if not verify_password(password, user.password_digest) or not user.is_active:
            raise UnauthorizedError("invalid credentials")
        secret, expires_at = self.issue_token(user.id)
        return secret, expires_at, user

    def issue_token(self, user_id: str) -> tuple[str, datetime]:
        secret = generate_token_secret()
        created = self.clock()
        expires = created + self.token_ttl
        with self.db.transaction() as cx:
            repo.insert_token(cx, uuid.uuid4().hex, user_id, hash_token(secret), created, expires)
        return secret, expires

    def authenticate(self, presented_secret: str) -> Principal:
        digest = hash_token(presented_secret)
        with self.db.read() as cx:
            row = repo.get_token_by_digest(cx, digest)
            if row is None:
                raise UnauthorizedError("unknown token")
            if repo.to_micros(self.clock()) >= row["expires_at"]:
                raise TokenExpiredError("token expired")
            user = repo.get_user(cx, row["user_id"])
        if user is None or not user.is_active:
            raise UnauthorizedError("unknown token")
        return Principal(user=user, token_id=row["token_id"])

    def logout(self, principal: Principal) -> None:
        with self.db.transaction() as cx:
            if not repo.delete_token(cx, principal.token_id):
                raise UnauthorizedError("token already revoked")

    # -- profile ----------------------------------------------------------------

    def update_profile(
        self,
        principal: Principal,
        *,
        display_name: str | None = None,
        email: str | None = None,
        password: str | None = None,
    ) -> UserAccount:
        fields: dict = {}
        if display_name is not None:
            display_name = display_name.strip()
            if not display_name or len(display_name) > MAX_DISPLAY_NAME_LEN:
                raise ValidationError(
                    "display_name must be 1-200 characters",
                    details={"display_name": "1-200 characters"},
                )
            fields["display_name"] = display_name
        if email is not None:
            fields["email"] = validate_email(email)
        if password is not None:
            validate_password(password)
            fields["password_digest"] = hash_password(password, self.password_cost)
        with self.db.transaction() as cx:
            if fields:
                repo.update_user_fields(cx, principal.user.id, **fields)
            if password is not None:
                # changing the password invalidates every other session
                repo.delete_user_tokens(
                    cx, principal.user.id, keep_token_id=principal.token_id
                )
            user = repo.get_user(cx, principal.user.id)
        assert user is not None
        return user

    def delete_account(self, principal: Principal) -> None:
        """Remove the account and everything it owns, atomically.

        The username is retired (the tombstoned row keeps holding it), owned
        datasets and authored reviews disappear, and conversations survive
        with the sender displayed as a tombstone.
        """
        user_id = principal.user.id
        with self.db.transaction() as cx:
            for dataset_id in repo.owned_dataset_ids(cx, user_id):
                repo.delete_dataset(cx, dataset_id)
            cx.execute("DELETE FROM reviews WHERE author_id = ?", (user_id,))
            cx.execute("DELETE FROM notifications WHERE recipient_id = ?", (user_id,))
            remove_user_from_all_orgs(cx, user_id)
            repo.delete_user_tokens(cx, user_id)
            repo.update_user_fields(
                cx,
                user_id,
                is_active=0,
                display_name=TOMBSTONE_DISPLAY,
                email="",
                password_digest=UNUSABLE_DIGEST,
            )

    def get_user(self, user_id: str) -> UserAccount:
        with self.db.read() as cx:
            user = repo.get_user(cx, user_id)
        if user is None:
            raise NotFoundError("user not found")
        return user
