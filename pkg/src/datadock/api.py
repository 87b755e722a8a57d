"""HTTP/JSON surface: routing, token auth middleware, request/response
codecs, pagination envelopes, and the error model.

Every expected failure maps to one (status, code) pair:

    400 validation_error   401 unauthorized / token_expired
    403 forbidden          404 not_found
    405 method_not_allowed 409 conflict
    413 too_large          500 internal
"""

from __future__ import annotations

import json
import logging
import re
import time

from fastapi import Depends, FastAPI, Query, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response, StreamingResponse
from pydantic import BaseModel
from starlette.datastructures import UploadFile
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import repo
from .auth import Principal
from .backend import Backend
from .catalog import DatasetDraft, SearchQuery
from .errors import (
    ConflictError,
    DataDockError,
    ForbiddenError,
    ForeignKeyViolation,
    NotFoundError,
    TokenExpiredError,
    TooLargeError,
    UnauthorizedError,
    ValidationError,
)
from .model import Visibility
from .reviews import RatingSummary
from .wire import (
    conversation_to_wire,
    dataset_to_wire,
    format_timestamp,
    message_to_wire,
    notification_to_wire,
    org_to_wire,
    page_envelope,
    review_to_wire,
    summary_to_wire,
    user_to_wire,
)

access_log = logging.getLogger("datadock.access")

#: the complete route table; tests assert the served surface equals this.
ROUTES: tuple[tuple[str, str], ...] = (
    ("POST", "/api/auth/register"),
    ("POST", "/api/auth/login"),
    ("POST", "/api/auth/logout"),
    ("GET", "/api/users/me"),
    ("PATCH", "/api/users/me"),
    ("DELETE", "/api/users/me"),
    ("POST", "/api/datasets"),
    ("GET", "/api/datasets"),
    ("GET", "/api/datasets/{dataset_id}"),
    ("PATCH", "/api/datasets/{dataset_id}"),
    ("DELETE", "/api/datasets/{dataset_id}"),
    ("GET", "/api/datasets/{dataset_id}/archive"),
    ("GET", "/api/datasets/{dataset_id}/files/{path}"),
    ("POST", "/api/datasets/{dataset_id}/reviews"),
    ("GET", "/api/datasets/{dataset_id}/reviews"),
    ("PATCH", "/api/reviews/{review_id}"),
    ("DELETE", "/api/reviews/{review_id}"),
    ("POST", "/api/orgs"),
    ("GET", "/api/orgs"),
    ("POST", "/api/orgs/{org_id}/join"),
    ("POST", "/api/orgs/{org_id}/leave"),
    ("GET", "/api/orgs/{org_id}/members"),
    ("GET", "/api/orgs/{org_id}/datasets"),
    ("POST", "/api/conversations"),
    ("GET", "/api/conversations"),
    ("GET", "/api/conversations/{conversation_id}/messages"),
    ("POST", "/api/conversations/{conversation_id}/messages"),
    ("GET", "/api/notifications"),
    ("POST", "/api/notifications/mark-read"),
    ("GET", "/api/health"),
)

# checked in order, so subclasses come before their parents
_ERROR_STATUS = (
    (TokenExpiredError, 401, "token_expired"),
    (UnauthorizedError, 401, "unauthorized"),
    (ValidationError, 400, "validation_error"),
    (ForbiddenError, 403, "forbidden"),
    (NotFoundError, 404, "not_found"),
    (TooLargeError, 413, "too_large"),
    (ForeignKeyViolation, 409, "conflict"),
    (ConflictError, 409, "conflict"),
)

_HTTP_CODE_NAMES = {
    400: "validation_error",
    401: "unauthorized",
    403: "forbidden",
    404: "not_found",
    405: "method_not_allowed",
    409: "conflict",
    413: "too_large",
}


def _error_response(
    status: int, code: str, message: str, details=None, headers=None
) -> JSONResponse:
    body = {"code": code, "message": message}
    if details:
        body["details"] = details
    return JSONResponse(body, status_code=status, headers=headers)


# -- request bodies ------------------------------------------------------------


class RegisterBody(BaseModel):
    username: str
    email: str
    password: str
    display_name: str = ""


class LoginBody(BaseModel):
    username: str
    password: str


class ProfilePatch(BaseModel):
    display_name: str | None = None
    email: str | None = None
    password: str | None = None


class DatasetPatch(BaseModel):
    name: str | None = None
    description: str | None = None
    tags: list[str] | None = None
    visibility: str | None = None
    org_ids: list[str] | None = None


class ReviewBody(BaseModel):
    rating: int
    comment: str = ""


class ReviewPatch(BaseModel):
    rating: int | None = None
    comment: str | None = None


class OrgBody(BaseModel):
    name: str
    description: str = ""


class ConversationBody(BaseModel):
    user_id: str


class MessageBody(BaseModel):
    body: str


class MarkReadBody(BaseModel):
    notification_ids: list[str]


def _parse_visibility(raw: str) -> Visibility:
    try:
        return Visibility(raw)
    except ValueError:
        raise ValidationError(
            "visibility must be one of: public, org, private",
            details={"visibility": str(raw)},
        ) from None


def create_app(backend: Backend) -> FastAPI:
    app = FastAPI(title="datadock", docs_url=None, redoc_url=None, openapi_url=None)

    # -- auth dependencies -----------------------------------------------------

    def _authenticate(request: Request) -> Principal:
        header = request.headers.get("authorization")
        if not header:
            raise UnauthorizedError("missing Authorization header")
        scheme, _, secret = header.partition(" ")
        secret = secret.strip()
        if scheme.lower() != "token" or not secret:
            raise UnauthorizedError("expected 'Authorization: Token <secret>'")
        return backend.auth.authenticate(secret)

    def require_auth(request: Request) -> Principal:
        return _authenticate(request)

    def optional_auth(request: Request) -> Principal | None:
        # anonymous read access only when explicitly configured
        if "authorization" not in request.headers and backend.config.allow_anon_read:
            return None
        return _authenticate(request)

    # -- middleware --------------------------------------------------------------

    @app.middleware("http")
    async def log_requests(request: Request, call_next):
        start = time.perf_counter()
        response = await call_next(request)
        elapsed_ms = (time.perf_counter() - start) * 1000
        access_log.info(
            "%s %s %d %.1fms",
            request.method,
            request.url.path,
            response.status_code,
            elapsed_ms,
        )
        return response

    if backend.config.cors_origin:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=[backend.config.cors_origin],
            allow_methods=["*"],
            allow_headers=["Authorization", "Content-Type"],
        )

    # -- error model ---------------------------------------------------------------

    @app.exception_handler(DataDockError)
    async def handle_domain_error(request: Request, exc: DataDockError):
        for klass, status, code in _ERROR_STATUS:
            if isinstance(exc, klass):
                details = getattr(exc, "details", None)
                return _error_response(status, code, exc.message or code, details)
        access_log.error("unmapped domain error: %r", exc)
        return _error_response(500, "internal", "internal error")

    @app.exception_handler(RequestValidationError)
    async def handle_request_validation(request: Request, exc: RequestValidationError):
        details = {}
        for err in exc.errors():
            loc = ".".join(str(part) for part in err.get("loc", ()) if part != "body")
            details[loc or "body"] = err.get("msg", "invalid")
        return _error_response(400, "validation_error", "invalid request", details)

    @app.exception_handler(StarletteHTTPException)
    async def handle_http_exception(request: Request, exc: StarletteHTTPException):
        code = _HTTP_CODE_NAMES.get(exc.status_code, "internal")
        message = exc.detail if isinstance(exc.detail, str) else code
        return _error_response(
            exc.status_code, code, message, headers=getattr(exc, "headers", None)
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(request: Request, exc: Exception):
        access_log.exception("unhandled error on %s %s", request.method, request.url.path)
        return _error_response(500, "internal", "internal error")

    # -- health ---------------------------------------------------------------------

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    # -- auth -------------------------------------------------------------------------

    @app.post("/api/auth/register", status_code=201)
    def register(body: RegisterBody):
        user = backend.auth.register(
            body.username, body.email, body.password, body.display_name
        )
        return user_to_wire(user)

    @app.post("/api/auth/login")
    def login(body: LoginBody):
        secret, expires_at, user = backend.auth.login(body.username, body.password)
        return {
            "token": secret,
            "expires_at": format_timestamp(expires_at),
            "user": user_to_wire(user),
        }

    @app.post("/api/auth/logout", status_code=204)
    def logout(principal: Principal = Depends(require_auth)):
        backend.auth.logout(principal)
        return Response(status_code=204)

    # -- current user -------------------------------------------------------------------

    @app.get("/api/users/me")
    def get_me(principal: Principal = Depends(require_auth)):
        return user_to_wire(principal.user)

    @app.patch("/api/users/me")
    def patch_me(body: ProfilePatch, principal: Principal = Depends(require_auth)):
        user = backend.auth.update_profile(
            principal,
            display_name=body.display_name,
            email=body.email,
            password=body.password,
        )
        return user_to_wire(user)

    @app.delete("/api/users/me", status_code=204)
    def delete_me(principal: Principal = Depends(require_auth)):
        backend.auth.delete_account(principal)
        return Response(status_code=204)

    # -- datasets --------------------------------------------------------------------------

    @app.post("/api/datasets", status_code=201)
    async def create_dataset(request: Request, principal: Principal = Depends(require_auth)):
        content_type = request.headers.get("content-type", "")
        if not content_type.startswith("multipart/form-data"):
            raise ValidationError("expected a multipart/form-data upload")
        form = await request.form()
        draft = await _decode_dataset_form(form)
        dataset = await run_in_threadpool(
            backend.catalog.create_dataset, principal.user, draft
        )
        return dataset_to_wire(
            dataset, principal.user, RatingSummary(count=0, rating_sum=0)
        )

    @app.get("/api/datasets")
    def search_datasets(
        name: str | None = None,
        file_type: str | None = None,
        tag: list[str] = Query(default=[]),
        author: str | None = None,
        page: int = 1,
        page_size: int = 20,
        principal: Principal | None = Depends(optional_auth),
    ):
        query = SearchQuery(
            name_substring=name,
            file_type=file_type,
            tags=tuple(tag),
            author=author,
            page=page,
            page_size=page_size,
        )
        viewer = principal.user if principal else None
        summaries, total = backend.catalog.search(viewer, query)
        return page_envelope(
            [summary_to_wire(s) for s in summaries], page, page_size, total
        )

    @app.get("/api/datasets/{dataset_id}")
    def get_dataset(
        dataset_id: str, principal: Principal | None = Depends(optional_auth)
    ):
        viewer = principal.user if principal else None
        dataset, owner = backend.catalog.get_dataset(viewer, dataset_id)
        rating = backend.reviews.rating_summary(dataset_id)
        return dataset_to_wire(dataset, owner, rating)

    @app.patch("/api/datasets/{dataset_id}")
    def patch_dataset(
        dataset_id: str,
        body: DatasetPatch,
        principal: Principal = Depends(require_auth),
    ):
        visibility = (
            _parse_visibility(body.visibility) if body.visibility is not None else None
        )
        dataset = backend.catalog.update_metadata(
            principal.user,
            dataset_id,
            name=body.name,
            description=body.description,
            tags=body.tags,
            visibility=visibility,
            org_ids=body.org_ids,
        )
        rating = backend.reviews.rating_summary(dataset_id)
        owner = backend.auth.get_user(dataset.owner_id)
        return dataset_to_wire(dataset, owner, rating)

    @app.delete("/api/datasets/{dataset_id}", status_code=204)
    def delete_dataset(dataset_id: str, principal: Principal = Depends(require_auth)):
        backend.catalog.delete_dataset(principal.user, dataset_id)
        return Response(status_code=204)

    @app.get("/api/datasets/{dataset_id}/archive")
    def download_archive(
        dataset_id: str, principal: Principal | None = Depends(optional_auth)
    ):
        viewer = principal.user if principal else None
        dataset, spool = backend.catalog.download_archive(viewer, dataset_id)
        filename = _safe_filename(dataset.name) + ".zip"
        return StreamingResponse(
            _stream_file(spool),
            media_type="application/zip",
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.get("/api/datasets/{dataset_id}/files/{path:path}")
    def download_file(
        dataset_id: str,
        path: str,
        principal: Principal | None = Depends(optional_auth),
    ):
        viewer = principal.user if principal else None
        entry, stream = backend.catalog.download_file(viewer, dataset_id, path)
        return StreamingResponse(
            _stream_file(stream),
            media_type=entry.content_type,
            headers={"Content-Length": str(entry.size_bytes)},
        )

    # -- reviews -----------------------------------------------------------------------------

    @app.post("/api/datasets/{dataset_id}/reviews", status_code=201)
    def submit_review(
        dataset_id: str, body: ReviewBody, principal: Principal = Depends(require_auth)
    ):
        review = backend.reviews.submit_review(
            principal.user, dataset_id, body.rating, body.comment
        )
        return review_to_wire(review, principal.user.username)

    @app.get("/api/datasets/{dataset_id}/reviews")
    def list_reviews(
        dataset_id: str,
        page: int = 1,
        page_size: int = 20,
        principal: Principal | None = Depends(optional_auth),
    ):
        viewer = principal.user if principal else None
        rows, total = backend.reviews.list_reviews(viewer, dataset_id, page, page_size)
        return page_envelope(
            [review_to_wire(r, username) for r, username in rows],
            page,
            page_size,
            total,
        )

    @app.patch("/api/reviews/{review_id}")
    def patch_review(
        review_id: str, body: ReviewPatch, principal: Principal = Depends(require_auth)
    ):
        review = backend.reviews.update_review(
            principal.user, review_id, rating=body.rating, comment=body.comment
        )
        return review_to_wire(review, principal.user.username)

    @app.delete("/api/reviews/{review_id}", status_code=204)
    def delete_review(review_id: str, principal: Principal = Depends(require_auth)):
        backend.reviews.delete_review(principal.user, review_id)
        return Response(status_code=204)

    # -- organizations -------------------------------------------------------------------------

    @app.post("/api/orgs", status_code=201)
    def create_org(body: OrgBody, principal: Principal = Depends(require_auth)):
        org = backend.orgs.create_org(principal.user, body.name, body.description)
        return org_to_wire(org, member_count=1)

    @app.get("/api/orgs")
    def list_orgs(
        page: int = 1,
        page_size: int = 20,
        principal: Principal = Depends(require_auth),
    ):
        rows, total = backend.orgs.list_orgs(page, page_size)
        return page_envelope(
            [org_to_wire(r["org"], r["member_count"]) for r in rows],
            page,
            page_size,
            total,
        )

    @app.post("/api/orgs/{org_id}/join", status_code=201)
    def join_org(org_id: str, principal: Principal = Depends(require_auth)):
        membership = backend.orgs.join_org(principal.user, org_id)
        return {
            "org_id": membership.org_id,
            "username": principal.user.username,
            "role": membership.role.value,
            "joined_at": format_timestamp(membership.joined_at),
        }

    @app.post("/api/orgs/{org_id}/leave", status_code=204)
    def leave_org(org_id: str, principal: Principal = Depends(require_auth)):
        backend.orgs.leave_org(principal.user, org_id)
        return Response(status_code=204)

    @app.get("/api/orgs/{org_id}/members")
    def list_members(
        org_id: str,
        page: int = 1,
        page_size: int = 20,
        principal: Principal = Depends(require_auth),
    ):
        rows, total = backend.orgs.list_members(principal.user, org_id, page, page_size)
        return page_envelope(
            [
                {
                    "username": r["username"],
                    "role": r["role"].value,
                    "joined_at": format_timestamp(r["joined_at"]),
                }
                for r in rows
            ],
            page,
            page_size,
            total,
        )

    @app.get("/api/orgs/{org_id}/datasets")
    def list_org_datasets(
        org_id: str,
        page: int = 1,
        page_size: int = 20,
        principal: Principal = Depends(require_auth),
    ):
        summaries, total = backend.catalog.list_org_datasets(
            principal.user, org_id, page, page_size
        )
        return page_envelope(
            [summary_to_wire(s) for s in summaries], page, page_size, total
        )

    # -- conversations ----------------------------------------------------------------------------

    @app.post("/api/conversations")
    def start_conversation(
        body: ConversationBody, principal: Principal = Depends(require_auth)
    ):
        conv = backend.messaging.start_conversation(principal.user, body.user_id)
        return _conversation_wire(backend, conv, principal.user.id)

    @app.get("/api/conversations")
    def list_conversations(
        page: int = 1,
        page_size: int = 20,
        principal: Principal = Depends(require_auth),
    ):
        rows, total = backend.messaging.list_conversations(
            principal.user, page, page_size
        )
        items = []
        for row in rows:
            conv = row["conversation"]
            counterpart_id = _other_participant(conv, principal.user.id)
            counterpart = _lookup_user(backend, counterpart_id)
            items.append(
                conversation_to_wire(
                    conv,
                    principal.user.id,
                    counterpart,
                    row["last_message"],
                    row["unread_count"],
                )
            )
        return page_envelope(items, page, page_size, total)

    @app.get("/api/conversations/{conversation_id}/messages")
    def list_messages(
        conversation_id: str,
        page: int = 1,
        page_size: int = 20,
        principal: Principal = Depends(require_auth),
    ):
        messages, total = backend.messaging.list_messages(
            principal.user, conversation_id, page, page_size
        )
        items = []
        for m in messages:
            items.append(message_to_wire(m, _lookup_user(backend, m.sender_id)))
        return page_envelope(items, page, page_size, total)

    @app.post("/api/conversations/{conversation_id}/messages", status_code=201)
    def send_message(
        conversation_id: str,
        body: MessageBody,
        principal: Principal = Depends(require_auth),
    ):
        message = backend.messaging.send_message(
            principal.user, conversation_id, body.body
        )
        return message_to_wire(message, principal.user)

    # -- notifications ------------------------------------------------------------------------------

    @app.get("/api/notifications")
    def list_notifications(
        unread: bool = False,
        page: int = 1,
        page_size: int = 20,
        principal: Principal = Depends(require_auth),
    ):
        items, total = backend.notifications.list_notifications(
            principal.user, unread, page, page_size
        )
        return page_envelope(
            [notification_to_wire(n) for n in items], page, page_size, total
        )

    @app.post("/api/notifications/mark-read")
    def mark_read(body: MarkReadBody, principal: Principal = Depends(require_auth)):
        updated = backend.notifications.mark_read(principal.user, body.notification_ids)
        return {"updated": updated}

    if backend.config.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount(
            "/", StaticFiles(directory=backend.config.static_dir, html=True), name="ui"
        )

    return app


# -- helpers -----------------------------------------------------------------------


def _stream_file(f, chunk_size: int = 1024 * 1024):
    try:
        while True:
            chunk = f.read(chunk_size)
            if not chunk:
                break
            yield chunk
    finally:
        f.close()


def _safe_filename(name: str) -> str:
    cleaned = re.sub(r'[\\/:"<>|?*\x00-\x1f]', "_", name).strip() or "dataset"
    return cleaned[:120]


def _other_participant(conv, user_id: str) -> str:
    a, b = conv.participants
    return b if a == user_id else a


def _lookup_user(backend: Backend, user_id: str):
    with backend.db.read() as cx:
        return repo.get_user(cx, user_id)


def _conversation_wire(backend: Backend, conv, viewer_id: str) -> dict:
    counterpart = _lookup_user(backend, _other_participant(conv, viewer_id))
    with backend.db.read() as cx:
        rows = cx.execute(
            "SELECT * FROM messages WHERE conversation_id = ?"
            " ORDER BY sent_at DESC LIMIT 1",
            (conv.id,),
        ).fetchone()
        last = repo._message_from_row(rows) if rows else None
        unread = repo.unread_count(cx, conv.id, viewer_id)
    return conversation_to_wire(conv, viewer_id, counterpart, last, unread)


async def _decode_dataset_form(form) -> DatasetDraft:
    metas = form.getlist("meta")
    if len(metas) != 1:
        raise ValidationError(
            "upload must contain exactly one 'meta' part",
            details={"meta": "exactly one part required"},
        )
    meta_raw = metas[0]
    if isinstance(meta_raw, UploadFile):
        meta_raw = (await meta_raw.read()).decode("utf-8", errors="replace")
    try:
        meta = json.loads(meta_raw)
    except (json.JSONDecodeError, TypeError):
        raise ValidationError(
            "'meta' part is not valid JSON", details={"meta": "invalid JSON"}
        ) from None
    if not isinstance(meta, dict):
        raise ValidationError(
            "'meta' part must be a JSON object", details={"meta": "expected object"}
        )
    name = meta.get("name")
    if not isinstance(name, str):
        raise ValidationError("meta.name must be a string", details={"name": "required"})
    description = meta.get("description", "")
    if not isinstance(description, str):
        raise ValidationError("meta.description must be a string")
    visibility = meta.get("visibility")
    if not isinstance(visibility, str):
        raise ValidationError(
            "meta.visibility is required", details={"visibility": "required"}
        )
    org_ids = meta.get("org_ids", [])
    tags = meta.get("tags", [])
    for field_name, value in (("org_ids", org_ids), ("tags", tags)):
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ValidationError(
                f"meta.{field_name} must be a list of strings",
                details={field_name: "list of strings"},
            )
    files = form.getlist("file")
    if not files:
        raise ValidationError(
            "upload must contain at least one 'file' part",
            details={"file": "required"},
        )
    triples = []
    for part in files:
        if not isinstance(part, UploadFile):
            raise ValidationError(
                "'file' parts must be file uploads with a filename",
                details={"file": "expected file part"},
            )
        triples.append(
            (
                part.filename or "",
                part.file,
                part.content_type or "application/octet-stream",
            )
        )
    return DatasetDraft(
        name=name,
        description=description,
        visibility=_parse_visibility(visibility),
        org_ids=frozenset(org_ids),
        tags=frozenset(tags),
        files=triples,
    )
