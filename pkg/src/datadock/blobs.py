"""Content-addressed, deduplicated blob storage.

Layout: ``<data-dir>/blobs/<first-2-hex>/<sha256-hex>`` with raw bytes and
no envelope. Writes stream into ``<data-dir>/tmp/<random>`` and are renamed
into place atomically, so a crash never leaves a partially-visible blob and
re-putting identical content is a no-op.

Garbage collection deletes blobs outside the caller-supplied referenced
set, except digests currently pinned by in-flight uploads.
"""

from __future__ import annotations

import hashlib
import os
import shutil
import threading
import uuid
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator

from .errors import NotFoundError, TooLargeError

CHUNK_SIZE = 1024 * 1024
DEFAULT_MAX_BYTES = 2 * 1024 * 1024 * 1024  # 2 GiB


@dataclass(frozen=True)
class BlobStat:
    digest: str
    size_bytes: int


class BlobStore:
    def __init__(self, data_dir: str | Path, max_bytes: int = DEFAULT_MAX_BYTES):
        self.root = Path(data_dir) / "blobs"
        self.tmp = Path(data_dir) / "tmp"
        self.max_bytes = max_bytes
        self.root.mkdir(parents=True, exist_ok=True)
        self.tmp.mkdir(parents=True, exist_ok=True)
        self._pins: dict[str, int] = {}
        self._pin_lock = threading.Lock()
        self._gc_lock = threading.Lock()

    def _blob_path(self, digest: str) -> Path:
        return self.root / digest[:2] / digest

    def put(self, stream: BinaryIO, scope: "PinScope | None" = None) -> BlobStat:
        """Store a stream under its SHA-256 digest; dedups existing content.

        With a ``scope``, the digest stays pinned against GC until the scope
        releases (use this when database rows referencing the blob are
        committed after the put). Without one, the blob is immediately
        GC-eligible until something references it.
        """
        tmp_path = self.tmp / uuid.uuid4().hex
        hasher = hashlib.sha256()
        size = 0
        try:
            with open(tmp_path, "wb") as out:
                while True:
                    chunk = stream.read(CHUNK_SIZE)
                    if not chunk:
                        break
                    size += len(chunk)
                    if size > self.max_bytes:
                        raise TooLargeError(
                            f"blob exceeds maximum size of {self.max_bytes} bytes"
                        )
                    hasher.update(chunk)
                    out.write(chunk)
                out.flush()
                os.fsync(out.fileno())
        except BaseException:
            tmp_path.unlink(missing_ok=True)
            raise
        digest = hasher.hexdigest()
        self._pin(digest)
        try:
            target = self._blob_path(digest)
            target.parent.mkdir(parents=True, exist_ok=True)
            os.replace(tmp_path, target)
        except BaseException:
            self._unpin(digest)
            tmp_path.unlink(missing_ok=True)
            raise
        if scope is not None:
            scope._adopt(digest)
        else:
            self._unpin(digest)
        return BlobStat(digest=digest, size_bytes=size)

    def put_bytes(self, data: bytes) -> BlobStat:
        import io

        return self.put(io.BytesIO(data))

    def exists(self, digest: str) -> bool:
        return self._blob_path(digest).is_file()

    def size(self, digest: str) -> int:
        path = self._blob_path(digest)
        if not path.is_file():
            raise NotFoundError(f"blob {digest} not found")
        return path.stat().st_size

    def open(self, digest: str) -> BinaryIO:
        path = self._blob_path(digest)
        try:
            return open(path, "rb")
        except FileNotFoundError:
            raise NotFoundError(f"blob {digest} not found") from None

    def stream(self, digest: str, chunk_size: int = CHUNK_SIZE) -> Iterator[bytes]:
        with self.open(digest) as f:
            while True:
                chunk = f.read(chunk_size)
                if not chunk:
                    break
                yield chunk

    def get_bytes(self, digest: str) -> bytes:
        with self.open(digest) as f:
            return f.read()

    # -- pinning ---------------------------------------------------------------

    def _pin(self, digest: str) -> None:
        with self._pin_lock:
            self._pins[digest] = self._pins.get(digest, 0) + 1

    def _unpin(self, digest: str) -> None:
        with self._pin_lock:
            count = self._pins.get(digest, 0) - 1
            if count <= 0:
                self._pins.pop(digest, None)
            else:
                self._pins[digest] = count

    @contextmanager
    def pin_scope(self) -> Iterator["PinScope"]:
        """Keep every digest put inside the scope safe from GC until the
        referencing rows are committed and the scope exits."""
        scope = PinScope(self)
        try:
            yield scope
        finally:
            scope.release()

    def pinned_digests(self) -> set[str]:
        with self._pin_lock:
            return set(self._pins)

    # -- maintenance -----------------------------------------------------------

    def iter_digests(self) -> Iterator[str]:
        for shard in sorted(self.root.iterdir()):
            if not shard.is_dir():
                continue
            for blob in sorted(shard.iterdir()):
                yield blob.name

    def collect_garbage(self, referenced: set[str]) -> int:
        """Delete blobs not in ``referenced``; pinned digests survive.
        Only one GC runs at a time; puts and gets proceed concurrently."""
        deleted = 0
        with self._gc_lock:
            for digest in list(self.iter_digests()):
                if digest in referenced:
                    continue
                with self._pin_lock:
                    if digest in self._pins:
                        continue
                self._blob_path(digest).unlink(missing_ok=True)
                deleted += 1
        return deleted

    def fsck(self) -> list[str]:
        """Digests whose stored bytes no longer hash to their key."""
        corrupt = []
        for digest in self.iter_digests():
            hasher = hashlib.sha256()
            with open(self._blob_path(digest), "rb") as f:
                while True:
                    chunk = f.read(CHUNK_SIZE)
                    if not chunk:
                        break
                    hasher.update(chunk)
            if hasher.hexdigest() != digest:
                corrupt.append(digest)
        return corrupt

    def clear_tmp(self) -> None:
        shutil.rmtree(self.tmp, ignore_errors=True)
        self.tmp.mkdir(parents=True, exist_ok=True)


class PinScope:
    """Holds pins for blobs written during one logical operation."""

    def __init__(self, store: BlobStore):
        self._store = store
        self._digests: list[str] = []
        self._released = False

    def put(self, stream: BinaryIO) -> BlobStat:
        return self._store.put(stream, scope=self)

    def _adopt(self, digest: str) -> None:
        self._digests.append(digest)

    def release(self) -> None:
        if self._released:
            return
        self._released = True
        for digest in self._digests:
            self._store._unpin(digest)
