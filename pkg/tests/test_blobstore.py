from __future__ import annotations

import hashlib
import io
import threading
import tracemalloc

import pytest

from datadock.blobs import BlobStore
from datadock.errors import NotFoundError, TooLargeError

# FIPS 180-4 reference vectors
SHA256_EMPTY = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
SHA256_ABC = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


@pytest.fixture
def store(tmp_path) -> BlobStore:
    return BlobStore(tmp_path)


def test_empty_stream_digest_matches_reference(store):
    stat = store.put(io.BytesIO(b""))
    assert stat.digest == SHA256_EMPTY
    assert stat.size_bytes == 0


def test_known_vector_abc(store):
    stat = store.put(io.BytesIO(b"abc"))
    assert stat.digest == SHA256_ABC


def test_double_put_is_identity_with_one_copy(store, tmp_path):
    data = b"same content"
    first = store.put(io.BytesIO(data))
    second = store.put(io.BytesIO(data))
    assert first == second
    blob_files = list((tmp_path / "blobs").rglob("*"))
    assert len([p for p in blob_files if p.is_file()]) == 1


def test_oversized_stream_rejected_and_nothing_stored(tmp_path):
    store = BlobStore(tmp_path, max_bytes=10)
    with pytest.raises(TooLargeError):
        store.put(io.BytesIO(b"x" * 11))
    assert list(store.iter_digests()) == []
    assert list((tmp_path / "tmp").iterdir()) == []


@pytest.mark.parametrize("size", [0, 1, 4095, 4096, 4097, 10 * 1024 * 1024])
def test_round_trip_byte_identical(store, size):
    import random

    payload = random.Random(size).randbytes(size)
    stat = store.put(io.BytesIO(payload))
    assert stat.size_bytes == size
    assert store.get_bytes(stat.digest) == payload
    assert hashlib.sha256(payload).hexdigest() == stat.digest


def test_get_unknown_digest_not_found(store):
    with pytest.raises(NotFoundError):
        store.open("f" * 64)


def test_disk_layout_sharded_by_first_two_hex(store, tmp_path):
    stat = store.put(io.BytesIO(b"abc"))
    expected = tmp_path / "blobs" / stat.digest[:2] / stat.digest
    assert expected.is_file()
    assert expected.read_bytes() == b"abc"


def test_concurrent_identical_uploads_single_copy(store):
    data = b"y" * (1024 * 1024)
    results: list[str] = []
    lock = threading.Lock()
    barrier = threading.Barrier(8)

    def upload():
        barrier.wait()
        stat = store.put(io.BytesIO(data))
        with lock:
            results.append(stat.digest)

    threads = [threading.Thread(target=upload) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1
    assert len(list(store.iter_digests())) == 1
    assert store.fsck() == []


# -- garbage collection -------------------------------------------------------------


def test_gc_keeps_referenced_deletes_orphans(store):
    kept = store.put(io.BytesIO(b"kept"))
    orphan = store.put(io.BytesIO(b"orphan"))
    deleted = store.collect_garbage(referenced={kept.digest})
    assert deleted == 1
    assert store.exists(kept.digest)
    with pytest.raises(NotFoundError):
        store.open(orphan.digest)


def test_gc_with_everything_referenced_deletes_nothing(store):
    stats = [store.put(io.BytesIO(bytes([i]) * 10)) for i in range(5)]
    assert store.collect_garbage({s.digest for s in stats}) == 0


def test_gc_spares_pinned_in_flight_upload(store):
    """A blob whose referencing rows are not yet committed must survive a GC
    that started from an older referenced set."""
    with store.pin_scope() as pins:
        stat = pins.put(io.BytesIO(b"mid-flight"))
        assert store.collect_garbage(referenced=set()) == 0
        assert store.exists(stat.digest)
    # scope released and still unreferenced: now it is fair game
    assert store.collect_garbage(referenced=set()) == 1


def test_gc_interleaved_with_uploads_never_deletes_new_content(store):
    """Uploads racing a GC loop keep their blobs as long as their pin scope
    is open."""
    stop = threading.Event()
    failures: list[str] = []

    def gc_loop():
        while not stop.is_set():
            store.collect_garbage(referenced=set())

    gc_thread = threading.Thread(target=gc_loop)
    gc_thread.start()
    try:
        for i in range(50):
            with store.pin_scope() as pins:
                stat = pins.put(io.BytesIO(f"payload-{i}".encode()))
                if not store.exists(stat.digest):
                    failures.append(stat.digest)
    finally:
        stop.set()
        gc_thread.join()
    assert failures == []


def test_fsck_detects_corruption(store, tmp_path):
    stat = store.put(io.BytesIO(b"pristine"))
    assert store.fsck() == []
    (tmp_path / "blobs" / stat.digest[:2] / stat.digest).write_bytes(b"tampered")
    assert store.fsck() == [stat.digest]


def test_streaming_bounded_memory(store):
    """64 MiB through put+get keeps the Python heap peak far below the
    payload size (chunked streaming, no whole-blob buffering)."""
    size = 64 * 1024 * 1024

    class Zeros(io.RawIOBase):
        def __init__(self, remaining: int):
            self.remaining = remaining

        def read(self, n=-1):
            n = min(self.remaining, n if n > 0 else self.remaining)
            self.remaining -= n
            return b"\x00" * n

    tracemalloc.start()
    stat = store.put(Zeros(size))
    consumed = 0
    for chunk in store.stream(stat.digest):
        consumed += len(chunk)
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    assert consumed == size
    assert stat.size_bytes == size
    assert peak < 16 * 1024 * 1024
