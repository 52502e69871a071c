"""Ring-pipe FIFO semantics, overflow accounting, and storage stability."""

import random
import sys
import threading

import pytest

from ccswitch.pipes import PUSH_DROPPED, PUSH_OK, RingPipe, pipe_open


class TestOpen:
    def test_open_returns_empty_pair(self):
        pair = pipe_open(1024, core_id=3)
        assert pair.up.head == pair.up.tail == 0
        assert pair.down.head == pair.down.tail == 0
        assert pair.core_id == 3

    @pytest.mark.parametrize("bad", [0, 1, 3, 6, 100, -8])
    def test_non_power_of_two_rejected(self, bad):
        with pytest.raises(ValueError):
            pipe_open(bad)

    def test_minimal_ring_fill_drain_fill(self):
        ring = RingPipe(2)
        assert ring.push("a") == PUSH_OK
        assert ring.push("b") == PUSH_OK
        assert ring.push("c") == PUSH_DROPPED
        assert ring.drain_batch(8) == ["a", "b"]
        assert ring.push("d") == PUSH_OK
        assert ring.drain_batch(8) == ["d"]
        assert ring.overflow_count == 1


class TestFifo:
    def test_push_to_empty(self):
        ring = RingPipe(8)
        assert ring.push(1) == PUSH_OK
        assert len(ring) == 1

    def test_push_to_full_drops_newest(self):
        ring = RingPipe(4)
        for i in range(4):
            ring.push(i)
        assert ring.push(99) == PUSH_DROPPED
        assert len(ring) == 4
        assert ring.drain_batch(10) == [0, 1, 2, 3]

    def test_drain_empty_returns_empty_list(self):
        assert RingPipe(8).drain_batch(4) == []

    def test_drain_respects_batch_limit_and_order(self):
        ring = RingPipe(8)
        for i in range(5):
            ring.push(i)
        assert ring.drain_batch(3) == [0, 1, 2]
        assert ring.drain_batch(3) == [3, 4]

    def test_interleaved_random_schedule_loses_only_counted_overflow(self):
        rng = random.Random(1234)
        ring = RingPipe(64)
        produced = 0
        consumed = []
        for _ in range(100_000):
            if rng.random() < 0.55:
                ring.push(produced)
                produced += 1
            else:
                consumed.extend(ring.drain_batch(rng.randrange(1, 16)))
        consumed.extend(ring.drain_batch(len(ring)))
        # No duplicates, no reordering: a strictly increasing subsequence.
        assert all(b > a for a, b in zip(consumed, consumed[1:]))
        assert len(consumed) + ring.overflow_count == produced


class TestSpscThreads:
    def test_two_thread_stress_prefix_preserving(self):
        ring = RingPipe(1024)
        total = 100_000
        done = threading.Event()

        def produce():
            for i in range(total):
                ring.push(i)
            done.set()

        consumed = []
        t = threading.Thread(target=produce)
        t.start()
        while not done.is_set():
            consumed.extend(ring.drain_batch(256))
        while True:
            got = ring.drain_batch(256)
            if not got:
                break
            consumed.extend(got)
        t.join()
        assert all(b > a for a, b in zip(consumed, consumed[1:]))
        assert len(consumed) + ring.overflow_count == total
        assert ring.pushed == ring.drained  # everything stored was consumed


class TestStorageStability:
    def test_pool_never_grows_or_reallocates(self):
        ring = RingPipe(256)
        pool = ring._pool
        pool_id = id(pool)
        size = sys.getsizeof(pool)
        for i in range(50_000):
            ring.push(i)
            if i % 3 == 0:
                ring.drain_batch(4)
        assert id(ring._pool) == pool_id
        assert len(ring._pool) == 256
        assert sys.getsizeof(ring._pool) == size

    def test_no_steady_state_memory_growth(self):
        import tracemalloc

        ring = RingPipe(1024)
        rec = ("sample", 1.0)
        # Warm up so counter ints and the like already exist.
        for i in range(2048):
            ring.push(rec)
        ring.drain_batch(2048)
        tracemalloc.start()
        before = tracemalloc.take_snapshot()
        for _ in range(200_000):
            ring.push(rec)
            if len(ring) >= 512:
                ring.drain_batch(512)
        ring.drain_batch(1024)
        after = tracemalloc.take_snapshot()
        tracemalloc.stop()
        import ccswitch.pipes as pipes_mod
        stats = after.compare_to(before, "filename")
        growth = sum(
            s.size_diff for s in stats
            if s.traceback[0].filename == pipes_mod.__file__
        )
        assert growth < 4096  # counters only; the pool never grows

    def test_overflow_accounting_at_quiescence(self):
        ring = RingPipe(16)
        consumed = 0
        for i in range(1000):
            ring.push(i)
            if i % 7 == 0:
                consumed += len(ring.drain_batch(3))
        assert consumed + len(ring) + ring.overflow_count == 1000
