"""Fixed-capacity single-producer/single-consumer ring channels.

Telemetry records travel up from the per-connection collector to the
selector, switch commands travel down, each direction over its own ring.
Storage is pre-allocated at open time and never grows; when a producer
outruns its consumer the newest record is dropped and counted rather
than blocking or reallocating.

Safety contract: exactly one producer and one consumer per ring. With
that contract the rings are lock-free even across two threads, because
the producer is the only writer of ``head`` (published after the slot
write) and the consumer the only writer of ``tail``. A fully
single-threaded interleaving is equally valid and is what deterministic
simulation runs use.
"""

from __future__ import annotations

PUSH_OK = "ok"
PUSH_DROPPED = "dropped_overflow"

DEFAULT_CAPACITY = 4096


class RingPipe:
    """Bounded FIFO over a pre-allocated slot pool.

    head and tail are monotone counters; (head - tail) is the current
    occupancy and head & mask the next write slot.
    """

    __slots__ = ("capacity", "_mask", "_pool", "head", "tail", "overflow_count")

    def __init__(self, capacity: int):
        if capacity < 2 or capacity & (capacity - 1):
            raise ValueError(f"capacity must be a power of two >= 2, got {capacity}")
        self.capacity = capacity
        self._mask = capacity - 1
        self._pool = [None] * capacity
        self.head = 0
        self.tail = 0
        self.overflow_count = 0

    def __len__(self) -> int:
        return self.head - self.tail

    def push(self, record) -> str:
        """Producer side: append one record, or drop it if the ring is full."""
        head = self.head
        if head - self.tail >= self.capacity:
            self.overflow_count += 1
            return PUSH_DROPPED
        self._pool[head & self._mask] = record
        self.head = head + 1  # publish after the slot write
        return PUSH_OK

    def drain_batch(self, max_records: int) -> list:
        """Consumer side: pop up to max_records oldest records, in order."""
        tail = self.tail
        n = self.head - tail  # snapshot; racing pushes are picked up next drain
        if n > max_records:
            n = max_records
        if n <= 0:
            return []
        pool = self._pool
        mask = self._mask
        out = [None] * n
        for i in range(n):
            slot = (tail + i) & mask
            out[i] = pool[slot]
            pool[slot] = None  # release the reference, slot stays allocated
        self.tail = tail + n
        return out

    @property
    def pushed(self) -> int:
        return self.head

    @property
    def drained(self) -> int:
        return self.tail


class PipePair:
    """One core's channel suite: telemetry up, switch commands down."""

    __slots__ = ("up", "down", "core_id")

    def __init__(self, up: RingPipe, down: RingPipe, core_id: int):
        self.up = up
        self.down = down
        self.core_id = core_id

    def counters(self) -> dict:
        return {
            "core_id": self.core_id,
            "up_pushed": self.up.pushed,
            "up_drained": self.up.drained,
            "up_overflow": self.up.overflow_count,
            "down_pushed": self.down.pushed,
            "down_drained": self.down.drained,
            "down_overflow": self.down.overflow_count,
        }


def pipe_open(capacity: int = DEFAULT_CAPACITY, core_id: int = 0) -> PipePair:
    """Allocate both rings of a pair. capacity must be a power of two >= 2."""
    return PipePair(RingPipe(capacity), RingPipe(capacity), core_id)
