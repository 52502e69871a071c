"""Deterministic discrete-event engine and the bottleneck-link model.

Events are dispatched in nondecreasing (time, seq) order where seq is a
monotone tie-break counter, so a fixed seed and configuration always
produce the identical event sequence.
"""

from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass, field

from .specs import LinkSpec, sample_jitter


class EventKind(enum.Enum):
    PKT_ARRIVAL = "pkt_arrival"
    PKT_DEPARTURE = "pkt_departure"
    ACK_ARRIVAL = "ack_arrival"
    TIMER_FIRE = "timer_fire"
    SELECTOR_DRAIN = "selector_drain"


@dataclass(slots=True)
class SimEvent:
    time: float
    kind: EventKind
    flow_id: str | None = None
    payload: object = None
    seq: int = -1  # assigned by schedule()


class Simulator:
    """Single-threaded event loop; all model state mutates inside dispatch."""

    def __init__(self):
        self.now = 0.0
        self._seq = 0
        self._heap: list = []
        self._flows: dict[str, object] = {}
        self.dispatched = 0

    def register_flow(self, flow) -> None:
        self._flows[flow.flow_id] = flow

    @property
    def flows(self) -> dict:
        return self._flows

    def schedule(self, ev: SimEvent) -> None:
        if ev.time < self.now:
            raise AssertionError(
                f"scheduling into the past: t={ev.time} < now={self.now}"
            )
        ev.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (ev.time, ev.seq, ev))

    def schedule_timer(self, time: float, callback) -> None:
        self.schedule(SimEvent(time, EventKind.TIMER_FIRE, payload=callback))

    def schedule_drain(self, time: float, callback) -> None:
        self.schedule(SimEvent(time, EventKind.SELECTOR_DRAIN, payload=callback))

    def run_until(self, t_end: float) -> None:
        """Dispatch every event with time <= t_end; clock lands on t_end."""
        if t_end < self.now:
            raise AssertionError(f"t_end={t_end} is before now={self.now}")
        heap = self._heap
        flows = self._flows
        while heap and heap[0][0] <= t_end:
            t, _, ev = heapq.heappop(heap)
            self.now = t
            self.dispatched += 1
            kind = ev.kind
            if kind is EventKind.PKT_ARRIVAL:
                flows[ev.flow_id].on_pkt_arrival(t, ev.payload)
            elif kind is EventKind.ACK_ARRIVAL:
                flows[ev.flow_id].on_ack_arrival(t, ev.payload)
            else:  # TIMER_FIRE, SELECTOR_DRAIN, PKT_DEPARTURE(callback)
                ev.payload(t)
        self.now = t_end

    def pending_events(self) -> int:
        return len(self._heap)


class Link:
    """Droptail bottleneck runtime: serialization, queue, loss, jitter.

    queue occupancy counts packets whose serialization has not finished
    (the in-service slot included). Arrivals are clamped to FIFO order,
    so a delay spike holds back the packets behind it instead of
    reordering them.
    """

    __slots__ = (
        "name", "spec", "busy_until", "last_arrival", "_departures",
        "queue_drops", "loss_drops", "sent", "delivered",
    )

    def __init__(self, spec: LinkSpec, name: str = ""):
        self.name = name
        self.spec = spec
        self.busy_until = 0.0
        self.last_arrival = 0.0
        self._departures: deque = deque()
        self.queue_drops = 0
        self.loss_drops = 0
        self.sent = 0
        self.delivered = 0

    def queue_len(self, now: float) -> int:
        deps = self._departures
        while deps and deps[0] <= now:
            deps.popleft()
        return len(deps)

    def transmit(self, sim: Simulator, flow_id: str, rng, now: float,
                 nbytes: int, payload) -> str:
        """Send one data packet toward the receiver.

        Returns "sent", "queue_drop" or "loss_drop"; when sent, schedules
        the receiver-side PKT_ARRIVAL.
        """
        spec = self.spec
        self.sent += 1
        if self.queue_len(now) >= spec.queue_capacity:
            self.queue_drops += 1
            return "queue_drop"
        start = self.busy_until if self.busy_until > now else now
        dep = start + nbytes * 8.0 / spec.bandwidth
        self.busy_until = dep
        self._departures.append(dep)
        if spec.loss_ratio > 0.0 and rng.random() < spec.loss_ratio:
            self.loss_drops += 1
            return "loss_drop"
        arrival = dep + spec.prop_delay + sample_jitter(spec.jitter, rng)
        if arrival < self.last_arrival:
            arrival = self.last_arrival
        self.last_arrival = arrival
        self.delivered += 1
        sim.schedule(SimEvent(arrival, EventKind.PKT_ARRIVAL, flow_id, payload))
        return "sent"

    def send_ack(self, sim: Simulator, flow_id: str, now: float, payload) -> None:
        """Return-path delivery: pure propagation, never lost, never jittered."""
        sim.schedule(
            SimEvent(now + self.spec.prop_delay, EventKind.ACK_ARRIVAL, flow_id, payload)
        )
