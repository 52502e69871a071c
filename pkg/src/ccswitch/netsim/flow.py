"""Flow transport: sequencing, ACK clocking, loss detection, retransmission.

The transport owns everything the congestion-control state machines must
not know about: sequence numbers, duplicate-ACK counting, the
retransmission timer, sending-round boundaries and the pacing wakeup.
Congestion control sees only the event stream (ack / loss_detected /
rto_fired / round_end) routed through the per-core agent so that pending
switch commands are always honored first.

Reliability model: per-packet cumulative ACKs that are never lost, a
single retransmission per loss signal (first unacknowledged segment),
NewReno-style partial-ACK retransmits during recovery, and Karn's rule
for RTT samples.
"""

from __future__ import annotations

import math

from ..agent import Agent, ConnectionControlBlock
from ..cc import (
    CcEvent,
    EventKind as CcEventKind,
    cc_init,
    cc_note_sent,
    cc_pacing_wait,
    cc_sending_allowance,
)
from .core import Link, Simulator
from .specs import FlowSpec

RTO_MIN_S = 0.2
RTO_MAX_S = 60.0
DUPACK_THRESHOLD = 3


class Flow:
    """One sender/receiver pair driven entirely by simulator events."""

    def __init__(self, sim: Simulator, spec: FlowSpec, link: Link,
                 agent: Agent, rng, report=None):
        self.sim = sim
        self.spec = spec
        self.flow_id = spec.flow_id
        self.link = link
        self.agent = agent
        self.rng = rng
        self.report = report
        self.mss = spec.mss
        if spec.transfer_size is None:
            self.total_pkts = None
        else:
            self.total_pkts = -(-spec.transfer_size // spec.mss)  # ceil division

        self.ccb = ConnectionControlBlock(
            flow_id=spec.flow_id,
            cc=cc_init(spec.initial_algorithm, spec.start_time, mss=spec.mss),
            mss=spec.mss,
        )
        agent.register(self.ccb)
        self.algorithm_history = [spec.initial_algorithm]

        # Sender state.
        self.snd_una = 0
        self.snd_nxt = 0
        self.dup_acks = 0
        self.in_recovery = False
        self.recovery_mode = ""  # "dup" (window still draining) or "rto" (pipe empty)
        self.dup_credit = 0  # packets known to have left the network since entry
        self.recovery_point = 0
        self.retx_next = 0  # next sequential retransmission during recovery
        self.round_seq = 0
        self.retx_seqs: set[int] = set()
        self.retransmits = 0
        self.bytes_acked = 0

        # Transport RTT estimator (for the retransmission timer only).
        self.srtt: float | None = None
        self.rttvar: float | None = None
        self.rto = 1.0
        self.backoff = 1
        self.rto_deadline: float | None = None
        self._rto_timer_armed = False
        self._pace_timer_armed = False

        # Receiver state.
        self.rcv_next = 0
        self.rcv_ooo: set[int] = set()
        self.unique_delivered = 0

        self.started = False
        self.done = False
        self.fct: float | None = None

        sim.register_flow(self)
        sim.schedule_timer(spec.start_time, self._start)

    # -- lifecycle -----------------------------------------------------------

    def _start(self, now: float) -> None:
        self.started = True
        self._trace(now, "start")
        self.try_send(now)

    def _complete(self, now: float) -> None:
        self.done = True
        self.fct = now - self.spec.start_time
        self._trace(now, "done")

    # -- sending -------------------------------------------------------------

    def _has_data(self) -> bool:
        return self.total_pkts is None or self.snd_nxt < self.total_pkts

    def _set_round_marker(self) -> None:
        """A sending round ends one window past the cumulative ACK.

        Normally that equals snd_nxt; after a timeout collapsed the
        window, snd_nxt is a stale frontier and would starve the
        round-based algorithm logic for the whole go-back-N repair.
        """
        w = max(1, int(self.ccb.cc.rate.cwnd))
        self.round_seq = max(self.snd_una + 1,
                             min(self.snd_nxt, self.snd_una + w))

    def in_flight_bytes(self) -> int:
        """Estimated bytes in the network.

        Outside recovery this is the span of unacknowledged data. In
        duplicate-ACK recovery the original window is still draining, and
        every duplicate ACK proves one more segment left the network, so
        deflate the span by that count. After a timeout nothing is
        presumed in flight except what recovery itself re-injected.
        """
        if self.in_recovery:
            if self.recovery_mode == "rto":
                pipe = (self.retx_next - self.snd_una) + max(
                    0, self.snd_nxt - self.recovery_point)
            else:
                pipe = max(0, self.snd_nxt - self.snd_una - self.dup_credit)
            return pipe * self.mss
        return (self.snd_nxt - self.snd_una) * self.mss

    def try_send(self, now: float) -> None:
        """Send whatever the allowance permits: hole repairs first, then
        new data. Called after every event that could open the window."""
        if self.done or not self.started:
            return
        cc = self.ccb.cc
        mss = self.mss
        while True:
            repairing = self.in_recovery and self.retx_next < self.recovery_point
            if not repairing and not self._has_data():
                break
            in_flight = self.in_flight_bytes()
            allowance = cc_sending_allowance(cc, in_flight, now)
            if allowance < mss:
                if (math.floor(cc.rate.cwnd) * mss - in_flight) >= mss:
                    self._arm_pace_timer(now)
                break
            if repairing:
                self._send_seq(self.retx_next, now, retx=True)
                self.retx_next += 1
            else:
                self._send_seq(self.snd_nxt, now, retx=False)
                self.snd_nxt += 1
            cc_note_sent(cc, mss, now)
        if self.snd_nxt > self.snd_una and self.rto_deadline is None:
            self.rto_deadline = now + min(RTO_MAX_S, self.rto * self.backoff)
            self._arm_rto_timer(self.rto_deadline)

    def _send_seq(self, seq: int, now: float, retx: bool) -> None:
        if retx:
            self.retransmits += 1
            self.retx_seqs.add(seq)
        self.link.transmit(
            self.sim, self.flow_id, self.rng, now, self.mss, (seq, now, retx)
        )

    def _arm_pace_timer(self, now: float) -> None:
        if self._pace_timer_armed:
            return
        wait = cc_pacing_wait(self.ccb.cc, now)
        if wait is None or wait <= 0:
            return
        self._pace_timer_armed = True
        # Keep the wakeup strictly after `now` at float resolution, or a
        # sub-ulp wait would re-fire at the same timestamp forever.
        fire_at = now + wait
        if fire_at <= now:
            fire_at = now + 1e-9
        self.sim.schedule_timer(fire_at, self._pace_fire)

    def _pace_fire(self, now: float) -> None:
        self._pace_timer_armed = False
        self.try_send(now)

    # -- retransmission timer --------------------------------------------------

    def _arm_rto_timer(self, deadline: float) -> None:
        if self._rto_timer_armed:
            return  # an armed timer will chase the deadline when it fires
        self._rto_timer_armed = True
        self.sim.schedule_timer(deadline, self._rto_fire)

    def _rto_fire(self, now: float) -> None:
        self._rto_timer_armed = False
        if self.done:
            return
        if self.snd_una >= self.snd_nxt:
            self.rto_deadline = None
            return
        if self.rto_deadline is None:
            return
        if now < self.rto_deadline - 1e-12:
            self._arm_rto_timer(self.rto_deadline)  # deadline moved; chase it
            return
        # Genuine timeout.
        self.agent.on_rto(self.ccb, now)
        self._note_algorithm(now)
        self.backoff = min(self.backoff * 2, 64)
        self.dup_acks = 0
        self.in_recovery = True
        self.recovery_mode = "rto"
        self.dup_credit = 0
        self.recovery_point = self.snd_nxt
        self._set_round_marker()  # rounds must track the collapsed window
        self._send_seq(self.snd_una, now, retx=True)
        self.retx_next = self.snd_una + 1
        self.rto_deadline = now + min(RTO_MAX_S, self.rto * self.backoff)
        self._arm_rto_timer(self.rto_deadline)
        self._trace(now, "rto")
        self.try_send(now)

    def _update_rto(self, rtt: float) -> None:
        if self.srtt is None:
            self.srtt = rtt
            self.rttvar = rtt / 2
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - rtt)
            self.srtt = 0.875 * self.srtt + 0.125 * rtt
        self.rto = max(RTO_MIN_S, self.srtt + 4 * self.rttvar)

    # -- receiver ------------------------------------------------------------

    def on_pkt_arrival(self, now: float, payload) -> None:
        seq, send_time, retx = payload
        unique = False
        if seq == self.rcv_next:
            unique = True
            self.rcv_next += 1
            ooo = self.rcv_ooo
            while self.rcv_next in ooo:
                ooo.discard(self.rcv_next)
                self.rcv_next += 1
        elif seq > self.rcv_next and seq not in self.rcv_ooo:
            unique = True
            self.rcv_ooo.add(seq)
        if unique:
            self.unique_delivered += 1
            if self.report is not None:
                self.report.record_delivery(
                    self.flow_id, now, self.unique_delivered * self.mss)
        self.link.send_ack(
            self.sim, self.flow_id, now, (self.rcv_next, seq, send_time, retx)
        )

    # -- sender ACK processing -------------------------------------------------

    def on_ack_arrival(self, now: float, payload) -> None:
        if self.done:
            return
        cum, echo_seq, echo_time, echo_retx = payload
        if echo_retx or echo_seq in self.retx_seqs:
            fresh_rtt = None  # Karn: never sample a retransmitted segment
        else:
            fresh_rtt = now - echo_time

        newly = cum - self.snd_una
        if newly > 0:
            self.snd_una = cum
            self.dup_acks = 0
            self.backoff = 1
            newly_bytes = newly * self.mss
            self.bytes_acked += newly_bytes
            if fresh_rtt is not None:
                self._update_rto(fresh_rtt)
            self.agent.on_ack(self.ccb, now, fresh_rtt, newly_bytes)
            self._note_algorithm(now)
            self.rto_deadline = now + min(RTO_MAX_S, self.rto * self.backoff)
            if self.in_recovery:
                if cum >= self.recovery_point:
                    self.in_recovery = False
                    self.dup_credit = 0
                else:
                    # Partial ACK: the retransmission landed; its arrival
                    # also re-accounts newly-1 already-counted segments.
                    self.dup_credit = max(0, self.dup_credit - (newly - 1))
                    if self.retx_next < self.snd_una:
                        self.retx_next = self.snd_una
            if cum >= self.round_seq:
                self._set_round_marker()
                self.agent.deliver_cc_event(
                    self.ccb, CcEvent(CcEventKind.ROUND_END, now)
                )
                self._note_algorithm(now)
            self._trace(now, "ack")
            if self.total_pkts is not None and cum >= self.total_pkts:
                self._complete(now)
                return
        else:
            self.dup_acks += 1
            trigger = self.dup_acks == DUPACK_THRESHOLD and not self.in_recovery
            self.agent.on_ack(self.ccb, now, fresh_rtt, 0, loss_event=trigger)
            self._note_algorithm(now)
            if trigger:
                self.in_recovery = True
                self.recovery_mode = "dup"
                self.dup_credit = DUPACK_THRESHOLD
                self.recovery_point = self.snd_nxt
                self.retx_next = self.snd_una
                self.round_seq = self.snd_nxt
                self.agent.deliver_cc_event(
                    self.ccb, CcEvent(CcEventKind.LOSS_DETECTED, now)
                )
                self._note_algorithm(now)
                self._send_seq(self.snd_una, now, retx=True)
                self.retx_next = self.snd_una + 1
                self._trace(now, "loss")
            elif self.in_recovery:
                self.dup_credit += 1
                if self.dup_acks % 4 == 0:
                    # A lost retransmission stalls the cumulative ACK at
                    # one hole; keep resending it on the dup-ACK cue.
                    self._send_seq(self.snd_una, now, retx=True)
        self.try_send(now)

    # -- observation -----------------------------------------------------------

    def _note_algorithm(self, now: float) -> None:
        alg = self.ccb.cc.id
        if alg is not self.algorithm_history[-1]:
            self.algorithm_history.append(alg)
            self._trace(now, "switch")

    def _trace(self, now: float, event: str) -> None:
        if self.report is not None:
            self.report.record(self, now, event)
