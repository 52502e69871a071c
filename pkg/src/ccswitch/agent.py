"""Per-core telemetry collector and switch executor.

On every ACK (and on every retransmission timeout) the agent applies any
pending switch command for the flow, extracts one telemetry record, pushes
it to the upward pipe, and only then lets the congestion-control state see
the event. Collection is strictly observational: disabling it must leave
the congestion-control trajectory bit-identical.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .cc import AlgorithmId, CcEvent, CcState, EventKind, cc_on_event
from .pipes import PipePair
from .switching import SwitchCommand, SwitchRecord, apply_pending


@dataclass(slots=True)
class AckSample:
    """One telemetry record, the unit flowing through the upward pipe.

    rtt is None for RTO-triggered samples (no fresh measurement); ece is
    carried for wire-format completeness but never set by the simulator.
    """

    flow_id: str
    timestamp: float
    rtt: float | None
    acked_bytes: int
    delivery_rate: float
    loss_event: bool
    cumulative_retransmits: int
    ece: bool = False


@dataclass(slots=True)
class ConnectionControlBlock:
    """Per-flow transport-side state owned by the agent's core."""

    flow_id: str
    cc: CcState
    mss: int
    pending_switch: SwitchCommand | None = None
    sample_count: int = 0
    cumulative_retransmits: int = 0
    # Delivery-rate window: (time, bytes) of recent acks, plus running sum.
    _rate_win: deque = field(default_factory=deque)
    _rate_win_sum: int = 0


class Agent:
    """One per-core actor: produces on the upward pipe, consumes the downward."""

    def __init__(self, pipes: PipePair, collect: bool = True):
        self.pipes = pipes
        self.collect = collect
        self.switch_log: list[SwitchRecord] = []
        self._flows: dict[str, ConnectionControlBlock] = {}

    def register(self, ccb: ConnectionControlBlock) -> None:
        self._flows[ccb.flow_id] = ccb

    def drain_commands(self) -> None:
        """Move any queued switch commands onto their flows' control blocks.

        Later commands overwrite earlier pending ones (last writer wins).
        """
        for cmd in self.pipes.down.drain_batch(self.pipes.down.capacity):
            ccb = self._flows.get(cmd.flow_id)
            if ccb is not None:
                ccb.pending_switch = cmd

    def deliver_cc_event(self, ccb: ConnectionControlBlock, ev: CcEvent) -> None:
        """Route one event to the CC state, honoring pending switches first."""
        apply_pending(ccb, ev.now, self.switch_log)
        cc_on_event(ccb.cc, ev)

    def _delivery_rate(self, ccb: ConnectionControlBlock, now: float,
                       rtt: float | None, acked_bytes: int) -> float:
        if rtt is None or rtt <= 0:
            return 0.0
        # One segment per ACK at most: cumulative jumps acknowledge data
        # that actually landed earlier.
        credit = acked_bytes if acked_bytes < ccb.mss else ccb.mss
        win = ccb._rate_win
        win.append((now, credit))
        ccb._rate_win_sum += credit
        horizon = now - rtt
        while win and win[0][0] <= horizon:
            ccb._rate_win_sum -= win.popleft()[1]
        return ccb._rate_win_sum / rtt

    def on_ack(self, ccb: ConnectionControlBlock, now: float,
               rtt: float | None, acked_bytes: int,
               loss_event: bool = False) -> None:
        """Handle one received ACK: switch flag, sample, pipe, CC event."""
        self.drain_commands()
        apply_pending(ccb, now, self.switch_log)
        ccb.sample_count += 1
        if self.collect:
            sample = AckSample(
                flow_id=ccb.flow_id,
                timestamp=now,
                rtt=rtt,
                acked_bytes=acked_bytes,
                delivery_rate=self._delivery_rate(ccb, now, rtt, acked_bytes),
                loss_event=loss_event,
                cumulative_retransmits=ccb.cumulative_retransmits,
            )
            self.pipes.up.push(sample)  # overflow tolerated: telemetry is advisory
        rtt_for_cc = rtt if rtt is not None else ccb.cc.rate.srtt
        if rtt_for_cc is not None and rtt_for_cc > 0:
            cc_on_event(ccb.cc, CcEvent(EventKind.ACK, now, acked_bytes, rtt_for_cc))

    def on_rto(self, ccb: ConnectionControlBlock, now: float) -> None:
        """Handle a retransmission timeout: loss-flavored sample, then CC."""
        self.drain_commands()
        apply_pending(ccb, now, self.switch_log)
        ccb.sample_count += 1
        ccb.cumulative_retransmits += 1
        if self.collect:
            sample = AckSample(
                flow_id=ccb.flow_id,
                timestamp=now,
                rtt=None,
                acked_bytes=0,
                delivery_rate=0.0,
                loss_event=True,
                cumulative_retransmits=ccb.cumulative_retransmits,
            )
            self.pipes.up.push(sample)
        cc_on_event(ccb.cc, CcEvent(EventKind.RTO_FIRED, now))
