"""Common congestion-control state machine shared by every algorithm.

Every algorithm drives the same three-phase machine (slow start,
congestion avoidance, loss recovery) and exposes the same rate variables
(cwnd in packets, optional pacing rate in bytes/s).  Algorithm-specific
measurement state lives in a per-algorithm "observed variables" record
that always has well-defined init defaults, so resetting it is always
legal.

Legal phase transitions:

    slow_start -> congestion_avoidance | loss_recovery
    congestion_avoidance -> loss_recovery
    loss_recovery -> congestion_avoidance

There is deliberately no way back into slow start; a retransmission
timeout is treated as a (harsh) loss-recovery entry instead.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


MIN_CWND_PKTS = 1.0
INITIAL_CWND_PKTS = 10.0
SSTHRESH_SENTINEL = math.inf


class AlgorithmId(enum.Enum):
    CUBIC = "cubic"
    WESTWOOD = "westwood"
    VEGAS = "vegas"
    BBR_LITE = "bbr_lite"

    def __str__(self) -> str:
        return self.value


def algorithm_from_name(name: str) -> AlgorithmId:
    try:
        return AlgorithmId(name)
    except ValueError:
        known = ", ".join(a.value for a in AlgorithmId)
        raise ValueError(f"unknown algorithm {name!r} (known: {known})") from None


class Phase(enum.Enum):
    SLOW_START = "slow_start"
    CONGESTION_AVOIDANCE = "congestion_avoidance"
    LOSS_RECOVERY = "loss_recovery"


class EventKind(enum.Enum):
    ACK = "ack"
    LOSS_DETECTED = "loss_detected"
    RTO_FIRED = "rto_fired"
    ROUND_END = "round_end"


@dataclass(slots=True)
class CcEvent:
    """One congestion-control trigger.

    ``rtt_sample`` must be > 0 for ACK events; ``acked_bytes`` is the newly
    acknowledged payload (0 for duplicate ACKs).
    """

    kind: EventKind
    now: float
    acked_bytes: int = 0
    rtt_sample: float = 0.0


@dataclass(slots=True)
class RateVars:
    """Shared sending-rate state.

    cwnd is kept fractional internally and floored only when computing a
    sending allowance. pacing_rate is present exactly when the current
    algorithm is pacing based.
    """

    cwnd: float = INITIAL_CWND_PKTS
    ssthresh: float = SSTHRESH_SENTINEL
    pacing_rate: float | None = None
    srtt: float | None = None
    last_rtt_sample: float | None = None


@dataclass(slots=True)
class CcState:
    """One connection's congestion-control state."""

    id: AlgorithmId
    rate: RateVars
    phase: Phase
    observed: object
    mss: int

    def phase_to(self, new: Phase) -> None:
        """Apply a phase transition, enforcing the legal edges."""
        if new is self.phase:
            return
        legal = _LEGAL_TRANSITIONS[self.phase]
        if new not in legal:
            raise AssertionError(f"illegal phase transition {self.phase} -> {new}")
        self.phase = new


_LEGAL_TRANSITIONS = {
    Phase.SLOW_START: (Phase.CONGESTION_AVOIDANCE, Phase.LOSS_RECOVERY),
    Phase.CONGESTION_AVOIDANCE: (Phase.LOSS_RECOVERY,),
    Phase.LOSS_RECOVERY: (Phase.CONGESTION_AVOIDANCE,),
}


def clamp_cwnd(rate: RateVars, floor: float = MIN_CWND_PKTS) -> None:
    if rate.cwnd < floor:
        rate.cwnd = floor


def update_srtt(rate: RateVars, rtt: float) -> None:
    """EWMA smoothing (1/8 gain, RFC-style) plus the raw last sample."""
    rate.last_rtt_sample = rtt
    if rate.srtt is None:
        rate.srtt = rtt
    else:
        rate.srtt += (rtt - rate.srtt) / 8.0
