"""Pluggable congestion-control algorithms behind one state machine.

The algorithms only compute rate variables; packet bookkeeping, loss
detection and round tracking belong to the transport. Callers drive a
state through ``cc_on_event`` and ask ``cc_sending_allowance`` how many
bytes may go out right now.
"""

from __future__ import annotations

import math

from . import bbr_lite, cubic, vegas, westwood
from .common import (
    INITIAL_CWND_PKTS,
    MIN_CWND_PKTS,
    SSTHRESH_SENTINEL,
    AlgorithmId,
    CcEvent,
    CcState,
    EventKind,
    Phase,
    RateVars,
    algorithm_from_name,
)

__all__ = [
    "AlgorithmId",
    "CcEvent",
    "CcState",
    "EventKind",
    "Phase",
    "RateVars",
    "algorithm_from_name",
    "cc_init",
    "cc_on_event",
    "cc_sending_allowance",
    "cc_note_sent",
    "cc_pacing_wait",
    "is_pacing_based",
    "observed_defaults",
    "INITIAL_CWND_PKTS",
    "MIN_CWND_PKTS",
    "SSTHRESH_SENTINEL",
]

_MODULES = {
    AlgorithmId.CUBIC: cubic,
    AlgorithmId.WESTWOOD: westwood,
    AlgorithmId.VEGAS: vegas,
    AlgorithmId.BBR_LITE: bbr_lite,
}

_PACING_BASED = frozenset({AlgorithmId.BBR_LITE})


def is_pacing_based(alg: AlgorithmId) -> bool:
    return alg in _PACING_BASED


def observed_defaults(alg: AlgorithmId, now: float):
    """A fresh observed-variables record, as the algorithm's init creates it."""
    return _MODULES[alg].init_vars(now)


def cc_init(alg: AlgorithmId, now: float, mss: int = 1500) -> CcState:
    """Initial state: slow start, 10-packet window, observed vars at defaults."""
    rate = RateVars()
    if is_pacing_based(alg):
        # Window-driven until the first bandwidth estimate primes.
        rate.pacing_rate = math.inf
    return CcState(
        id=alg,
        rate=rate,
        phase=Phase.SLOW_START,
        observed=observed_defaults(alg, now),
        mss=mss,
    )


def cc_on_event(state: CcState, ev: CcEvent) -> CcState:
    """Advance the state machine by one event (mutates and returns state)."""
    mod = _MODULES[state.id]
    kind = ev.kind
    if kind is EventKind.ACK:
        mod.on_ack(state, ev)
    elif kind is EventKind.LOSS_DETECTED:
        mod.on_loss(state, ev)
    elif kind is EventKind.RTO_FIRED:
        mod.on_rto(state, ev)
    else:
        mod.on_round_end(state, ev)
    return state


def cc_sending_allowance(state: CcState, in_flight: int, now: float) -> int:
    """Bytes permitted to enter the network right now."""
    headroom = math.floor(state.rate.cwnd) * state.mss - in_flight
    if headroom <= 0:
        return 0
    pacing = state.rate.pacing_rate
    if pacing is None or math.isinf(pacing):
        return headroom
    bbr_lite.refill_tokens(state, now)
    return min(headroom, int(state.observed.tokens))


def cc_note_sent(state: CcState, nbytes: int, now: float) -> None:
    """Debit pacing credit for bytes just sent (no-op for window algorithms)."""
    if is_pacing_based(state.id):
        bbr_lite.take_tokens(state, nbytes, now)


def cc_pacing_wait(state: CcState, now: float) -> float | None:
    """Seconds until one more packet is pace-permitted, or None if not
    pacing-limited (window-limited or window algorithm)."""
    pacing = state.rate.pacing_rate
    if pacing is None or math.isinf(pacing) or pacing <= 0:
        return None
    bbr_lite.refill_tokens(state, now)
    deficit = state.mss - state.observed.tokens
    if deficit <= 0:
        return None
    return deficit / pacing
