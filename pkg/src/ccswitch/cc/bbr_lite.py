"""Rate-based control from windowed bandwidth and min-RTT estimates.

A reduced model-based controller: it tracks the maximum delivery rate
over the last 10 RTTs and the minimum RTT over a 10 s window, paces at

    pacing_rate = gain * max_bw

with an 8-slot gain cycle {1.25, 0.75, 1, 1, 1, 1, 1, 1} advanced once
per round, and caps in-flight data at twice the estimated
bandwidth-delay product:

    cwnd = 2 * max_bw * min_rtt / mss       (floor 4 packets)

Startup behaves like slow start (high pacing gain, exponential window)
and ends when the bandwidth estimate stops growing for three rounds.
Loss is deliberately ignored as a rate signal. There is no periodic
RTT-probe state.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .common import CcEvent, CcState, Phase, update_srtt

GAIN_CYCLE = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
STARTUP_GAIN = 2.885
CWND_GAIN = 2.0
MIN_CWND_PKTS = 4.0
MIN_RTT_WINDOW_S = 10.0
MAX_BW_WINDOW_RTTS = 10.0
FULL_BW_GROWTH = 1.25
FULL_BW_ROUNDS = 3


@dataclass(slots=True)
class BbrVars:
    """Observed variables plus estimator/pacing plumbing."""

    min_rtt: float = math.inf
    max_bw: float = 0.0
    cycle_index: int = 0
    min_rtt_stamp: float = 0.0
    # Delivery-rate estimator: acked bytes over the most recent RTT.
    rate_win: deque = field(default_factory=deque)
    rate_win_sum: int = 0
    rate_win_start: float = 0.0
    # Sliding max filter over delivery-rate samples: (time, value),
    # values kept decreasing so the front is always the window max.
    bw_filter: deque = field(default_factory=deque)
    # Startup plateau detection.
    full_bw: float = 0.0
    full_bw_rounds: int = 0
    # Pacing token bucket.
    tokens: float = 0.0
    token_time: float = 0.0


def init_vars(now: float) -> BbrVars:
    return BbrVars(min_rtt_stamp=now, rate_win_start=now, token_time=now)


def _update_estimates(state: CcState, ev: CcEvent) -> None:
    obs: BbrVars = state.observed
    now, rtt = ev.now, ev.rtt_sample

    if rtt <= obs.min_rtt or now - obs.min_rtt_stamp > MIN_RTT_WINDOW_S:
        obs.min_rtt = rtt
        obs.min_rtt_stamp = now

    # Credit at most one segment per ACK: a cumulative jump acknowledges
    # data that was delivered earlier (reorder-buffer drain), not now.
    credit = ev.acked_bytes if ev.acked_bytes < state.mss else state.mss
    win = obs.rate_win
    win.append((now, credit))
    obs.rate_win_sum += credit
    horizon = now - rtt
    while win and win[0][0] <= horizon:
        obs.rate_win_sum -= win.popleft()[1]
    if now - obs.rate_win_start < rtt:
        return  # estimator not primed yet: keep inherited rate variables
    sample = obs.rate_win_sum / rtt

    span = MAX_BW_WINDOW_RTTS * (state.rate.srtt or rtt)
    filt = obs.bw_filter
    while filt and filt[0][0] < now - span:
        filt.popleft()
    while filt and filt[-1][1] <= sample:
        filt.pop()
    filt.append((now, sample))
    obs.max_bw = filt[0][1]


def _apply_model(state: CcState) -> None:
    obs: BbrVars = state.observed
    rate = state.rate
    if obs.max_bw <= 0:
        return
    gain = STARTUP_GAIN if state.phase is Phase.SLOW_START else GAIN_CYCLE[obs.cycle_index]
    rate.pacing_rate = gain * obs.max_bw
    if state.phase is not Phase.SLOW_START and math.isfinite(obs.min_rtt):
        rate.cwnd = max(MIN_CWND_PKTS, CWND_GAIN * obs.max_bw * obs.min_rtt / state.mss)


def on_ack(state: CcState, ev: CcEvent) -> None:
    rate = state.rate
    if ev.rtt_sample > 0:
        update_srtt(rate, ev.rtt_sample)
        _update_estimates(state, ev)
    if state.phase is Phase.SLOW_START:
        rate.cwnd += ev.acked_bytes / state.mss
    _apply_model(state)


def on_loss(state: CcState, ev: CcEvent) -> None:
    # Loss is not a rate signal here; only the phase machine reacts.
    state.phase_to(Phase.LOSS_RECOVERY)


def on_rto(state: CcState, ev: CcEvent) -> None:
    state.rate.cwnd = min(state.rate.cwnd, MIN_CWND_PKTS)
    state.phase_to(Phase.LOSS_RECOVERY)


def on_round_end(state: CcState, ev: CcEvent) -> None:
    obs: BbrVars = state.observed
    if state.phase is Phase.LOSS_RECOVERY:
        state.phase_to(Phase.CONGESTION_AVOIDANCE)
    elif state.phase is Phase.SLOW_START:
        if obs.max_bw >= FULL_BW_GROWTH * obs.full_bw:
            obs.full_bw = obs.max_bw
            obs.full_bw_rounds = 0
        else:
            obs.full_bw_rounds += 1
            if obs.full_bw_rounds >= FULL_BW_ROUNDS and obs.full_bw > 0:
                state.phase_to(Phase.CONGESTION_AVOIDANCE)
    else:
        obs.cycle_index = (obs.cycle_index + 1) % len(GAIN_CYCLE)
    _apply_model(state)


# -- pacing token bucket -----------------------------------------------------

def refill_tokens(state: CcState, now: float) -> None:
    obs: BbrVars = state.observed
    pacing = state.rate.pacing_rate
    dt = now - obs.token_time
    if dt <= 0:
        return
    obs.token_time = now
    if pacing is None or math.isinf(pacing):
        return
    cap = max(state.mss, math.floor(state.rate.cwnd) * state.mss)
    obs.tokens = min(cap, obs.tokens + pacing * dt)


def take_tokens(state: CcState, nbytes: int, now: float) -> None:
    obs: BbrVars = state.observed
    refill_tokens(state, now)
    if state.rate.pacing_rate is not None and math.isfinite(state.rate.pacing_rate):
        obs.tokens = max(0.0, obs.tokens - nbytes)
