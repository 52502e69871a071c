"""Cubic-curve window growth with beta=0.7 multiplicative decrease.

Simplified form: after a loss the window is cut to beta*cwnd and a new
growth epoch starts; within an epoch the target window follows

    W(t) = origin + C * (t - K)^3        K = cbrt(origin * beta / C)

anchored at the window level recorded at the last loss. The window only
ever grows toward the target (never shrinks mid-epoch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .common import CcEvent, CcState, Phase, clamp_cwnd, update_srtt

C_SCALE = 0.4
BETA = 0.7


@dataclass(slots=True)
class CubicVars:
    """Observed variables: min delay per-ACK, window anchor on loss."""

    delay_min: float = math.inf
    last_max_cwnd: float = 0.0
    epoch_start: float | None = None
    k: float = 0.0
    origin_cwnd: float = 0.0


def init_vars(now: float) -> CubicVars:
    return CubicVars()


def _begin_epoch(state: CcState, now: float) -> None:
    obs: CubicVars = state.observed
    cwnd = state.rate.cwnd
    if obs.last_max_cwnd > cwnd:
        obs.origin_cwnd = obs.last_max_cwnd
        obs.k = (obs.last_max_cwnd * BETA / C_SCALE) ** (1.0 / 3.0)
    else:
        # No anchor above us (fresh state or post-switch): grow convexly
        # from the current window.
        obs.origin_cwnd = cwnd
        obs.k = 0.0
    obs.epoch_start = now


def on_ack(state: CcState, ev: CcEvent) -> None:
    obs: CubicVars = state.observed
    rate = state.rate
    if ev.rtt_sample > 0:
        update_srtt(rate, ev.rtt_sample)
        if ev.rtt_sample < obs.delay_min:
            obs.delay_min = ev.rtt_sample

    acked_pkts = ev.acked_bytes / state.mss
    if state.phase is Phase.SLOW_START or rate.cwnd < rate.ssthresh:
        # Exponential growth below the threshold; this also covers the
        # regrowth after a timeout collapsed the window under ssthresh.
        rate.cwnd += acked_pkts
        if state.phase is Phase.SLOW_START and rate.cwnd >= rate.ssthresh:
            state.phase_to(Phase.CONGESTION_AVOIDANCE)
    elif state.phase is Phase.CONGESTION_AVOIDANCE and acked_pkts > 0:
        if obs.epoch_start is None:
            _begin_epoch(state, ev.now)
        t = ev.now - obs.epoch_start
        target = obs.origin_cwnd + C_SCALE * (t - obs.k) ** 3
        if target > rate.cwnd:
            rate.cwnd += (target - rate.cwnd) * acked_pkts / rate.cwnd
    clamp_cwnd(rate)


def on_loss(state: CcState, ev: CcEvent) -> None:
    obs: CubicVars = state.observed
    rate = state.rate
    obs.last_max_cwnd = rate.cwnd
    rate.cwnd = max(1.0, rate.cwnd * BETA)
    rate.ssthresh = max(2.0, rate.cwnd)
    obs.epoch_start = None
    state.phase_to(Phase.LOSS_RECOVERY)


def on_rto(state: CcState, ev: CcEvent) -> None:
    obs: CubicVars = state.observed
    rate = state.rate
    obs.last_max_cwnd = rate.cwnd
    rate.ssthresh = max(2.0, rate.cwnd * BETA)
    rate.cwnd = 1.0
    obs.epoch_start = None
    state.phase_to(Phase.LOSS_RECOVERY)


def on_round_end(state: CcState, ev: CcEvent) -> None:
    if state.phase is Phase.LOSS_RECOVERY:
        state.phase_to(Phase.CONGESTION_AVOIDANCE)
