"""Bandwidth-estimating window control for lossy paths.

Reno-style growth, but on loss the slow-start threshold is set from an
end-to-end bandwidth estimate instead of blind halving:

    ssthresh = floor(bandwidth_estimation * rtt_min / mss)

The bandwidth estimate is an EWMA (0.9 retention) over per-round samples
of acked bytes divided by round duration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .common import CcEvent, CcState, Phase, clamp_cwnd, update_srtt

EWMA_RETENTION = 0.9


@dataclass(slots=True)
class WestwoodVars:
    """Observed variables plus round bookkeeping.

    cumulated_acked is a monotone per-ACK byte counter; round marks are
    plumbing for turning it into per-round bandwidth samples.
    """

    bandwidth_estimation: float = 0.0
    cumulated_acked: int = 0
    rtt_min: float = math.inf
    round_acked_mark: int = 0
    round_time_mark: float | None = None


def init_vars(now: float) -> WestwoodVars:
    return WestwoodVars()


def on_ack(state: CcState, ev: CcEvent) -> None:
    obs: WestwoodVars = state.observed
    rate = state.rate
    if ev.rtt_sample > 0:
        update_srtt(rate, ev.rtt_sample)
        if ev.rtt_sample < obs.rtt_min:
            obs.rtt_min = ev.rtt_sample
    obs.cumulated_acked += ev.acked_bytes

    acked_pkts = ev.acked_bytes / state.mss
    if state.phase is Phase.SLOW_START or rate.cwnd < rate.ssthresh:
        # Below ssthresh grow exponentially (includes post-timeout regrowth).
        rate.cwnd += acked_pkts
        if state.phase is Phase.SLOW_START and rate.cwnd >= rate.ssthresh:
            state.phase_to(Phase.CONGESTION_AVOIDANCE)
    elif state.phase is Phase.CONGESTION_AVOIDANCE:
        rate.cwnd += acked_pkts / rate.cwnd
    clamp_cwnd(rate)


def _bw_ssthresh(state: CcState) -> float:
    obs: WestwoodVars = state.observed
    if obs.bandwidth_estimation > 0 and math.isfinite(obs.rtt_min):
        return max(2.0, float(math.floor(obs.bandwidth_estimation * obs.rtt_min / state.mss)))
    return max(2.0, math.floor(state.rate.cwnd / 2))


def on_loss(state: CcState, ev: CcEvent) -> None:
    rate = state.rate
    rate.ssthresh = _bw_ssthresh(state)
    if rate.ssthresh < rate.cwnd:
        rate.cwnd = rate.ssthresh
    else:
        # Estimate at or above the current window (stale or warming up):
        # fall back to halving so a loss always shrinks the window.
        rate.cwnd = rate.cwnd / 2
    clamp_cwnd(rate)
    state.phase_to(Phase.LOSS_RECOVERY)


def on_rto(state: CcState, ev: CcEvent) -> None:
    rate = state.rate
    rate.ssthresh = _bw_ssthresh(state)
    rate.cwnd = 1.0
    state.phase_to(Phase.LOSS_RECOVERY)


def on_round_end(state: CcState, ev: CcEvent) -> None:
    obs: WestwoodVars = state.observed
    if obs.round_time_mark is not None:
        duration = ev.now - obs.round_time_mark
        delta = obs.cumulated_acked - obs.round_acked_mark
        if duration > 0 and delta > 0:
            sample = delta / duration
            if obs.bandwidth_estimation == 0.0:
                obs.bandwidth_estimation = sample
            else:
                obs.bandwidth_estimation = (
                    EWMA_RETENTION * obs.bandwidth_estimation
                    + (1.0 - EWMA_RETENTION) * sample
                )
    obs.round_time_mark = ev.now
    obs.round_acked_mark = obs.cumulated_acked
    if state.phase is Phase.LOSS_RECOVERY:
        state.phase_to(Phase.CONGESTION_AVOIDANCE)
