"""Delay-based window control comparing expected and actual throughput.

Once per sending round the window moves by at most one packet:

    diff = cwnd * (rtt - base_rtt) / rtt      (packets queued in the path)
    diff < alpha  -> cwnd += 1
    diff > beta   -> cwnd -= 1

with alpha=2, beta=4 packets. base_rtt is the minimum RTT ever seen;
min_rtt and count_rtt are per-round accumulators reset at round
boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .common import CcEvent, CcState, Phase, clamp_cwnd, update_srtt

ALPHA = 2.0
BETA = 4.0
GAMMA = 1.0  # slow-start exit threshold, packets


@dataclass(slots=True)
class VegasVars:
    base_rtt: float = math.inf
    min_rtt: float = math.inf
    count_rtt: int = 0


def init_vars(now: float) -> VegasVars:
    return VegasVars()


def on_ack(state: CcState, ev: CcEvent) -> None:
    obs: VegasVars = state.observed
    rate = state.rate
    if ev.rtt_sample > 0:
        update_srtt(rate, ev.rtt_sample)
        if ev.rtt_sample < obs.base_rtt:
            obs.base_rtt = ev.rtt_sample
        if ev.rtt_sample < obs.min_rtt:
            obs.min_rtt = ev.rtt_sample
        obs.count_rtt += 1

    if state.phase is Phase.SLOW_START or rate.cwnd < rate.ssthresh:
        # Below ssthresh grow exponentially (includes post-timeout regrowth).
        rate.cwnd += ev.acked_bytes / state.mss
        if state.phase is Phase.SLOW_START and rate.cwnd >= rate.ssthresh:
            state.phase_to(Phase.CONGESTION_AVOIDANCE)
    clamp_cwnd(rate)


def on_loss(state: CcState, ev: CcEvent) -> None:
    rate = state.rate
    rate.ssthresh = max(2.0, math.floor(rate.cwnd / 2))
    rate.cwnd = max(1.0, rate.cwnd / 2)
    state.phase_to(Phase.LOSS_RECOVERY)


def on_rto(state: CcState, ev: CcEvent) -> None:
    rate = state.rate
    rate.ssthresh = max(2.0, math.floor(rate.cwnd / 2))
    rate.cwnd = 1.0
    state.phase_to(Phase.LOSS_RECOVERY)


def on_round_end(state: CcState, ev: CcEvent) -> None:
    obs: VegasVars = state.observed
    rate = state.rate
    if state.phase is Phase.LOSS_RECOVERY:
        state.phase_to(Phase.CONGESTION_AVOIDANCE)
    elif obs.count_rtt >= 2 and math.isfinite(obs.base_rtt) and math.isfinite(obs.min_rtt):
        rtt = obs.min_rtt
        diff = rate.cwnd * (rtt - obs.base_rtt) / rtt
        if state.phase is Phase.SLOW_START:
            if diff > GAMMA:
                state.phase_to(Phase.CONGESTION_AVOIDANCE)
        else:
            if diff < ALPHA:
                rate.cwnd += 1.0
            elif diff > BETA:
                rate.cwnd -= 1.0
            clamp_cwnd(rate)
    # Per-round accumulators always restart with the new round.
    obs.min_rtt = math.inf
    obs.count_rtt = 0
