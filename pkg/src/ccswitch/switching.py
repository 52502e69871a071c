"""Live algorithm replacement with rate inheritance.

The migration contract: the new algorithm inherits the sending rate
(congestion window, and for a pacing algorithm a pacing rate derived as
cwnd * mss / last sampled RTT), while its observed variables start from
their init defaults. A switch therefore never resets a connection's
throughput, only its measurement state.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cc import (
    SSTHRESH_SENTINEL,
    AlgorithmId,
    CcState,
    Phase,
    cc_init,
    is_pacing_based,
)


@dataclass(slots=True)
class SwitchCommand:
    """Instruction to move one flow to a new algorithm."""

    flow_id: str
    new_algorithm: AlgorithmId
    issued_at: float


@dataclass(slots=True)
class SwitchRecord:
    """Log entry for one executed switch."""

    time: float
    flow_id: str
    from_algorithm: AlgorithmId
    to_algorithm: AlgorithmId
    cwnd_before: float
    cwnd_after: float


def migrate(old: CcState, new_id: AlgorithmId, now: float) -> CcState:
    """Replace the algorithm, inheriting rate and resetting observed vars.

    Requires at least one recorded RTT sample; switching to the current
    algorithm is a no-op. Phase becomes congestion avoidance unless the
    old state was mid loss recovery, which is carried over.
    """
    if new_id is old.id:
        return old
    if old.rate.last_rtt_sample is None:
        raise ValueError("cannot migrate before the first RTT sample")

    new = cc_init(new_id, now, mss=old.mss)
    rate = new.rate
    rate.cwnd = old.rate.cwnd
    rate.srtt = old.rate.srtt
    rate.last_rtt_sample = old.rate.last_rtt_sample

    old_pacing = is_pacing_based(old.id)
    new_pacing = is_pacing_based(new_id)
    if new_pacing and not old_pacing:
        rate.pacing_rate = old.rate.cwnd * old.mss / old.rate.last_rtt_sample
    elif not new_pacing:
        rate.pacing_rate = None
    if not old_pacing and not new_pacing:
        rate.ssthresh = old.rate.ssthresh
    else:
        rate.ssthresh = SSTHRESH_SENTINEL

    new.phase = (
        Phase.LOSS_RECOVERY if old.phase is Phase.LOSS_RECOVERY
        else Phase.CONGESTION_AVOIDANCE
    )
    return new


def apply_pending(ccb, now: float, log: list[SwitchRecord] | None = None):
    """Execute a flow's pending switch command, if it can run yet.

    Called at the top of every congestion-control invocation. A command
    stays pending until the connection has recorded an RTT sample; a
    command naming the current algorithm is consumed without effect.
    Returns the control block.
    """
    cmd = ccb.pending_switch
    if cmd is None:
        return ccb
    state = ccb.cc
    if cmd.new_algorithm is state.id:
        ccb.pending_switch = None
        return ccb
    if state.rate.last_rtt_sample is None:
        return ccb  # deferred until the first sample
    before = state.rate.cwnd
    new_state = migrate(state, cmd.new_algorithm, now)
    ccb.cc = new_state
    ccb.pending_switch = None
    if log is not None:
        log.append(
            SwitchRecord(
                time=now,
                flow_id=ccb.flow_id,
                from_algorithm=state.id,
                to_algorithm=new_state.id,
                cwnd_before=before,
                cwnd_after=new_state.rate.cwnd,
            )
        )
    return ccb
