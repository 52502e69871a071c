"""User-space analysis loop: fold telemetry, classify flows, issue switches.

One selector instance owns one core's pipe pair. A drain timer (2 ms of
simulated time by default) triggers a batch read of the upward pipe; each
record updates the flow's running RTT statistics; after each update the
rule list is evaluated and any resulting switch commands are written to
the downward pipe.

The one shipped rule classifies wireless-like paths: if, within the
first N RTT samples, both the coefficient of variation (population
standard deviation / mean) and the normalized range ((max - min) / min)
of the sampled RTTs strictly exceed their thresholds, the flow is moved
to the configured wireless-friendly algorithm. A flow is classified at
most once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .agent import AckSample
from .cc import AlgorithmId
from .pipes import PUSH_DROPPED, PipePair
from .switching import SwitchCommand

DEFAULT_TICK_PERIOD_S = 0.002


@dataclass(slots=True)
class RuleConfig:
    """Classification-rule knobs (validated defaults, tunable per scenario)."""

    n_samples: int = 30
    cov_threshold: float = 0.25
    range_threshold: float = 1.0
    wifi_algorithm: AlgorithmId = AlgorithmId.WESTWOOD
    default_algorithm: AlgorithmId = AlgorithmId.BBR_LITE
    enabled: bool = True

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.cov_threshold <= 0 or self.range_threshold <= 0:
            raise ValueError("thresholds must be > 0")


@dataclass(slots=True)
class SelectorFlowState:
    """Per-connection running statistics (Welford mean/M2, min/max)."""

    flow_id: str
    rtt_cnt: int = 0
    rtt_mean: float = 0.0
    rtt_m2: float = 0.0
    rtt_min: float = math.inf
    rtt_max: float = 0.0
    chosen: AlgorithmId | None = None
    loss_events: int = 0
    samples_seen: int = 0

    @property
    def rtt_std(self) -> float:
        """Population standard deviation of the folded RTT samples."""
        if self.rtt_cnt < 1:
            return 0.0
        return math.sqrt(self.rtt_m2 / self.rtt_cnt)

    @property
    def rtt_cov(self) -> float:
        if self.rtt_cnt < 2 or self.rtt_mean == 0.0:
            return 0.0
        return self.rtt_std / self.rtt_mean

    @property
    def rtt_norm_range(self) -> float:
        if self.rtt_cnt < 1 or not math.isfinite(self.rtt_min) or self.rtt_min <= 0:
            return 0.0
        return (self.rtt_max - self.rtt_min) / self.rtt_min


def update_stats(st: SelectorFlowState, s: AckSample,
                 max_rtt_samples: int | None = None) -> SelectorFlowState:
    """Fold one sample into the running statistics.

    Only samples carrying a fresh RTT advance the RTT statistics, and only
    while fewer than max_rtt_samples have been folded; loss and sample
    counters always advance.
    """
    st.samples_seen += 1
    if s.loss_event:
        st.loss_events += 1
    rtt = s.rtt
    if rtt is None or rtt <= 0:
        return st
    if max_rtt_samples is not None and st.rtt_cnt >= max_rtt_samples:
        return st
    st.rtt_cnt += 1
    delta = rtt - st.rtt_mean
    st.rtt_mean += delta / st.rtt_cnt
    st.rtt_m2 += delta * (rtt - st.rtt_mean)
    if rtt < st.rtt_min:
        st.rtt_min = rtt
    if rtt > st.rtt_max:
        st.rtt_max = rtt
    return st


def eval_wifi_rule(st: SelectorFlowState, cfg: RuleConfig,
                   now: float = 0.0) -> SwitchCommand | None:
    """Classify once: both jitter statistics must strictly exceed thresholds."""
    if st.chosen is not None:
        return None
    if 2 <= st.rtt_cnt <= cfg.n_samples:
        if st.rtt_cov > cfg.cov_threshold and st.rtt_norm_range > cfg.range_threshold:
            st.chosen = cfg.wifi_algorithm
            return SwitchCommand(st.flow_id, cfg.wifi_algorithm, now)
    if st.rtt_cnt >= cfg.n_samples:
        # Observation window exhausted without a match: the flow keeps the
        # default algorithm it already runs; mark it so the rule never refires.
        st.chosen = cfg.default_algorithm
    return None


@dataclass(slots=True)
class ClassificationRecord:
    flow_id: str
    decision_time: float
    cov: float
    norm_range: float
    chosen: AlgorithmId


class Selector:
    """One core's analyzer/decider; sole consumer of its upward pipe."""

    def __init__(self, pipes: PipePair, cfg: RuleConfig | None = None,
                 tick_period: float = DEFAULT_TICK_PERIOD_S,
                 batch_max: int | None = None):
        self.pipes = pipes
        self.cfg = cfg if cfg is not None else RuleConfig()
        self.tick_period = tick_period
        self.batch_max = batch_max if batch_max is not None else pipes.up.capacity
        self.flows: dict[str, SelectorFlowState] = {}
        self.classifications: list[ClassificationRecord] = []
        self.commands_issued = 0
        self._open = True

    def _flow(self, flow_id: str) -> SelectorFlowState:
        st = self.flows.get(flow_id)
        if st is None:
            st = SelectorFlowState(flow_id)
            self.flows[flow_id] = st
        return st

    def tick(self, now: float) -> list[SwitchCommand]:
        """One drain-timer firing: fold a batch, evaluate rules, emit commands."""
        if not self._open:
            raise RuntimeError("selector is closed")
        commands: list[SwitchCommand] = []
        batch = self.pipes.up.drain_batch(self.batch_max)
        for sample in batch:
            st = self._flow(sample.flow_id)
            update_stats(st, sample, self.cfg.n_samples)
            if not self.cfg.enabled:
                continue
            before = st.chosen
            cmd = eval_wifi_rule(st, self.cfg, now)
            if cmd is not None:
                commands.append(cmd)
            if st.chosen is not None and before is None:
                self.classifications.append(
                    ClassificationRecord(
                        flow_id=st.flow_id,
                        decision_time=now,
                        cov=st.rtt_cov,
                        norm_range=st.rtt_norm_range,
                        chosen=st.chosen,
                    )
                )
        for cmd in commands:
            if self.pipes.down.push(cmd) == PUSH_DROPPED:
                raise RuntimeError(
                    f"downward pipe overflow: switch command for {cmd.flow_id} lost"
                )
            self.commands_issued += 1
        return commands

    def close(self) -> dict:
        """Release the handle; returns final per-pipe counters."""
        if not self._open:
            raise RuntimeError("selector already closed")
        self._open = False
        return self.pipes.counters()


def selector_open(pipes: PipePair, cfg: RuleConfig | None = None,
                  tick_period: float = DEFAULT_TICK_PERIOD_S) -> Selector:
    return Selector(pipes, cfg, tick_period)


def selector_close(handle: Selector) -> dict:
    return handle.close()
