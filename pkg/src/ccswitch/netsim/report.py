"""Run results: traces, per-flow summaries, and CSV export.

All output is plain CSV with full-precision (repr) floats so that a
repeated run of the same scenario produces byte-identical files.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from pathlib import Path

TRACE_FULL = "full"
TRACE_EVENTS = "events"
TRACE_NONE = "none"

_EVENT_ONLY = frozenset({"start", "done", "loss", "rto", "switch"})


@dataclass(slots=True)
class FlowSummary:
    flow_id: str
    link: str
    algorithm_history: list
    completed: bool
    fct: float | None
    bytes_acked: int
    mean_goodput_bps: float
    sent_pkts: int
    delivered_pkts: int
    dropped_queue: int
    dropped_loss: int
    retransmits: int
    sample_count: int


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


class SimReport:
    """Everything one run produced, plus the CSV writers."""

    def __init__(self, scenario_name: str = "", seed: int = 0,
                 duration: float = 0.0, trace_mode: str = TRACE_FULL):
        self.scenario_name = scenario_name
        self.seed = seed
        self.duration = duration
        self.trace_mode = trace_mode
        # (time, flow_id, cwnd_pkts, pacing_rate_Bps, srtt_s, acked_bytes, event)
        self.trace: list[tuple] = []
        self.flows: dict[str, FlowSummary] = {}
        self.switches: list = []
        self.classifications: list = []
        self.pipe_counters: list[dict] = []
        # Per-flow cumulative delivered bytes over time, for goodput windows.
        self._delivered: dict[str, tuple[list, list]] = {}

    # -- recording (called by Flow during the run) ------------------------------

    def record(self, flow, now: float, event: str) -> None:
        mode = self.trace_mode
        if mode == TRACE_NONE:
            return
        if mode == TRACE_EVENTS and event not in _EVENT_ONLY:
            return
        rate = flow.ccb.cc.rate
        self.trace.append(
            (now, flow.flow_id, rate.cwnd, rate.pacing_rate, rate.srtt,
             flow.bytes_acked, event)
        )

    def record_delivery(self, flow_id: str, now: float, cum_bytes: int) -> None:
        """Receiver-side progress: unique payload bytes landed so far."""
        if self.trace_mode != TRACE_FULL:
            return
        times, totals = self._delivered.setdefault(flow_id, ([], []))
        times.append(now)
        totals.append(cum_bytes)

    # -- finalization ------------------------------------------------------------

    def finalize(self, flows, agents=(), selectors=(), pipes=()) -> "SimReport":
        for flow in flows:
            elapsed = (
                flow.fct if flow.fct is not None
                else max(1e-12, self.duration - flow.spec.start_time)
            )
            self.flows[flow.flow_id] = FlowSummary(
                flow_id=flow.flow_id,
                link=flow.link.name,
                algorithm_history=[a.value for a in flow.algorithm_history],
                completed=flow.done,
                fct=flow.fct,
                bytes_acked=flow.bytes_acked,
                mean_goodput_bps=flow.bytes_acked * 8.0 / elapsed,
                sent_pkts=flow.link.sent,
                delivered_pkts=flow.link.delivered,
                dropped_queue=flow.link.queue_drops,
                dropped_loss=flow.link.loss_drops,
                retransmits=flow.retransmits,
                sample_count=flow.ccb.sample_count,
            )
        for agent in agents:
            self.switches.extend(agent.switch_log)
        for sel in selectors:
            self.classifications.extend(sel.classifications)
        for pair in pipes:
            self.pipe_counters.append(pair.counters())
        return self

    # -- analysis ----------------------------------------------------------------

    def goodput_bps(self, flow_id: str, t0: float, t1: float) -> float:
        """Delivered bits/second over [t0, t1], from the cumulative trace."""
        if t1 <= t0:
            raise ValueError("t1 must be > t0")
        series = self._delivered.get(flow_id)
        if not series or not series[0]:
            return 0.0
        times, totals = series

        def cum_at(t: float) -> int:
            i = bisect_right(times, t)
            return totals[i - 1] if i else 0

        return (cum_at(t1) - cum_at(t0)) * 8.0 / (t1 - t0)

    # -- CSV export ----------------------------------------------------------------

    def write_csvs(self, outdir) -> dict[str, Path]:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {}

        paths["trace"] = out / "trace.csv"
        with open(paths["trace"], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["time_s", "flow_id", "cwnd_pkts", "pacing_rate_Bps",
                        "srtt_s", "acked_bytes", "event"])
            for row in self.trace:
                w.writerow([_fmt(v) for v in row])

        paths["flows"] = out / "flows.csv"
        with open(paths["flows"], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["flow_id", "link", "fct_s", "mean_goodput_bps",
                        "algorithm_history", "completed", "sent_pkts",
                        "delivered_pkts", "dropped_queue_pkts",
                        "dropped_loss_pkts", "retransmits", "sample_count"])
            for fid in sorted(self.flows):
                s = self.flows[fid]
                w.writerow([
                    s.flow_id, s.link, _fmt(s.fct), _fmt(s.mean_goodput_bps),
                    "|".join(s.algorithm_history), int(s.completed),
                    s.sent_pkts, s.delivered_pkts, s.dropped_queue,
                    s.dropped_loss, s.retransmits, s.sample_count,
                ])

        paths["switches"] = out / "switches.csv"
        with open(paths["switches"], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["time_s", "flow_id", "from_alg", "to_alg",
                        "cwnd_at_switch"])
            for r in self.switches:
                w.writerow([_fmt(r.time), r.flow_id, r.from_algorithm.value,
                            r.to_algorithm.value, _fmt(r.cwnd_after)])

        paths["classify"] = out / "classify.csv"
        with open(paths["classify"], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["flow_id", "decision_time_s", "cov", "norm_range",
                        "chosen_algorithm"])
            for r in self.classifications:
                w.writerow([r.flow_id, _fmt(r.decision_time), _fmt(r.cov),
                            _fmt(r.norm_range), r.chosen.value])

        paths["pipes"] = out / "pipes.csv"
        with open(paths["pipes"], "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["core_id", "up_pushed", "up_drained", "up_overflow",
                        "down_pushed", "down_drained", "down_overflow"])
            for c in self.pipe_counters:
                w.writerow([c["core_id"], c["up_pushed"], c["up_drained"],
                            c["up_overflow"], c["down_pushed"],
                            c["down_drained"], c["down_overflow"]])
        return paths
