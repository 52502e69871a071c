"""Experiment runner: wire a scenario into a live simulation and run it.

Also provides the run comparison used for heterogeneity studies (sorted
flow-completion-time tables across runs over the same flow set) and the
desk-scale micro-benchmarks for the pipe layer.
"""

from __future__ import annotations

import copy
import csv
import logging
import random
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .agent import Agent, AckSample
from .netsim import Flow, Link, SimReport, Simulator
from .pipes import PUSH_DROPPED, pipe_open
from .scenario import Mode, Scenario, ScenarioError, parse_scenario
from .selector import Selector, SelectorFlowState, update_stats
from .switching import SwitchCommand

log = logging.getLogger("ccswitch")


@dataclass
class LiveRun:
    """A fully wired simulation, before or after running."""

    scenario: Scenario
    sim: Simulator
    report: SimReport
    flows: list
    agents: list
    selectors: list
    pipes: list


def build_simulation(sc: Scenario) -> LiveRun:
    sim = Simulator()
    report = SimReport(sc.name, sc.seed, sc.duration, trace_mode=sc.trace)

    pipes = [pipe_open(sc.pipe_capacity, core) for core in range(sc.cores)]
    agents = [Agent(pipes[core], collect=sc.collection) for core in range(sc.cores)]
    selectors = [
        Selector(pipes[core], sc.rule, sc.tick_period) for core in range(sc.cores)
    ]

    flows = []
    for fspec in sc.flows:
        link = Link(sc.links[fspec.link], name=fspec.link)
        rng = random.Random(f"{sc.seed}:{fspec.flow_id}")
        flows.append(Flow(sim, fspec, link, agents[fspec.core], rng, report))

    core_of = {f.flow_id: f.core for f in sc.flows}
    for sw in sc.switch_schedule:
        down = pipes[core_of[sw.flow_id]].down

        def push_switch(now, down=down, sw=sw):
            cmd = SwitchCommand(sw.flow_id, sw.algorithm, now)
            if down.push(cmd) == PUSH_DROPPED:
                raise RuntimeError(f"downward pipe overflow on scripted switch {sw}")

        sim.schedule_timer(sw.time, push_switch)

    return LiveRun(sc, sim, report, flows, agents, selectors, pipes)


def _run_single_thread(run: LiveRun) -> None:
    sc, sim = run.scenario, run.sim

    def make_tick(sel):
        def tick(now):
            sel.tick(now)
            nxt = now + sc.tick_period
            if nxt <= sc.duration:
                sim.schedule_drain(nxt, tick)
        return tick

    for sel in run.selectors:
        sim.schedule_drain(min(sc.tick_period, sc.duration), make_tick(sel))
    sim.run_until(sc.duration)


def _run_two_thread(run: LiveRun) -> None:
    """Benchmark mode: the selector polls from its own thread in wall time.

    Results are not deterministic; deterministic acceptance runs use the
    single-threaded mode.
    """
    sc, sim = run.scenario, run.sim
    if sc.switch_schedule:
        raise ScenarioError(
            "scripted switches require single_thread_deterministic mode")
    stop = threading.Event()

    def loop(sel):
        while not stop.is_set():
            sel.tick(sim.now)
            time.sleep(sc.tick_period)

    threads = [threading.Thread(target=loop, args=(sel,), daemon=True)
               for sel in run.selectors]
    for t in threads:
        t.start()
    try:
        sim.run_until(sc.duration)
    finally:
        stop.set()
        for t in threads:
            t.join()
    for sel in run.selectors:
        sel.tick(sim.now)  # final sweep of whatever is still queued


def execute(run: LiveRun) -> SimReport:
    if run.scenario.mode is Mode.TWO_THREAD:
        _run_two_thread(run)
    else:
        _run_single_thread(run)
    for sel in run.selectors:
        sel.close()
    return run.report.finalize(run.flows, run.agents, run.selectors, run.pipes)


def check_expectations(sc: Scenario, report: SimReport) -> list[str]:
    """Evaluate a scenario's embedded assertions; returns failure messages."""
    failures = []
    for exp in sc.expectations:
        kind = exp[0]
        if kind == "all_flows_complete":
            want = exp[1]
            incomplete = [f for f, s in report.flows.items() if not s.completed]
            if want and incomplete:
                failures.append(f"flows did not complete: {sorted(incomplete)}")
        elif kind == "algorithm_history":
            _, fid, algs = exp
            got = report.flows[fid].algorithm_history
            want = [a.value for a in algs]
            if got != want:
                failures.append(
                    f"{fid}: algorithm_history {got} != expected {want}")
        elif kind == "fct_max_s":
            _, fid, limit = exp
            fct = report.flows[fid].fct
            if fct is None or fct > limit:
                failures.append(f"{fid}: fct {fct} exceeds limit {limit}")
    return failures


def run_scenario(scenario, out_dir=None, seed=None, mode=None):
    """Load (if needed), run, export, and check one scenario.

    Returns (report, failures); the CLI maps non-empty failures to a
    nonzero exit status.
    """
    sc = scenario if isinstance(scenario, Scenario) else parse_scenario(scenario)
    if seed is not None:
        sc.seed = seed
    if mode is not None:
        sc.mode = Mode(mode) if not isinstance(mode, Mode) else mode
    log.info("running scenario %s (seed %d, %d flows, %.1fs)",
             sc.name, sc.seed, len(sc.flows), sc.duration)
    report = execute(build_simulation(sc))
    if out_dir is not None:
        paths = report.write_csvs(out_dir)
        log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    failures = check_expectations(sc, report)
    for msg in failures:
        log.error("expectation failed: %s", msg)
    return report, failures


# -- run comparison ------------------------------------------------------------


@dataclass
class RunView:
    """The slice of a report the comparison needs."""

    name: str
    flows: dict  # flow_id -> (link, fct_or_None)


def _view(entry) -> RunView:
    if isinstance(entry, SimReport):
        return RunView(
            entry.scenario_name,
            {f: (s.link, s.fct) for f, s in entry.flows.items()},
        )
    path = Path(entry)
    flows = {}
    with open(path / "flows.csv", newline="") as f:
        for row in csv.DictReader(f):
            fct = float(row["fct_s"]) if row["fct_s"] else None
            flows[row["flow_id"]] = (row["link"], fct)
    return RunView(path.name, flows)


def compare_runs(entries, out_dir=None) -> dict:
    """Compare >= 2 runs over the same flow set.

    Returns {run_name: {link_class: mean_fct, ..., "__all__": mean}} and
    optionally writes one sorted-FCT CSV per run plus a mean-FCT table.
    """
    if len(entries) < 2:
        raise ValueError("need at least two runs to compare")
    views = [_view(e) for e in entries]
    base = set(views[0].flows)
    for v in views[1:]:
        if set(v.flows) != base:
            missing = sorted(base.symmetric_difference(v.flows))
            raise ValueError(f"flow sets differ (e.g. {missing[:4]})")

    summary: dict[str, dict[str, float]] = {}
    for v in views:
        by_link: dict[str, list[float]] = {}
        for fid, (link, fct) in v.flows.items():
            if fct is None:
                raise ValueError(f"{v.name}: flow {fid} did not complete")
            by_link.setdefault(link, []).append(fct)
        entry = {link: sum(fs) / len(fs) for link, fs in sorted(by_link.items())}
        allfcts = [fct for _, fct in v.flows.values()]
        entry["__all__"] = sum(allfcts) / len(allfcts)
        summary[v.name] = entry

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for v in views:
            with open(out / f"sorted_fct_{v.name}.csv", "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["rank", "flow_id", "link", "fct_s"])
                ranked = sorted(v.flows.items(), key=lambda kv: kv[1][1])
                for rank, (fid, (link, fct)) in enumerate(ranked):
                    w.writerow([rank, fid, link, repr(fct)])
        with open(out / "mean_fct.csv", "w", newline="") as f:
            w = csv.writer(f)
            links = sorted({l for v in views for l in summary[v.name] if l != "__all__"})
            w.writerow(["run"] + [f"mean_fct_{l}_s" for l in links] + ["mean_fct_all_s"])
            for v in views:
                row = [v.name]
                row += [repr(summary[v.name].get(l, "")) for l in links]
                row.append(repr(summary[v.name]["__all__"]))
                w.writerow(row)
    return summary


# -- micro-benchmarks ------------------------------------------------------------


class NaiveCopyChannel:
    """Per-record-copy baseline: a lock around a growable buffer, one copy
    on the way in and one on the way out (message-passing semantics)."""

    def __init__(self):
        self._lock = threading.Lock()
        self._buf = deque()

    def push(self, record):
        with self._lock:
            self._buf.append(copy.copy(record))

    def drain_batch(self, max_records: int) -> list:
        with self._lock:
            n = min(max_records, len(self._buf))
            return [copy.copy(self._buf.popleft()) for _ in range(n)]


def _sample_record() -> AckSample:
    return AckSample("bench", 0.0, 0.030, 1500, 250000.0, False, 0)


def _pump_two_threads(channel, records: int, batch: int, lossy: bool) -> float:
    """Producer thread pushes, main thread drains; returns records/second
    (counting a record once through push+drain)."""
    rec = _sample_record()
    done = threading.Event()

    def produce():
        push = channel.push
        for _ in range(records):
            push(rec)
        done.set()

    t = threading.Thread(target=produce, daemon=True)
    start = time.perf_counter()
    t.start()
    drained = 0
    drain = channel.drain_batch
    while not done.is_set():
        drained += len(drain(batch))
    while True:
        got = len(drain(batch))
        if not got:
            break
        drained += got
    t.join()
    elapsed = time.perf_counter() - start
    if lossy:
        drained += channel.overflow_count
    assert drained == records, f"lost records: {drained} != {records}"
    return records / elapsed


def _pump_single_thread(channel, records: int, batch: int) -> float:
    rec = _sample_record()
    push = channel.push
    drain = channel.drain_batch
    start = time.perf_counter()
    pending = 0
    pushed = 0
    while pushed < records:
        n = min(batch, records - pushed)
        for _ in range(n):
            push(rec)
        pushed += n
        pending += n
        pending -= len(drain(batch))
    while pending > 0:
        pending -= len(drain(batch))
    elapsed = time.perf_counter() - start
    return records / elapsed


def run_bench(records: int = 1_000_000, capacity: int = 1024,
              batch: int = 256) -> dict:
    """Pipe and selector micro-benchmarks; returns the measurement table."""
    results = {}

    pair = pipe_open(capacity)
    pool_id = id(pair.up._pool)
    results["spsc_1thread_rec_per_s"] = _pump_single_thread(pair.up, records, batch)
    assert id(pair.up._pool) is not None and id(pair.up._pool) == pool_id
    assert len(pair.up._pool) == capacity

    pair2 = pipe_open(capacity)
    results["spsc_2thread_rec_per_s"] = _pump_two_threads(
        pair2.up, records, batch, lossy=True)
    results["spsc_2thread_overflow"] = pair2.up.overflow_count

    naive = NaiveCopyChannel()
    naive_records = max(records // 10, 1)  # the baseline is slow by design
    results["naive_2thread_rec_per_s"] = _pump_two_threads(
        naive, naive_records, batch, lossy=False)
    results["pipe_vs_naive_speedup"] = (
        results["spsc_2thread_rec_per_s"] / results["naive_2thread_rec_per_s"]
    )

    st = SelectorFlowState("bench")
    rng = random.Random(7)
    samples = [
        AckSample("bench", i * 0.001, 0.02 + 0.02 * rng.random(), 1500,
                  250000.0, False, 0)
        for i in range(10_000)
    ]
    start = time.perf_counter()
    for s in samples:
        update_stats(st, s)
    fold = (time.perf_counter() - start) / len(samples)
    results["selector_fold_us_per_sample"] = fold * 1e6
    return results


def format_bench(results: dict) -> str:
    lines = ["benchmark                         value",
             "--------------------------------  ----------"]
    for key, val in results.items():
        lines.append(f"{key:<32}  {val:,.1f}" if isinstance(val, float)
                     else f"{key:<32}  {val}")
    return "\n".join(lines)
