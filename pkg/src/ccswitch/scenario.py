"""Scenario files: a flat key/value format describing one experiment.

Lines are ``key = value``; ``#`` starts a comment; blank lines are
ignored. Keys are dotted paths. Example::

    name = s1_switching
    seed = 42
    duration = 60

    link.path0.bandwidth_bps = 2000000
    link.path0.prop_delay_s = 0.015
    link.path0.loss_ratio = 0.04
    link.path0.queue_capacity = 25
    link.path0.jitter.kind = none

    flow.f0.link = path0
    flow.f0.start_s = 0.0
    flow.f0.size_bytes = unbounded
    flow.f0.algorithm = cubic
    flow.f0.mss_bytes = 1500

    rule.enabled = false

    switch.1.time_s = 20.0
    switch.1.flow = f0
    switch.1.algorithm = bbr_lite

Recognized top-level keys: name, seed (mandatory), duration, mode
(single_thread_deterministic | two_thread_benchmark), tick_period_s,
trace (full | events | none), cores, collection (on | off),
pipe_capacity.

Link keys: bandwidth_bps, prop_delay_s, loss_ratio, queue_capacity,
jitter.kind (none | wifi_like), jitter.base_spread_s, jitter.spike_prob,
jitter.spike_delay_s.

Flow keys: link, start_s, size_bytes (integer or ``unbounded``),
algorithm, mss_bytes, plus the expansion helpers count (replicate the
flow N times as <id>_00..) and start_spacing_s (stagger replicated
starts).

Rule keys: enabled, n_samples, cov_threshold, range_threshold,
wifi_algorithm, default_algorithm.

Switch entries (scripted schedule): switch.<n>.time_s / .flow /
.algorithm.

Embedded assertions: expect.flow.<id>.algorithm_history (``|``-separated
names), expect.all_flows_complete (true/false), expect.flow.<id>.fct_max_s.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

from .cc import AlgorithmId, algorithm_from_name
from .netsim.specs import FlowSpec, JitterKind, JitterSpec, LinkSpec
from .selector import RuleConfig


class ScenarioError(Exception):
    """Parse or validation failure, pointing at the offending line."""

    def __init__(self, message: str, path: str = "", line: int = 0):
        loc = f"{path}:{line}: " if line else (f"{path}: " if path else "")
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class Mode(enum.Enum):
    SINGLE_THREAD = "single_thread_deterministic"
    TWO_THREAD = "two_thread_benchmark"


@dataclass(slots=True)
class ScheduledSwitch:
    time: float
    flow_id: str
    algorithm: AlgorithmId


@dataclass(slots=True)
class Scenario:
    name: str
    seed: int
    duration: float
    mode: Mode = Mode.SINGLE_THREAD
    tick_period: float = 0.002
    trace: str = "full"
    cores: int = 1
    collection: bool = True
    pipe_capacity: int = 4096
    links: dict = field(default_factory=dict)
    flows: list = field(default_factory=list)
    rule: RuleConfig = field(default_factory=RuleConfig)
    switch_schedule: list = field(default_factory=list)
    expectations: list = field(default_factory=list)


def _parse_lines(text: str, path: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}",
                                path, lineno)
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ScenarioError("empty key or value", path, lineno)
        if key in entries:
            raise ScenarioError(f"duplicate key {key!r}", path, lineno)
        entries[key] = (value, lineno)
    return entries


class _Reader:
    """Typed access over the parsed entries, with line-precise errors."""

    def __init__(self, entries: dict, path: str):
        self.entries = entries
        self.path = path
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.entries

    def raw(self, key: str, default=None):
        if key not in self.entries:
            return default
        self.used.add(key)
        return self.entries[key][0]

    def _conv(self, key: str, conv, kindname: str):
        value, lineno = self.entries[key]
        self.used.add(key)
        try:
            return conv(value)
        except (ValueError, KeyError):
            raise ScenarioError(f"{key}: expected {kindname}, got {value!r}",
                                self.path, lineno) from None

    def error(self, key: str, message: str):
        lineno = self.entries[key][1] if key in self.entries else 0
        raise ScenarioError(message, self.path, lineno)

    def get_float(self, key: str, default=None):
        if key not in self.entries:
            if default is None:
                raise ScenarioError(f"missing required key {key!r}", self.path)
            return default
        return self._conv(key, float, "a number")

    def get_int(self, key: str, default=None):
        if key not in self.entries:
            if default is None:
                raise ScenarioError(f"missing required key {key!r}", self.path)
            return default
        return self._conv(key, lambda v: int(v, 0), "an integer")

    def get_bool(self, key: str, default: bool):
        if key not in self.entries:
            return default
        mapping = {"true": True, "on": True, "1": True, "yes": True,
                   "false": False, "off": False, "0": False, "no": False}
        return self._conv(key, lambda v: mapping[v.lower()], "a boolean")

    def get_algorithm(self, key: str, default=None):
        if key not in self.entries:
            if default is None:
                raise ScenarioError(f"missing required key {key!r}", self.path)
            return default
        return self._conv(key, algorithm_from_name, "an algorithm name")

    def get_choice(self, key: str, choices: dict, default):
        if key not in self.entries:
            return default
        return self._conv(key, lambda v: choices[v], "one of " + "/".join(choices))


def _group_ids(entries: dict, prefix: str) -> list[str]:
    ids = []
    for key in entries:
        if key.startswith(prefix):
            ident = key[len(prefix):].split(".", 1)[0]
            if ident not in ids:
                ids.append(ident)
    return ids


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}", str(path)) from None
    return parse_scenario_text(text, str(path))


def parse_scenario_text(text: str, path: str = "<scenario>") -> Scenario:
    entries = _parse_lines(text, path)
    r = _Reader(entries, path)

    if not r.has("seed"):
        raise ScenarioError("missing required key 'seed'", path)
    sc = Scenario(
        name=r.raw("name", Path(path).stem),
        seed=r.get_int("seed"),
        duration=r.get_float("duration", 60.0),
        mode=r.get_choice("mode", {m.value: m for m in Mode}, Mode.SINGLE_THREAD),
        tick_period=r.get_float("tick_period_s", 0.002),
        trace=r.get_choice("trace", {"full": "full", "events": "events",
                                     "none": "none"}, "full"),
        cores=r.get_int("cores", 1),
        collection=r.get_bool("collection", True),
        pipe_capacity=r.get_int("pipe_capacity", 4096),
    )
    if sc.duration <= 0:
        r.error("duration", "duration must be > 0")

    for name in _group_ids(entries, "link."):
        p = f"link.{name}."
        kind = r.get_choice(p + "jitter.kind",
                            {k.value: k for k in JitterKind}, JitterKind.NONE)
        try:
            jitter = JitterSpec(
                kind=kind,
                base_spread=r.get_float(p + "jitter.base_spread_s", 0.0),
                spike_prob=r.get_float(p + "jitter.spike_prob", 0.0),
                spike_delay=r.get_float(p + "jitter.spike_delay_s", 0.0),
            )
            sc.links[name] = LinkSpec(
                bandwidth=r.get_float(p + "bandwidth_bps"),
                prop_delay=r.get_float(p + "prop_delay_s"),
                loss_ratio=r.get_float(p + "loss_ratio", 0.0),
                queue_capacity=r.get_int(p + "queue_capacity", 50),
                jitter=jitter,
            )
        except ValueError as exc:
            raise ScenarioError(f"link {name!r}: {exc}", path) from None

    for ident in _group_ids(entries, "flow."):
        p = f"flow.{ident}."
        link = r.raw(p + "link")
        if link is None:
            r.error(p + "link", f"flow {ident!r}: missing link")
        if link not in sc.links:
            r.error(p + "link", f"flow {ident!r}: unknown link {link!r}")
        size_raw = r.raw(p + "size_bytes", "unbounded")
        if size_raw == "unbounded":
            size = None
        else:
            try:
                size = int(size_raw)
            except ValueError:
                r.error(p + "size_bytes",
                        f"flow {ident!r}: size_bytes must be an integer or 'unbounded'")
        count = r.get_int(p + "count", 1)
        spacing = r.get_float(p + "start_spacing_s", 0.0)
        start = r.get_float(p + "start_s", 0.0)
        alg = r.get_algorithm(p + "algorithm", AlgorithmId.CUBIC)
        mss = r.get_int(p + "mss_bytes", 1500)
        try:
            if count == 1:
                sc.flows.append(FlowSpec(ident, link, start, size, alg, mss))
            else:
                width = max(2, len(str(count - 1)))
                for i in range(count):
                    sc.flows.append(FlowSpec(
                        f"{ident}_{i:0{width}d}", link, start + i * spacing,
                        size, alg, mss,
                    ))
        except ValueError as exc:
            raise ScenarioError(f"flow {ident!r}: {exc}", path) from None

    seen = set()
    for f in sc.flows:
        if f.flow_id in seen:
            raise ScenarioError(f"duplicate flow id {f.flow_id!r}", path)
        seen.add(f.flow_id)
    for i, f in enumerate(sc.flows):
        f.core = i % sc.cores

    if sc.mode is Mode.SINGLE_THREAD and sc.cores < 1:
        raise ScenarioError("cores must be >= 1", path)

    try:
        sc.rule = RuleConfig(
            n_samples=r.get_int("rule.n_samples", 30),
            cov_threshold=r.get_float("rule.cov_threshold", 0.25),
            range_threshold=r.get_float("rule.range_threshold", 1.0),
            wifi_algorithm=r.get_algorithm("rule.wifi_algorithm",
                                           AlgorithmId.WESTWOOD),
            default_algorithm=r.get_algorithm("rule.default_algorithm",
                                              AlgorithmId.BBR_LITE),
            enabled=r.get_bool("rule.enabled", True),
        )
    except ValueError as exc:
        raise ScenarioError(f"rule: {exc}", path) from None

    for ident in _group_ids(entries, "switch."):
        p = f"switch.{ident}."
        t = r.get_float(p + "time_s")
        fid = r.raw(p + "flow")
        if fid is None:
            r.error(p + "flow", f"switch {ident!r}: missing flow")
        if fid not in seen:
            r.error(p + "flow", f"switch {ident!r}: unknown flow {fid!r}")
        if not 0.0 <= t <= sc.duration:
            r.error(p + "time_s",
                    f"switch {ident!r}: time {t} outside [0, {sc.duration}]")
        sc.switch_schedule.append(
            ScheduledSwitch(t, fid, r.get_algorithm(p + "algorithm"))
        )
    sc.switch_schedule.sort(key=lambda s: s.time)

    for key in entries:
        if not key.startswith("expect."):
            continue
        value, lineno = entries[key]
        r.used.add(key)
        if key == "expect.all_flows_complete":
            sc.expectations.append(("all_flows_complete", r.get_bool(key, True)))
        elif key.startswith("expect.flow.") and key.endswith(".algorithm_history"):
            fid = key[len("expect.flow."):-len(".algorithm_history")]
            if fid not in seen:
                raise ScenarioError(f"expectation for unknown flow {fid!r}",
                                    path, lineno)
            algs = [algorithm_from_name(v.strip()) for v in value.split("|")]
            sc.expectations.append(("algorithm_history", fid, algs))
        elif key.startswith("expect.flow.") and key.endswith(".fct_max_s"):
            fid = key[len("expect.flow."):-len(".fct_max_s")]
            if fid not in seen:
                raise ScenarioError(f"expectation for unknown flow {fid!r}",
                                    path, lineno)
            sc.expectations.append(("fct_max_s", fid, r.get_float(key)))
        else:
            raise ScenarioError(f"unknown expectation key {key!r}", path, lineno)

    for key, (_, lineno) in entries.items():
        if key not in r.used:
            raise ScenarioError(f"unknown key {key!r}", path, lineno)
    return sc
