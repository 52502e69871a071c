"""Per-connection congestion-control selection and live switching.

A deterministic user-space framework: a discrete-event network simulator
drives pluggable congestion-control algorithms (cubic, westwood, vegas,
bbr_lite) behind one common state machine; a per-core agent extracts one
telemetry record per ACK and pushes it over a pre-allocated SPSC ring to
a selector, which classifies flows and issues live algorithm switches
back down the mirror ring. Switching inherits the sending rate and
resets the new algorithm's observed variables, so throughput carries
across the transition.
"""

from .agent import AckSample, Agent, ConnectionControlBlock
from .cc import (
    AlgorithmId,
    CcEvent,
    CcState,
    EventKind,
    Phase,
    RateVars,
    cc_init,
    cc_on_event,
    cc_sending_allowance,
)
from .harness import compare_runs, run_bench, run_scenario
from .netsim import (
    Flow,
    FlowSpec,
    JitterKind,
    JitterSpec,
    Link,
    LinkSpec,
    SimReport,
    Simulator,
    sample_jitter,
)
from .pipes import PipePair, RingPipe, pipe_open
from .scenario import Scenario, ScenarioError, parse_scenario, parse_scenario_text
from .selector import RuleConfig, Selector, SelectorFlowState, eval_wifi_rule, update_stats
from .switching import SwitchCommand, SwitchRecord, apply_pending, migrate

__version__ = "0.1.0"

__all__ = [
    "AckSample",
    "Agent",
    "AlgorithmId",
    "CcEvent",
    "CcState",
    "ConnectionControlBlock",
    "EventKind",
    "Flow",
    "FlowSpec",
    "JitterKind",
    "JitterSpec",
    "Link",
    "LinkSpec",
    "Phase",
    "PipePair",
    "RateVars",
    "RingPipe",
    "RuleConfig",
    "Scenario",
    "ScenarioError",
    "Selector",
    "SelectorFlowState",
    "SimReport",
    "Simulator",
    "SwitchCommand",
    "SwitchRecord",
    "apply_pending",
    "cc_init",
    "cc_on_event",
    "cc_sending_allowance",
    "compare_runs",
    "eval_wifi_rule",
    "migrate",
    "parse_scenario",
    "parse_scenario_text",
    "pipe_open",
    "run_bench",
    "run_scenario",
    "sample_jitter",
    "update_stats",
]
