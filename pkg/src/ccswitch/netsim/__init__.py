"""Deterministic discrete-event network simulation."""

from .core import EventKind, Link, SimEvent, Simulator
from .flow import Flow
from .report import SimReport, TRACE_EVENTS, TRACE_FULL, TRACE_NONE
from .specs import (
    FlowSpec,
    JitterKind,
    JitterSpec,
    LinkSpec,
    WIFI_LIKE_DEFAULT,
    sample_jitter,
)

__all__ = [
    "EventKind",
    "Flow",
    "FlowSpec",
    "JitterKind",
    "JitterSpec",
    "Link",
    "LinkSpec",
    "SimEvent",
    "SimReport",
    "Simulator",
    "WIFI_LIKE_DEFAULT",
    "sample_jitter",
    "TRACE_FULL",
    "TRACE_EVENTS",
    "TRACE_NONE",
]
