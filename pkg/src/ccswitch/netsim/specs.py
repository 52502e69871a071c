"""Static descriptions of links, delay jitter, and flows."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from ..cc import AlgorithmId


class JitterKind(enum.Enum):
    NONE = "none"
    WIFI_LIKE = "wifi_like"


@dataclass(slots=True, frozen=True)
class JitterSpec:
    """Extra one-way delay model.

    wifi_like draws uniform(0, base_spread) per packet plus, with
    probability spike_prob, an additional spike_delay. Defaults are the
    calibration used by the wireless path class in shipped scenarios.
    """

    kind: JitterKind = JitterKind.NONE
    base_spread: float = 0.0
    spike_prob: float = 0.0
    spike_delay: float = 0.0

    def __post_init__(self):
        if self.base_spread < 0 or self.spike_delay < 0:
            raise ValueError("jitter delays must be >= 0")
        if not 0.0 <= self.spike_prob <= 1.0:
            raise ValueError("spike_prob must be in [0, 1]")


WIFI_LIKE_DEFAULT = JitterSpec(
    kind=JitterKind.WIFI_LIKE,
    base_spread=0.020,
    spike_prob=0.15,
    spike_delay=0.080,
)


def sample_jitter(spec: JitterSpec, rng) -> float:
    """One extra-delay draw; always >= 0, exactly 0 for kind=none."""
    if spec.kind is JitterKind.NONE:
        return 0.0
    extra = rng.uniform(0.0, spec.base_spread)
    if rng.random() < spec.spike_prob:
        extra += spec.spike_delay
    return extra


@dataclass(slots=True, frozen=True)
class LinkSpec:
    """One bottleneck path: rate, one-way delay, random loss, droptail queue."""

    bandwidth: float  # bits/second
    prop_delay: float  # seconds, one-way
    loss_ratio: float = 0.0
    queue_capacity: int = 50  # packets, including the one in service
    jitter: JitterSpec = field(default_factory=JitterSpec)

    def __post_init__(self):
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.prop_delay < 0:
            raise ValueError("prop_delay must be >= 0")
        if not 0.0 <= self.loss_ratio < 1.0:
            raise ValueError("loss_ratio must be in [0, 1)")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")


@dataclass(slots=True)
class FlowSpec:
    """One sender/receiver pair and its transfer."""

    flow_id: str
    link: str  # LinkSpec name in the scenario's link table
    start_time: float = 0.0
    transfer_size: int | None = None  # bytes; None means unbounded
    initial_algorithm: AlgorithmId = AlgorithmId.CUBIC
    mss: int = 1500
    core: int = 0

    def __post_init__(self):
        if self.transfer_size is not None and self.transfer_size <= 0:
            raise ValueError("transfer_size must be > 0 or unbounded")
        if self.mss <= 0:
            raise ValueError("mss must be > 0")
        if self.start_time < 0:
            raise ValueError("start_time must be >= 0")
