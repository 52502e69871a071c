"""Streaming statistics, the classification rule, and the drain loop."""

import math
import random

import numpy as np
import pytest

from ccswitch.agent import AckSample
from ccswitch.cc import AlgorithmId
from ccswitch.pipes import pipe_open
from ccswitch.selector import (
    RuleConfig,
    Selector,
    SelectorFlowState,
    eval_wifi_rule,
    selector_close,
    selector_open,
    update_stats,
)
from ccswitch.switching import SwitchCommand


def sample(rtt, flow="f", t=0.0, loss=False):
    return AckSample(flow, t, rtt, 1500, 0.0, loss, 0)


class TestUpdateStats:
    def test_constant_series(self):
        st = SelectorFlowState("f")
        for _ in range(3):
            update_stats(st, sample(0.010))
        assert st.rtt_mean == pytest.approx(0.010)
        assert st.rtt_std == pytest.approx(0.0, abs=1e-15)
        assert st.rtt_min == st.rtt_max == 0.010

    def test_three_point_oracle(self):
        # mean 0.030, population std sqrt((0.01^2 + 0 + 0.01^2)/3)
        st = SelectorFlowState("f")
        for r in (0.020, 0.030, 0.040):
            update_stats(st, sample(r))
        assert st.rtt_mean == pytest.approx(0.030)
        assert st.rtt_std == pytest.approx(0.008164965809, rel=1e-9)
        assert st.rtt_min == 0.020
        assert st.rtt_max == 0.040

    def test_single_sample_degenerate(self):
        st = SelectorFlowState("f")
        update_stats(st, sample(0.050))
        assert st.rtt_cov == 0.0  # undefined, guarded to zero
        assert st.rtt_norm_range == 0.0

    def test_rtt_cap_stops_statistics_not_counters(self):
        st = SelectorFlowState("f")
        for i in range(10):
            update_stats(st, sample(0.01 * (i + 1)), max_rtt_samples=4)
        assert st.rtt_cnt == 4
        assert st.samples_seen == 10
        assert st.rtt_max == 0.040

    def test_loss_and_rto_samples_counted_but_not_folded(self):
        st = SelectorFlowState("f")
        update_stats(st, sample(None, loss=True))
        update_stats(st, sample(0.030))
        assert st.rtt_cnt == 1
        assert st.loss_events == 1
        assert st.samples_seen == 2

    def test_streaming_matches_batch_recomputation(self):
        rng = random.Random(424242)
        for _ in range(50):
            n = rng.randrange(2, 400)
            xs = [0.005 + rng.random() * 0.3 for _ in range(n)]
            st = SelectorFlowState("f")
            for x in xs:
                update_stats(st, sample(x))
            arr = np.array(xs)
            assert st.rtt_mean == pytest.approx(arr.mean(), rel=1e-9)
            assert st.rtt_std == pytest.approx(arr.std(), rel=1e-9, abs=1e-15)
            assert st.rtt_min == arr.min()
            assert st.rtt_max == arr.max()

    def test_mean_between_min_and_max(self):
        rng = random.Random(7)
        st = SelectorFlowState("f")
        for _ in range(100):
            update_stats(st, sample(0.01 + rng.random() * 0.1))
            assert st.rtt_min <= st.rtt_mean <= st.rtt_max


class TestWifiRule:
    def cfg(self, **kw):
        return RuleConfig(**kw)

    def test_constant_rtts_never_fire(self):
        st = SelectorFlowState("f")
        cfg = self.cfg()
        for i in range(40):
            update_stats(st, sample(0.030), cfg.n_samples)
            assert eval_wifi_rule(st, cfg) is None
        assert st.chosen is AlgorithmId.BBR_LITE  # default marker after N

    def test_thresholds_are_strict(self):
        # cov 0.272 > 0.25 but range exactly 1.0, not > 1.0: no fire.
        st = SelectorFlowState("f")
        for r in (0.020, 0.030, 0.040):
            update_stats(st, sample(r))
        assert st.rtt_cov > 0.25
        assert st.rtt_norm_range == pytest.approx(1.0)
        assert eval_wifi_rule(st, self.cfg()) is None
        assert st.chosen is None

    def test_fires_when_both_statistics_exceed(self):
        st = SelectorFlowState("f")
        st.rtt_cnt = 5
        st.rtt_mean = 0.05
        st.rtt_m2 = 5 * (0.6 * 0.05) ** 2  # population cov = 0.6
        st.rtt_min, st.rtt_max = 0.020, 0.090
        cmd = eval_wifi_rule(st, self.cfg(), now=3.0)
        assert cmd == SwitchCommand("f", AlgorithmId.WESTWOOD, 3.0)
        assert st.chosen is AlgorithmId.WESTWOOD

    def test_at_most_once_per_flow(self):
        st = SelectorFlowState("f")
        cfg = self.cfg()
        fired = 0
        rng = random.Random(5)
        for _ in range(200):
            rtt = 0.030 + (0.15 if rng.random() < 0.3 else 0.0) + rng.random() * 0.02
            update_stats(st, sample(rtt), cfg.n_samples)
            if eval_wifi_rule(st, cfg) is not None:
                fired += 1
        assert fired == 1

    def test_no_fire_after_observation_window(self):
        st = SelectorFlowState("f")
        cfg = self.cfg(n_samples=5)
        for _ in range(5):
            update_stats(st, sample(0.030), cfg.n_samples)
            eval_wifi_rule(st, cfg)
        assert st.chosen is AlgorithmId.BBR_LITE
        # Jittery samples after the window change nothing.
        update_stats(st, sample(0.300), cfg.n_samples)
        assert eval_wifi_rule(st, cfg) is None
        assert st.chosen is AlgorithmId.BBR_LITE

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RuleConfig(n_samples=1)
        with pytest.raises(ValueError):
            RuleConfig(cov_threshold=0.0)


class TestSelectorLoop:
    def make(self, **kw):
        pair = pipe_open(4096)
        return Selector(pair, RuleConfig(**kw)), pair

    def test_empty_pipe_no_commands(self):
        sel, _ = self.make()
        assert sel.tick(0.002) == []

    def test_rtt_cnt_counts_valid_rtt_samples_only(self):
        sel, pair = self.make()
        for i in range(30):
            rtt = None if i % 3 == 0 else 0.030
            pair.up.push(sample(rtt, t=i * 0.001, loss=rtt is None))
        assert len(pair.up) == 30
        sel.tick(0.040)
        st = sel.flows["f"]
        assert st.samples_seen == 30
        assert st.rtt_cnt == 20

    def test_jittery_flow_yields_exactly_one_command(self):
        sel, pair = self.make()
        rng = random.Random(11)
        for i in range(60):
            rtt = 0.040 + rng.random() * 0.02 + (0.120 if i == 7 else 0.0)
            pair.up.push(sample(rtt, t=i * 0.002))
            sel.tick(i * 0.002)
        cmds = [c for c in pair.down.drain_batch(100)]
        assert len(cmds) == 1
        assert cmds[0].new_algorithm is AlgorithmId.WESTWOOD
        assert len(sel.classifications) == 1

    def test_downward_overflow_is_a_hard_failure(self):
        pair = pipe_open(4)
        sel = Selector(pair, RuleConfig())
        for _ in range(4):
            pair.down.push(SwitchCommand("x", AlgorithmId.CUBIC, 0.0))
        st = SelectorFlowState("f")
        st.rtt_cnt = 4
        st.rtt_mean, st.rtt_m2 = 0.05, 4 * (0.6 * 0.05) ** 2
        st.rtt_min, st.rtt_max = 0.02, 0.09
        sel.flows["f"] = st
        pair.up.push(sample(0.200, t=0.0))
        with pytest.raises(RuntimeError, match="overflow"):
            sel.tick(0.002)

    def test_lifecycle(self):
        pair = pipe_open(64)
        handle = selector_open(pair)
        counters = selector_close(handle)
        assert counters["up_pushed"] == 0
        with pytest.raises(RuntimeError):
            selector_close(handle)
        with pytest.raises(RuntimeError):
            handle.tick(1.0)

    def test_freshness_every_queued_sample_folds_on_next_tick(self):
        sel, pair = self.make()
        for i in range(100):
            pair.up.push(sample(0.030, t=0.0))
        sel.tick(0.002)
        assert sel.flows["f"].samples_seen == 100
        assert len(pair.up) == 0
