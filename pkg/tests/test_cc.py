"""Algorithm state machines: defaults, dynamics, and shared invariants."""

import math
import random

import pytest

from ccswitch.cc import (
    AlgorithmId,
    CcEvent,
    EventKind,
    Phase,
    cc_init,
    cc_note_sent,
    cc_on_event,
    cc_sending_allowance,
)

ALL = list(AlgorithmId)
MSS = 1500


def ack(now, acked=MSS, rtt=0.030):
    return CcEvent(EventKind.ACK, now, acked, rtt)


def feed_acks(state, n, start=0.0, step=0.01, rtt=0.030):
    t = start
    for _ in range(n):
        cc_on_event(state, ack(t, rtt=rtt))
        t += step
    return t


class TestInitDefaults:
    def test_vegas_defaults(self):
        st = cc_init(AlgorithmId.VEGAS, 0.0)
        assert st.observed.base_rtt == math.inf
        assert st.observed.count_rtt == 0

    def test_bbr_defaults(self):
        st = cc_init(AlgorithmId.BBR_LITE, 0.0)
        assert st.observed.max_bw == 0.0
        assert st.observed.min_rtt == math.inf
        assert st.rate.pacing_rate is not None

    def test_cubic_defaults(self):
        st = cc_init(AlgorithmId.CUBIC, 0.0)
        assert st.observed.last_max_cwnd == 0.0
        assert st.observed.delay_min == math.inf  # unset sentinel

    @pytest.mark.parametrize("alg", ALL)
    def test_common_defaults(self, alg):
        st = cc_init(alg, 0.0)
        assert st.rate.cwnd == 10.0
        assert st.rate.ssthresh == math.inf
        assert st.phase is Phase.SLOW_START
        # pacing_rate present exactly for the pacing-based algorithm
        assert (st.rate.pacing_rate is not None) == (alg is AlgorithmId.BBR_LITE)


class TestDynamics:
    def test_cubic_slow_start_one_per_ack(self):
        st = cc_init(AlgorithmId.CUBIC, 0.0)
        cc_on_event(st, ack(0.03))
        assert st.rate.cwnd == 11.0

    def test_westwood_loss_uses_bandwidth_ssthresh(self):
        # ssthresh = floor(250000 * 0.1 / 1500) = floor(16.67) = 16
        st = cc_init(AlgorithmId.WESTWOOD, 0.0, mss=MSS)
        st.observed.bandwidth_estimation = 250000.0
        st.observed.rtt_min = 0.1
        st.rate.cwnd = 20.0
        cc_on_event(st, CcEvent(EventKind.LOSS_DETECTED, 1.0))
        assert st.rate.ssthresh == 16
        assert st.rate.cwnd == 16
        assert st.phase is Phase.LOSS_RECOVERY

    def test_vegas_round_grows_when_gap_below_alpha(self):
        # diff = cwnd*(rtt-base)/rtt = 10*0.001/0.101 = 0.099 < alpha -> +1
        st = cc_init(AlgorithmId.VEGAS, 0.0)
        st.phase = Phase.CONGESTION_AVOIDANCE
        cc_on_event(st, ack(0.1, rtt=0.100))
        cc_on_event(st, ack(0.2, rtt=0.101))
        st.observed.base_rtt = 0.100
        st.observed.min_rtt = 0.101
        before = st.rate.cwnd
        cc_on_event(st, CcEvent(EventKind.ROUND_END, 0.3))
        assert st.rate.cwnd == before + 1

    def test_vegas_round_shrinks_when_gap_above_beta(self):
        # diff = 20*(0.15-0.1)/0.15 = 6.67 > beta -> -1
        st = cc_init(AlgorithmId.VEGAS, 0.0)
        st.phase = Phase.CONGESTION_AVOIDANCE
        st.rate.cwnd = 20.0
        cc_on_event(st, ack(0.1, rtt=0.100))
        cc_on_event(st, ack(0.2, rtt=0.150))
        st.observed.base_rtt = 0.100
        st.observed.min_rtt = 0.150
        cc_on_event(st, CcEvent(EventKind.ROUND_END, 0.3))
        assert st.rate.cwnd == 19.0

    def test_westwood_bandwidth_updates_only_at_round_end(self):
        st = cc_init(AlgorithmId.WESTWOOD, 0.0)
        feed_acks(st, 10, step=0.01)
        assert st.observed.bandwidth_estimation == 0.0
        cc_on_event(st, CcEvent(EventKind.ROUND_END, 0.1))  # opens the window
        feed_acks(st, 10, start=0.1, step=0.01)
        cc_on_event(st, CcEvent(EventKind.ROUND_END, 0.2))
        # 10 acks of 1500 B over 0.1 s
        assert st.observed.bandwidth_estimation == pytest.approx(150000.0)

    def test_cubic_plateau_then_growth_in_avoidance(self):
        st = cc_init(AlgorithmId.CUBIC, 0.0)
        st.rate.cwnd = 100.0
        st.observed.last_max_cwnd = 0.0
        st.phase = Phase.CONGESTION_AVOIDANCE
        cc_on_event(st, ack(1.0))  # establishes the epoch, K = 0
        w1 = st.rate.cwnd
        cc_on_event(st, ack(3.0))  # t=2s: target = 100 + 0.4*8 = 103.2
        assert st.rate.cwnd > w1


class TestAllowance:
    def test_window_full(self):
        st = cc_init(AlgorithmId.CUBIC, 0.0, mss=MSS)
        assert cc_sending_allowance(st, 15000, 0.0) == 0

    def test_window_empty(self):
        st = cc_init(AlgorithmId.CUBIC, 0.0, mss=MSS)
        assert cc_sending_allowance(st, 0, 0.0) == 15000

    def test_pacing_token_accrual(self):
        st = cc_init(AlgorithmId.BBR_LITE, 0.0, mss=MSS)
        st.rate.pacing_rate = 150000.0
        st.rate.cwnd = 100.0
        assert cc_sending_allowance(st, 0, 0.010) == 1500

    def test_pacing_debit_on_send(self):
        st = cc_init(AlgorithmId.BBR_LITE, 0.0, mss=MSS)
        st.rate.pacing_rate = 150000.0
        st.rate.cwnd = 100.0
        assert cc_sending_allowance(st, 0, 0.020) == 3000
        cc_note_sent(st, 1500, 0.020)
        assert cc_sending_allowance(st, 1500, 0.020) == 1500

    def test_fractional_cwnd_floored(self):
        st = cc_init(AlgorithmId.CUBIC, 0.0, mss=MSS)
        st.rate.cwnd = 10.9
        assert cc_sending_allowance(st, 0, 0.0) == 15000


def random_event(rng, t):
    kind = rng.choice(list(EventKind))
    if kind is EventKind.ACK:
        return CcEvent(kind, t, rng.choice([0, MSS, 2 * MSS]),
                       0.01 + 0.2 * rng.random())
    return CcEvent(kind, t)


class TestInvariants:
    @pytest.mark.parametrize("alg", ALL)
    def test_cwnd_at_least_one_packet_always(self, alg):
        rng = random.Random(hash(alg.value) & 0xFFFF)
        st = cc_init(alg, 0.0)
        t = 0.0
        for _ in range(2000):
            t += rng.random() * 0.05
            ev = random_event(rng, t)
            try:
                cc_on_event(st, ev)
            except AssertionError:
                raise
            assert st.rate.cwnd >= 1.0
            assert not math.isnan(st.rate.cwnd)

    @pytest.mark.parametrize("alg", ALL)
    def test_monotone_slow_start(self, alg):
        st = cc_init(alg, 0.0)
        prev = st.rate.cwnd
        t = 0.0
        rng = random.Random(17)
        for _ in range(200):
            t += 0.01
            cc_on_event(st, ack(t, rtt=0.02 + 0.01 * rng.random()))
            if st.phase is not Phase.SLOW_START:
                break
            assert st.rate.cwnd >= prev
            prev = st.rate.cwnd

    @pytest.mark.parametrize("alg", [AlgorithmId.CUBIC, AlgorithmId.WESTWOOD,
                                     AlgorithmId.VEGAS])
    def test_loss_strictly_reduces_cwnd(self, alg):
        rng = random.Random(99)
        for trial in range(50):
            st = cc_init(alg, 0.0)
            t = feed_acks(st, rng.randrange(1, 60), rtt=0.02 + 0.05 * rng.random())
            if rng.random() < 0.5:
                cc_on_event(st, CcEvent(EventKind.ROUND_END, t))
            before = st.rate.cwnd
            cc_on_event(st, CcEvent(EventKind.LOSS_DETECTED, t))
            if before > 1.0:
                assert st.rate.cwnd < before
            else:
                assert st.rate.cwnd == 1.0

    def test_bbr_loss_never_increases_allowance(self):
        st = cc_init(AlgorithmId.BBR_LITE, 0.0)
        t = feed_acks(st, 50)
        before = cc_sending_allowance(st, 0, t)
        cc_on_event(st, CcEvent(EventKind.LOSS_DETECTED, t))
        assert cc_sending_allowance(st, 0, t) <= before
        cc_on_event(st, CcEvent(EventKind.RTO_FIRED, t))
        assert cc_sending_allowance(st, 0, t) <= before

    @pytest.mark.parametrize("alg", ALL)
    @pytest.mark.parametrize("first", list(EventKind))
    def test_reset_closure_any_first_event_is_safe(self, alg, first):
        # Fresh defaults must survive any legal event stream with no
        # division by an unset sentinel.
        st = cc_init(alg, 0.0)
        ev = (ack(0.01) if first is EventKind.ACK else CcEvent(first, 0.01))
        cc_on_event(st, ev)
        cc_on_event(st, ack(0.02))
        cc_on_event(st, CcEvent(EventKind.ROUND_END, 0.03))
        assert math.isfinite(st.rate.cwnd)

    @pytest.mark.parametrize("alg", ALL)
    def test_phase_lattice_is_respected(self, alg):
        rng = random.Random(31)
        st = cc_init(alg, 0.0)
        t = 0.0
        prev = st.phase
        for _ in range(1000):
            t += 0.01
            cc_on_event(st, random_event(rng, t))
            cur = st.phase
            if cur is not prev:
                legal = {
                    Phase.SLOW_START: {Phase.CONGESTION_AVOIDANCE,
                                       Phase.LOSS_RECOVERY},
                    Phase.CONGESTION_AVOIDANCE: {Phase.LOSS_RECOVERY},
                    Phase.LOSS_RECOVERY: {Phase.CONGESTION_AVOIDANCE},
                }[prev]
                assert cur in legal
            prev = cur
