import math

import pytest

from togglenet.health import APT_WINDOW, HealthMonitor, apt_cutoff, rct_cutoff
from togglenet.rng import (
    LABEL_NPUB, LABEL_RAW, LABEL_TRN, EntropyFailure, FixedSource,
    OsEntropySource, StuckSource, TriviumPrng, reseed,
)
from togglenet.trivium import Trivium


class TestRctCutoff:
    def test_full_entropy(self):
        assert rct_cutoff(1.0) == 21

    def test_half_entropy(self):
        assert rct_cutoff(0.5) == 41

    def test_rejects_bad_h(self):
        for h in (0, -1, 1.5):
            with pytest.raises(ValueError):
                rct_cutoff(h)


class TestAptCutoff:
    def test_exact_integer_oracle_h1(self):
        # independent route: smallest c with sum_{k >= c-1} C(1023, k) < 2^1003
        n = APT_WINDOW - 1
        tail = 0
        expected = None
        for k in range(n, -1, -1):
            tail += math.comb(n, k)
            if tail >= 2 ** (n - 20):
                expected = k + 2
                break
        assert apt_cutoff(1.0) == expected

    def test_scipy_oracle_various_h(self):
        binom = pytest.importorskip("scipy.stats").binom
        n = APT_WINDOW - 1
        for h in (1.0, 0.75, 0.5, 0.25):
            p = 2.0 ** -h
            expected = next(
                c for c in range(1, n + 3) if binom.sf(c - 2, n, p) < 2 ** -20.0
            )
            assert apt_cutoff(h) == expected, h

    def test_monotone_in_h(self):
        assert apt_cutoff(0.5) > apt_cutoff(1.0)


class TestMonitor:
    def test_stuck_source_alarms_at_sample_21(self):
        mon = HealthMonitor(h=1.0)
        for i in range(1, 40):
            ok = mon.rct_step(0)
            if not ok:
                assert i == 21
                assert mon.alarm == "rct"
                break
        else:
            pytest.fail("no alarm")

    def test_alternating_bits_never_alarm(self):
        mon = HealthMonitor(h=1.0)
        for i in range(100_000):
            assert mon.step(i & 1)
        assert mon.alarm is None

    def test_all_ones_window_trips_apt(self):
        mon = HealthMonitor(h=1.0)
        tripped = None
        for i in range(APT_WINDOW):
            if not mon.apt_step(1):
                tripped = i
                break
        assert tripped is not None
        assert mon.alarm == "apt"
        assert tripped + 1 == mon.c_apt

    def test_balanced_window_no_apt_alarm(self):
        mon = HealthMonitor(h=1.0)
        stream = Trivium.warmed_up(b"\x07" * 10, bytes(10)).keystream_bits(APT_WINDOW)
        for i in range(APT_WINDOW):
            assert mon.apt_step((stream >> i) & 1)

    def test_alarm_latches_until_reset(self):
        mon = HealthMonitor(h=1.0)
        for _ in range(21):
            mon.rct_step(1)
        assert mon.alarm == "rct"
        assert not mon.step(0)
        mon.reset()
        assert mon.alarm is None
        assert mon.step(0)

    def test_false_alarm_rate_sanity(self):
        # 1e5 fair bits: expected alarms ~0.05, this seeded stream gives none
        mon = HealthMonitor(h=1.0)
        stream = Trivium.warmed_up(b"\x01" * 10, b"\x02" * 10).keystream_bits(100_000)
        alarms = 0
        for i in range(100_000):
            mon.step((stream >> i) & 1)
            if mon.alarm:
                alarms += 1
                mon.reset()
        assert alarms == 0


class TestReseed:
    def test_fixed_source_reproducible(self):
        prng1 = reseed(FixedSource(bytes(range(16))))
        prng2 = reseed(FixedSource(bytes(range(16))))
        assert prng1.draw(LABEL_TRN, 64) == prng2.draw(LABEL_TRN, 64)

    def test_stuck_source_rejected_by_rct(self):
        with pytest.raises(EntropyFailure, match="rct"):
            reseed(StuckSource(0))
        with pytest.raises(EntropyFailure, match="rct"):
            reseed(StuckSource(1))

    def test_os_reseeds_differ(self):
        a = reseed(OsEntropySource()).draw(LABEL_TRN, 32)
        b = reseed(OsEntropySource()).draw(LABEL_TRN, 32)
        assert a != b

    def test_seed_split_matches_spec_layout(self):
        # 128-bit seed: first 80 bits key, next 48 bits lead the IV, zero tail
        seed = bytes(range(16))
        prng = TriviumPrng(seed)
        manual = Trivium.warmed_up(seed[:10], seed[10:16] + bytes(4))
        assert prng.draw(LABEL_RAW, 64) == manual.keystream(64)

    def test_labeled_substreams_disjoint(self):
        prng = TriviumPrng(bytes(range(16)))
        raw = prng.draw(LABEL_RAW, 64)
        trn = prng.draw(LABEL_TRN, 64)
        npub = prng.draw(LABEL_NPUB, 64)
        assert raw != trn and trn != npub and raw != npub

    def test_substream_draws_are_sequential(self):
        prng = TriviumPrng(bytes(16))
        first = prng.draw(LABEL_TRN, 32)
        second = prng.draw(LABEL_TRN, 32)
        both = TriviumPrng(bytes(16)).draw(LABEL_TRN, 64)
        assert first + second == both

    def test_fixed_source_exhaustion(self):
        src = FixedSource(bytes(8))
        with pytest.raises(EntropyFailure):
            src.read(16)

    def test_seed_length_validation(self):
        with pytest.raises(ValueError):
            TriviumPrng(bytes(15))
