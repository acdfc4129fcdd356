import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wynerziv import (
    BrdaqMessage,
    BudgetError,
    ConstraintError,
    DimensionError,
    RandomStream,
    RdaqMessage,
    brdaq_decode,
    brdaq_encode,
    daq_decode,
    daq_encode,
    iterated_log_star,
    rdaq_decode,
    rdaq_encode,
    rdaq_levels,
    srdaq_decode,
    srdaq_encode,
    unknown_params,
)
from wynerziv.protocol import Codec, make_codec, monte_carlo, pair_at_distance
from wynerziv.wz_unknown import exp_tower


class FixedDraws:
    """Stream stand-in whose generator returns preset values in [0, 1)."""

    def __init__(self, values):
        self._values = np.asarray(values, dtype=np.float64)

    @property
    def generator(self):
        return self

    def random(self, size=None):
        n = int(np.prod(size)) if size is not None else 1
        out, self._values = self._values[:n], self._values[n:]
        return out.reshape(size) if size is not None else float(out[0])

    def integers(self, lo, hi, size, dtype):
        return np.zeros(size, dtype=dtype) + (hi - 1)


def ball_pair(d, delta, seed):
    return pair_at_distance(d, delta, "sphere", RandomStream(seed, 0, "pair"), unit_ball=True)


class TestLogStar:
    @pytest.mark.parametrize("a,expected", [(0.5, 0), (-3.0, 0), (1.0, 1), (math.e, 2), (170.67, 3), (1e6, 3)])
    def test_values(self, a, expected):
        assert iterated_log_star(a) == expected

    def test_tower(self):
        assert exp_tower(0) == 1.0
        assert exp_tower(1) == pytest.approx(math.e)
        assert exp_tower(2) == pytest.approx(math.e**math.e)
        assert exp_tower(5) == math.inf

    @given(st.floats(1.0, 1e300))
    def test_tower_inverts(self, a):
        j = iterated_log_star(a)
        assert exp_tower(j - 1) <= a * (1 + 1e-12)
        assert a < exp_tower(j) * (1 + 1e-12)


class TestLevels:
    def test_d6(self):
        lv = rdaq_levels(6)
        assert lv.h == 2 and lv.log_h == 1
        np.testing.assert_allclose(lv.M, [1.0, math.sqrt(math.e)], rtol=1e-12)

    def test_d1024(self):
        lv = rdaq_levels(1024)
        assert lv.h == 4
        assert lv.M[0] ** 2 == pytest.approx(6 / 1024)

    @pytest.mark.parametrize("d", [1, 2, 4, 8, 64, 1024, 2**16])
    def test_invariants(self, d):
        lv = rdaq_levels(d)
        assert np.all(np.diff(lv.M) > 0)
        assert lv.M[-1] >= 1
        assert lv.h == 2 ** math.ceil(math.log2(1 + iterated_log_star(d / 6)))
        finite = np.isfinite(lv.M)
        expected = np.sqrt(6 / d * np.array([exp_tower(j) for j in range(lv.h)]))
        np.testing.assert_allclose(lv.M[finite], expected[finite], rtol=1e-12)


class TestUnknownParams:
    def test_low(self):
        p = unknown_params(1024, 64)
        assert (p.h, p.mu_d, p.message_bits) == (4, 10, 60)

    def test_boosted(self):
        p = unknown_params(64, 640, "boosted")
        assert p.h == 4 and iterated_log_star(64 / 6) == 2
        # largest N whose 0..N counts fit: 2^floor((10-2)/4) - 1
        assert p.N == 3
        assert p.message_bits == 64 * (4 * 2 + 2) <= 640

    def test_budget_too_small(self):
        with pytest.raises(BudgetError):
            unknown_params(1024, 11)

    def test_boosted_too_small(self):
        with pytest.raises(BudgetError):
            unknown_params(64, 64 * 5, "boosted")

    @settings(max_examples=60, deadline=None)
    @given(log_d=st.integers(3, 14), data=st.data())
    def test_budget_invariant(self, log_d, data):
        d = 2**log_d
        lv = rdaq_levels(d)
        lo = 2 * (lv.h + lv.log_h)
        if lo <= d:
            r = data.draw(st.integers(lo, d))
            assert unknown_params(d, r).message_bits <= r
        m = data.draw(st.integers(lv.h + lv.log_h, 40))
        assert unknown_params(d, m * d, "boosted").message_bits <= m * d


class TestDaq:
    def test_d1_x_one(self):
        for seed in range(20):
            assert daq_encode([1.0], RandomStream(seed))[0] == 1

    def test_zero_vector_half(self):
        bits = daq_encode(np.zeros(10_000), RandomStream(1))
        assert abs(bits.mean() - 0.5) < 4 * 0.5 / 100

    def test_hand_regions(self):
        # U = 2v - 1; x=0.5, y=0: U <= 0 -> 0, 0 < U <= 0.5 -> 2, U > 0.5 -> 0
        for v, expected in [(0.25, 0.0), (0.6, 2.0), (0.9, 0.0)]:
            bits = daq_encode([0.5], FixedDraws([v]))
            assert daq_decode(bits, [0.0], FixedDraws([v]))[0] == expected

    @pytest.mark.parametrize("x,y", [(0.5, 0.0), (-0.7, 0.2), (0.3, 0.3), (1.0, -1.0)])
    def test_d1_enumeration(self, x, y):
        # integrate over the regions cut by x and y
        cuts = sorted({-1.0, 1.0, x, y})
        mean = msq = 0.0
        for a, b in zip(cuts, cuts[1:]):
            v = (0.5 * (a + b) + 1) / 2
            out = daq_decode(daq_encode([x], FixedDraws([v])), [y], FixedDraws([v]))[0]
            p = (b - a) / 2
            mean += p * out
            msq += p * (out - x) ** 2
        assert mean == pytest.approx(x, abs=1e-12)
        assert msq == pytest.approx(2 * abs(x - y) - (x - y) ** 2, abs=1e-12)

    def test_x_equals_y(self):
        x = ball_pair(16, 0.3, 0)[0]
        s = RandomStream(2)
        np.testing.assert_array_equal(daq_decode(daq_encode(x, s), x, s.replay()), x)

    def test_norm_violation(self):
        with pytest.raises(ConstraintError):
            daq_encode(np.ones(4), RandomStream(0))

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            daq_decode(np.zeros(3, dtype=np.uint8), np.zeros(4), RandomStream(0))

    def test_monte_carlo_d32(self):
        x, y = ball_pair(32, 0.2, 3)
        stats = monte_carlo(make_codec("daq", d=32), x, y, 20_000, seed=4)
        closed = 2 * np.abs(x - y).sum() - np.sum((x - y) ** 2)
        assert abs(stats["mse"] - closed) <= 3 * stats["mse_stderr"]
        z = np.abs(stats["mean"] - x) / np.sqrt(stats["coord_var"] / 20_000)
        assert np.all(z <= 4.5)


class TestRdaq:
    def test_small_x_zero_scale(self):
        lv = rdaq_levels(64)
        x = np.full(64, 0.5 * lv.M[0] / 8)
        msg = rdaq_encode(x, lv, RandomStream(0))
        assert not msg.scales.any()

    def test_scales_cover_unit_vectors(self):
        lv = rdaq_levels(8)
        for seed in range(20):
            x = ball_pair(8, 0.0, seed)[0]
            x = x / np.linalg.norm(x)
            msg = rdaq_encode(x, lv, RandomStream(seed))
            assert np.all(msg.scales < lv.h)

    def test_message_size(self):
        lv = rdaq_levels(64)
        msg = rdaq_encode(ball_pair(64, 0.1, 1)[0], lv, RandomStream(1))
        assert msg.bits.shape == (64, 4)
        assert msg.n_bits == 64 * (4 + 2) == msg.to_bits().size
        back = RdaqMessage.from_bytes(msg.to_bytes(), 64, 4)
        np.testing.assert_array_equal(back.bits, msg.bits)
        np.testing.assert_array_equal(back.scales, msg.scales)

    def test_x_equals_y(self):
        lv = rdaq_levels(64)
        x = ball_pair(64, 0.1, 2)[0]
        for seed in range(10):
            s = RandomStream(seed)
            np.testing.assert_allclose(rdaq_decode(rdaq_encode(x, lv, s), x, lv, s.replay()), x, atol=1e-12)

    def test_unbiased_and_mse_bound(self):
        lv = rdaq_levels(64)
        x, y = ball_pair(64, 0.1, 5)
        trials = 4000
        stats = monte_carlo(make_codec("rdaq", d=64), x, y, trials, seed=6)
        assert stats["mse"] <= 16 * math.sqrt(3) * 0.1
        z = np.abs(stats["mean"] - x) / np.sqrt(stats["coord_var"] / trials + 1e-300)
        assert np.all(z <= 4.5)
        assert lv.d == 64

    def test_malformed(self):
        lv = rdaq_levels(8)
        msg = RdaqMessage(np.zeros((8, lv.h), dtype=np.uint8), np.full(8, lv.h), lv.h)
        with pytest.raises(ValueError):
            rdaq_decode(msg, np.zeros(8), lv, RandomStream(0))
        msg = RdaqMessage(np.zeros((7, lv.h), dtype=np.uint8), np.zeros(7, dtype=np.int64), lv.h)
        with pytest.raises(DimensionError):
            rdaq_decode(msg, np.zeros(8), lv, RandomStream(0))

    def test_out_of_ball(self):
        with pytest.raises(ConstraintError):
            rdaq_encode(np.full(8, 0.5), rdaq_levels(8), RandomStream(0))


class TestSubsampled:
    def test_full_equals_rdaq(self):
        lv = rdaq_levels(32)
        x, y = ball_pair(32, 0.3, 1)
        a = srdaq_encode(x, lv, 32, RandomStream(2))
        b = rdaq_encode(x, lv, RandomStream(2))
        np.testing.assert_array_equal(a.bits, b.bits)
        np.testing.assert_array_equal(a.scales, b.scales)
        np.testing.assert_array_equal(
            srdaq_decode(a, y, lv, 32, RandomStream(2)), rdaq_decode(b, y, lv, RandomStream(2))
        )

    def test_size_and_replay(self):
        lv = rdaq_levels(1024)
        x = ball_pair(1024, 0.1, 3)[0]
        a = srdaq_encode(x, lv, 10, RandomStream(4))
        b = srdaq_encode(x, lv, 10, RandomStream(4))
        assert a.n_bits == 60 and a.to_bytes() == b.to_bytes()

    def test_x_equals_y(self):
        lv = rdaq_levels(64)
        x = ball_pair(64, 0.1, 4)[0]
        s = RandomStream(5)
        np.testing.assert_allclose(srdaq_decode(srdaq_encode(x, lv, 16, s), x, lv, 16, s.replay()), x, atol=1e-12)

    @pytest.mark.parametrize("mu_d", [0, 65])
    def test_mu_range(self, mu_d):
        with pytest.raises(BudgetError):
            srdaq_encode(np.zeros(64), rdaq_levels(64), mu_d, RandomStream(0))

    def test_length_mismatch(self):
        lv = rdaq_levels(64)
        msg = srdaq_encode(np.zeros(64), lv, 16, RandomStream(0))
        with pytest.raises(DimensionError):
            srdaq_decode(msg, np.zeros(64), lv, 15, RandomStream(0))

    def test_mse_bound(self):
        lv = rdaq_levels(64)
        x, y = ball_pair(64, 0.1, 6)
        codec = Codec("srdaq", lv, lambda v, s: srdaq_encode(v, lv, 16, s),
                      lambda m, v, s: srdaq_decode(m, v, lv, 16, s), 16 * (lv.h + lv.log_h))
        stats = monte_carlo(codec, x, y, 3000, seed=7)
        assert stats["mse"] <= 16 * math.sqrt(3) * 0.1 / (16 / 64)
        z = np.abs(stats["mean"] - x) / np.sqrt(stats["coord_var"] / 3000 + 1e-300)
        assert np.all(z <= 4.5)


class TestBoosted:
    def test_counts_and_size(self):
        lv = rdaq_levels(64)
        msg = brdaq_encode(ball_pair(64, 0.1, 1)[0], lv, 4, RandomStream(0))
        assert msg.counts.min() >= 0 and msg.counts.max() <= 4
        assert msg.count_width == 3
        assert msg.n_bits == 64 * (4 * 3 + 2) == msg.to_bits().size
        back = BrdaqMessage.from_bytes(msg.to_bytes(), 64, 4, 4)
        np.testing.assert_array_equal(back.counts, msg.counts)
        np.testing.assert_array_equal(back.scales, msg.scales)

    def test_n1_matches_rdaq_bits(self):
        lv = rdaq_levels(16)
        x = ball_pair(16, 0.2, 2)[0]
        a = brdaq_encode(x, lv, 1, RandomStream(3))
        b = rdaq_encode(x, lv, RandomStream(3))
        np.testing.assert_array_equal(a.counts, b.bits)
        np.testing.assert_array_equal(a.scales, b.scales)

    def test_x_equals_y(self):
        lv = rdaq_levels(64)
        x = ball_pair(64, 0.1, 3)[0]
        s = RandomStream(4)
        np.testing.assert_allclose(brdaq_decode(brdaq_encode(x, lv, 4, s), x, lv, 4, s.replay()), x, atol=1e-12)

    def test_bad_counts(self):
        lv = rdaq_levels(8)
        msg = BrdaqMessage(np.full((8, lv.h), 5), np.zeros(8, dtype=np.int64), lv.h, 4)
        with pytest.raises(ValueError):
            brdaq_decode(msg, np.zeros(8), lv, 4, RandomStream(0))

    def test_n_mismatch(self):
        lv = rdaq_levels(8)
        msg = brdaq_encode(np.zeros(8), lv, 2, RandomStream(0))
        with pytest.raises(ValueError):
            brdaq_decode(msg, np.zeros(8), lv, 4, RandomStream(0))

    def test_variance_scaling(self):
        x, y = ball_pair(64, 0.3, 8)
        one = monte_carlo(make_codec("brdaq", d=64, N=1), x, y, 3000, seed=9)
        four = monte_carlo(make_codec("brdaq", d=64, N=4), x, y, 3000, seed=9)
        ratio = four["mse"] / one["mse"]
        assert 0.25 * 0.8 <= ratio <= 0.25 * 1.2
