import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import hadamard

from wynerziv import DimensionError
from wynerziv.publicrand import (
    RandomStream,
    draw_normals,
    draw_signs,
    draw_subset,
    draw_uniform,
    draw_uniforms,
    fwht,
    rotate,
    rotate_inverse,
)

SQRT2 = math.sqrt(2.0)


class TestFwht:
    def test_d1_identity(self):
        np.testing.assert_array_equal(fwht([3.0]), [3.0])

    def test_d2_hand(self):
        np.testing.assert_allclose(fwht([1.0, 0.0]), [1 / SQRT2, 1 / SQRT2], atol=1e-15)

    def test_d4_hand(self):
        np.testing.assert_allclose(fwht([1.0, 1.0, 1.0, 1.0]), [2.0, 0.0, 0.0, 0.0], atol=1e-15)

    @pytest.mark.parametrize("d", [1, 2, 4, 8, 64, 512])
    def test_matches_dense_sylvester_matrix(self, d):
        x = np.random.default_rng(d).normal(size=d)
        expected = hadamard(d) @ x / math.sqrt(d)
        np.testing.assert_allclose(fwht(x), expected, atol=1e-12)

    def test_batched_rows(self):
        X = np.random.default_rng(0).normal(size=(5, 16))
        np.testing.assert_allclose(fwht(X), X @ hadamard(16).T / 4.0, atol=1e-12)

    def test_does_not_mutate_input(self):
        x = np.arange(8.0)
        fwht(x)
        np.testing.assert_array_equal(x, np.arange(8.0))

    @pytest.mark.parametrize("d", [0, 3, 6, 12])
    def test_rejects_non_power_of_two(self, d):
        with pytest.raises(DimensionError):
            fwht(np.ones(d))

    def test_involution(self):
        x = np.random.default_rng(1).normal(size=128)
        np.testing.assert_allclose(fwht(fwht(x)), x, atol=1e-12)


class TestRotate:
    def test_all_plus_signs_is_fwht(self):
        x = np.random.default_rng(2).normal(size=16)
        np.testing.assert_allclose(rotate(x, np.ones(16)), fwht(x))

    def test_zero_vector(self):
        np.testing.assert_array_equal(rotate(np.zeros(8), -np.ones(8)), np.zeros(8))

    def test_d2_hand(self):
        np.testing.assert_allclose(rotate([1.0, 1.0], [1, -1]), [0.0, SQRT2], atol=1e-15)

    def test_inverse_d2_hand(self):
        np.testing.assert_allclose(rotate_inverse([0.0, SQRT2], [1, -1]), [1.0, 1.0], atol=1e-15)

    def test_inverse_of_basis_vector(self):
        s = draw_signs(RandomStream(4), 8)
        e1 = np.eye(8)[0]
        np.testing.assert_allclose(rotate_inverse(rotate(e1, s), s), e1, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            rotate(np.ones(8), np.ones(4))
        with pytest.raises(DimensionError):
            rotate_inverse(np.ones(8), np.ones(16))

    @settings(max_examples=60, deadline=None)
    @given(
        log_d=st.integers(0, 9),
        seed=st.integers(0, 2**32),
        scale=st.floats(1e-6, 1e6),
    )
    def test_unitarity(self, log_d, seed, scale):
        d = 2**log_d
        rng = np.random.default_rng(seed)
        x = scale * rng.normal(size=d)
        s = draw_signs(RandomStream(seed), d)
        rx = rotate(x, s)
        assert np.linalg.norm(rx) == pytest.approx(np.linalg.norm(x), rel=1e-9)
        np.testing.assert_allclose(rotate_inverse(rx, s), x, atol=1e-9 * max(1.0, scale))

    def test_subgaussian_coordinates(self):
        # fraction of rotated coordinates beyond t vs the two-sided subgaussian tail
        d, trials, delta = 64, 10_000, 1.0
        diff = np.zeros(d)
        diff[:3] = [0.6, -0.64, 0.48]  # norm 1, concentrated on few coordinates
        stream = RandomStream(11, 0, "subg")
        signs = np.vstack([draw_signs(stream, d) for _ in range(trials)])
        rotated = fwht(signs * diff)
        for t in (0.2, 0.3, 0.4):
            frac = np.mean(np.abs(rotated) >= t)
            bound = 2 * math.exp(-t**2 * d / (2 * delta**2))
            slack = 3 * math.sqrt(bound * (1 - min(bound, 1)) / (trials * d)) if bound < 1 else 0
            assert frac <= bound + slack


class TestStreams:
    def test_same_triple_same_draws(self):
        a = RandomStream(99, 3, "trial:0")
        b = RandomStream(99, 3, "trial:0")
        np.testing.assert_array_equal(draw_signs(a, 50), draw_signs(b, 50))
        assert draw_uniform(a, 0, 1) == draw_uniform(b, 0, 1)

    def test_replay_restarts(self):
        a = RandomStream(5, 1, "x")
        first = draw_uniforms(a, 0, 1, 10)
        np.testing.assert_array_equal(draw_uniforms(a.replay(), 0, 1, 10), first)

    def test_distinct_clients_distinct_draws(self):
        a = draw_uniforms(RandomStream(5, 1, "x"), 0, 1, 1000)
        b = draw_uniforms(RandomStream(5, 2, "x"), 0, 1, 1000)
        c = draw_uniforms(RandomStream(5, 1, "y"), 0, 1, 1000)
        assert not np.array_equal(a, b) and not np.array_equal(a, c)
        # independence proxy
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(1000)

    def test_seed_range(self):
        RandomStream(2**64 - 1)
        with pytest.raises(ValueError):
            RandomStream(2**64)
        with pytest.raises(ValueError):
            RandomStream(-1)

    def test_child_is_deterministic(self):
        a = RandomStream(1, 0, "t").child("signs")
        b = RandomStream(1, 0, "t/signs")
        assert draw_uniform(a, 0, 1) == draw_uniform(b, 0, 1)


class TestDraws:
    def test_signs_values_and_balance(self):
        d = 100_000
        s = draw_signs(RandomStream(7), d)
        assert set(np.unique(s)) <= {-1, 1}
        assert abs(s.mean()) <= 3 / math.sqrt(d)

    def test_single_sign(self):
        assert draw_signs(RandomStream(8), 1)[0] in (-1, 1)

    def test_subset_full(self):
        np.testing.assert_array_equal(draw_subset(RandomStream(1), 9, 9), np.arange(9))

    def test_subset_full_consumes_nothing(self):
        a, b = RandomStream(1), RandomStream(1)
        draw_subset(a, 16, 16)
        assert draw_uniform(a, 0, 1) == draw_uniform(b, 0, 1)

    def test_subset_uniform_single_index(self):
        stream = RandomStream(12, 0, "subset")
        trials = 100_000
        counts = np.zeros(4)
        for _ in range(trials):
            counts[draw_subset(stream, 4, 1)[0]] += 1
        np.testing.assert_allclose(counts / trials, 0.25, atol=0.01)

    def test_subset_pairs_uniform(self):
        # all 6 two-subsets of range(4) equally likely
        stream = RandomStream(13, 0, "subset")
        trials = 30_000
        seen = {}
        for _ in range(trials):
            key = tuple(draw_subset(stream, 4, 2))
            seen[key] = seen.get(key, 0) + 1
        assert len(seen) == 6
        for c in seen.values():
            assert abs(c / trials - 1 / 6) < 4 * math.sqrt((1 / 6) * (5 / 6) / trials)

    @settings(max_examples=50, deadline=None)
    @given(d=st.integers(1, 300), data=st.data())
    def test_subset_invariants(self, d, data):
        m = data.draw(st.integers(1, d))
        idx = draw_subset(RandomStream(d * 1000 + m), d, m)
        assert idx.size == m
        assert np.all(np.diff(idx) > 0)
        assert idx.min() >= 0 and idx.max() < d

    def test_subset_same_seed(self):
        np.testing.assert_array_equal(draw_subset(RandomStream(3), 50, 7), draw_subset(RandomStream(3), 50, 7))

    @pytest.mark.parametrize("m", [0, 11])
    def test_subset_bad_size(self, m):
        with pytest.raises(ValueError):
            draw_subset(RandomStream(0), 10, m)

    def test_uniform_mean(self):
        u = draw_uniforms(RandomStream(21), 0.0, 1.0, 1_000_000)
        assert u.min() >= 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 0.002

    def test_uniform_symmetric_interval(self):
        M, trials = 3.0, 200_000
        u = draw_uniforms(RandomStream(22), -M, M, trials)
        assert abs(u.mean()) < 3 * M / math.sqrt(trials)

    def test_uniform_scalar_same_seed(self):
        assert draw_uniform(RandomStream(5), -2, 2) == draw_uniform(RandomStream(5), -2, 2)

    def test_uniform_bad_interval(self):
        with pytest.raises(ValueError):
            draw_uniform(RandomStream(0), 1.0, 1.0)
        with pytest.raises(ValueError):
            draw_uniforms(RandomStream(0), 2.0, 1.0, 3)

    def test_normals_moments(self):
        z = draw_normals(RandomStream(23), 200_001)
        assert z.shape == (200_001,)
        assert abs(z.mean()) < 0.01
        assert abs(z.var() - 1) < 0.01
