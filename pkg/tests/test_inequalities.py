import math

import numpy as np
import pytest

from mmpflow.inequalities import (
    KINDS,
    RatioSample,
    lemma21_ratio_a,
    lemma21_ratio_b,
    lemma22_ratio,
    suite,
)
from mmpflow.spectral import GridSpec


def test_ratio_sample_flags():
    assert RatioSample(1.0, 0.0).degenerate
    assert RatioSample(1.0, 0.0).ratio is None
    assert not RatioSample(0.0, 0.0).degenerate
    assert RatioSample(1.0, 4.0).ratio == 0.25


def abs_sine_sum(n):
    """Rectangle-rule integral of |sin| over one period (the lhs is a discrete L^1 norm)."""
    x = np.arange(n) * 2 * np.pi / n
    return float(np.sum(np.abs(np.sin(x))) * 2 * np.pi / n)


class TestProductBounds:
    def test_separable_sines(self, grid16):
        x, y, z = grid16.mesh()
        smp = lemma21_ratio_a(np.sin(x), np.sin(y), np.sin(z), grid16)
        assert smp.lhs == pytest.approx(abs_sine_sum(16) ** 3, rel=1e-12)
        assert smp.rhs == pytest.approx((4 * math.pi**3) ** 1.5, rel=1e-12)

    def test_variant_b_separable(self, grid16):
        x, y, z = grid16.mesh()
        f = np.sin(x) * np.sin(y)
        smp = lemma21_ratio_b(f, np.sin(z), np.ones(grid16.shape), grid16)
        # f and its three derivatives share the norm sqrt(2 pi^3); sin z and
        # its derivative have sqrt(4 pi^3); the constant has (2 pi)^(3/2)
        nf = math.sqrt(2 * math.pi**3)
        ng = math.sqrt(4 * math.pi**3)
        assert smp.rhs == pytest.approx(nf * ng * (2 * math.pi) ** 1.5, rel=1e-12)
        assert smp.lhs == pytest.approx(abs_sine_sum(16) ** 3, rel=1e-12)

    def test_scale_invariance(self, grid16):
        rng = np.random.default_rng(0)
        f, g, h = rng.standard_normal((3,) + grid16.shape)
        a = lemma21_ratio_a(f, g, h, grid16).ratio
        b = lemma21_ratio_a(3 * f, 0.5 * g, 7 * h, grid16).ratio
        assert b == pytest.approx(a, rel=1e-13)

    def test_shape_checked(self, grid8):
        with pytest.raises(ValueError):
            lemma21_ratio_a(np.zeros((8, 8, 8)), np.zeros((8, 8, 4)), np.zeros((8, 8, 8)), grid8)


class TestInterpolation:
    def test_sine_max_norm(self):
        x = np.arange(64) * 2 * np.pi / 64
        smp = lemma22_ratio(np.sin(x), math.inf, 1.0)
        assert smp.lhs == pytest.approx(1.0)
        assert smp.ratio == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)

    def test_q2_is_identity(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal(32)
        f -= f.mean()
        assert lemma22_ratio(f, 2, 0.7).ratio == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("q, s", [(1.5, 1.0), (math.inf, 0.5), (4, 0.25)])
    def test_parameter_range(self, q, s):
        with pytest.raises(ValueError):
            lemma22_ratio(np.sin(np.arange(8.0)), q, s)

    def test_requires_mean_free(self):
        with pytest.raises(ValueError):
            lemma22_ratio(np.ones(8) + np.sin(np.arange(8) * np.pi / 4), 4, 1.0)


class TestSuite:
    def test_small_suite(self):
        grid = GridSpec.cube(16)
        rep = suite("lemma21_a", grid, 12, seed=3, k_peak=3)
        assert rep.n_samples == 12 and rep.failures == 0 and rep.skipped == 0
        assert rep.max_homogeneity_defect < 1e-12
        assert rep.quantiles[0.5] <= rep.quantiles[0.9] <= rep.max_ratio
        again = suite("lemma21_a", grid, 12, seed=3, k_peak=3)
        assert again.samples_csv() == rep.samples_csv()
        assert "max_ratio" in rep.to_text()
        assert rep.summary_line().startswith("lemma21_a")

    def test_seed_sets_disjoint(self):
        grid = GridSpec.cube(8)
        a = suite("lemma21_b", grid, 5, seed=1)
        b = suite("lemma21_b", grid, 5, seed=2)
        assert not {s.seed for s in a.samples} & {s.seed for s in b.samples}

    def test_interpolation_suite(self):
        grid = GridSpec.cube(64)
        rep = suite("lemma22", grid, 20, seed=0, k_peak=6, q=4, s=1.0)
        assert rep.failures == 0 and rep.max_ratio < 2

    def test_unknown_kind(self, grid8):
        with pytest.raises(ValueError):
            suite("lemma99", grid8, 3)
        assert set(KINDS) == {"lemma21_a", "lemma21_b", "lemma22"}
