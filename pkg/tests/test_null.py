import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from depstat.benchgen import MixConfig, generate_instance
from depstat.errors import DegenerateNullError, InvalidInputError, UnsupportedStatisticError
from depstat.null import (
    NullModel,
    TestConfig,
    empirical_quantile,
    fit_gamma,
    gamma_null,
    gamma_test,
    permutation_null,
    permutation_p_value,
    permutation_test,
    run_test,
)
from depstat.sample import PairedSample
from depstat.stats import StatKind


def independent_sample(seed, n, d=1):
    return generate_instance(MixConfig(theta=0.0, d=d, n=n, seed=seed))


class TestEmpiricalQuantile:
    def test_examples(self):
        assert empirical_quantile(np.arange(1, 101), 0.95) == 95
        assert empirical_quantile([4.2], 0.3) == 4.2
        assert empirical_quantile([3, 1, 2], 0.5) == 2

    def test_ceiling_order_statistic_at_float_boundaries(self):
        # 0.95 * 200 is not exactly 190 in binary; the 190th order statistic is still meant
        values = np.arange(1, 201)
        assert empirical_quantile(values, 0.95) == 190
        assert empirical_quantile(np.arange(1, 21), 0.95) == 19

    def test_clamped(self):
        assert empirical_quantile([5, 6, 7], 0.01) == 5
        assert empirical_quantile([5, 6, 7], 0.999) == 7

    def test_empty(self):
        with pytest.raises(InvalidInputError):
            empirical_quantile([], 0.5)


class TestConfigValidation:
    @pytest.mark.parametrize("kwargs", [{"alpha": 0.0}, {"alpha": 1.0}, {"permutations": 0}, {"seed": -1},
                                        {"bandwidth": (1.0, 0.0)}])
    def test_invalid(self, kwargs):
        with pytest.raises(InvalidInputError):
            TestConfig(**kwargs)

    def test_parsing(self):
        c = TestConfig(stat="dcov", null_model="gamma", bandwidth=(1, 2))
        assert c.stat is StatKind.DCOV and c.null_model is NullModel.GAMMA
        assert c.bandwidth == (1.0, 2.0) and c.bandwidth_policy == "fixed"


class TestPermutationNull:
    def test_identity_permutation_reproduces_observed(self):
        sample = independent_sample(1, 40)
        for kind in StatKind:
            config = TestConfig(stat=kind, permutations=1)
            result = permutation_test(sample, config, permute=lambda i: np.arange(40))
            assert result.null.values[0] == result.statistic.value
            assert result.p_value == 1.0
            assert not result.reject

    def test_deterministic(self):
        sample = independent_sample(2, 60, d=2)
        config = TestConfig(stat="hsic", permutations=50, seed=123)
        a = permutation_null(sample, config)
        b = permutation_null(sample, config)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.threshold == b.threshold

    def test_permutation_streams_do_not_depend_on_count(self):
        sample = independent_sample(3, 30)
        short = permutation_null(sample, TestConfig(stat="dcov", permutations=10, seed=9))
        long = permutation_null(sample, TestConfig(stat="dcov", permutations=25, seed=9))
        np.testing.assert_array_equal(short.values, long.values[:10])

    def test_bandwidths_held_fixed(self):
        sample = independent_sample(4, 50)
        result = permutation_test(sample, TestConfig(stat="hsic", permutations=5))
        assert result.bandwidths is not None
        fixed = permutation_test(sample, TestConfig(stat="hsic", permutations=5, bandwidth=result.bandwidths))
        np.testing.assert_array_equal(result.null.values, fixed.null.values)

    def test_feuerverger_requires_univariate(self):
        from depstat.errors import UnsupportedDimensionError

        with pytest.raises(UnsupportedDimensionError):
            permutation_null(independent_sample(5, 20, d=2), TestConfig(stat="feuerverger"))

    def test_calibration_hsic_n500(self):
        below = 0
        for r in range(300):
            sample = PairedSample(*(np.random.default_rng([77, r, k]).standard_normal(500) for k in (0, 1)))
            result = permutation_test(sample, TestConfig(stat="hsic", permutations=200, seed=r))
            below += result.statistic.value <= result.threshold
        assert 0.92 <= below / 300 <= 0.98


class TestPValues:
    def test_larger_than_every_null_value(self):
        assert permutation_p_value(1000.0, np.arange(200.0)) == pytest.approx(1 / 201)
        x = np.linspace(-2, 2, 60)
        result = permutation_test(PairedSample(x, x**2), TestConfig(stat="dcov", permutations=200))
        assert result.p_value == pytest.approx(1 / 201, abs=1e-15)
        assert result.reject

    def test_smaller_than_every_null_value(self):
        assert permutation_p_value(-1.0, np.arange(1.0, 201.0)) == 1.0

    def test_ties_count_toward_null(self):
        sample = PairedSample(np.arange(30.0), np.full(30, 2.0))
        result = permutation_test(sample, TestConfig(stat="dcov", permutations=200))
        assert np.all(result.null.values == result.statistic.value)
        assert result.p_value == 1.0 and not result.reject

    @given(st.lists(st.floats(0, 10), min_size=1, max_size=50), st.floats(0, 10), st.floats(0, 10))
    def test_monotone_in_observed(self, values, a, b):
        lo, hi = sorted((a, b))
        assert permutation_p_value(hi, values) <= permutation_p_value(lo, values)
        assert 1 / (len(values) + 1) <= permutation_p_value(lo, values) <= 1

    def test_binomial_calibration_dcov_n128(self):
        rejections = 0
        for r in range(300):
            sample = independent_sample(1000 + r, 128)
            rejections += permutation_test(sample, TestConfig(stat="dcov", permutations=200, seed=r)).reject
        lo, hi = sps.binom.interval(0.99, 300, 0.05)
        assert lo <= rejections <= hi


class TestGamma:
    def test_moment_fit_recovers_parameters(self):
        draws = np.random.default_rng(0).gamma(2.0, 3.0, size=5000)
        shape, scale = fit_gamma(draws)
        assert shape == pytest.approx(2.0, rel=0.15)
        assert scale == pytest.approx(3.0, rel=0.15)

    def test_exponential_special_case(self):
        # mean 1 and unbiased variance 1 -> shape 1, scale 1
        h = math.sqrt(0.5)
        null = gamma_null([1.0 - h, 1.0 + h], 0.05)
        assert null.gamma_shape == pytest.approx(1.0, rel=1e-12)
        assert null.threshold == pytest.approx(-null.gamma_scale * math.log(0.05), abs=1e-6)
        # 3 +- sqrt(4.5): mean 3, variance 9 -> shape 1, scale 3
        scaled = gamma_null([3.0 - math.sqrt(4.5), 3.0 + math.sqrt(4.5)], 0.05)
        assert scaled.gamma_shape == pytest.approx(1.0, rel=1e-12)
        assert scaled.threshold == pytest.approx(-3.0 * math.log(0.05), abs=1e-6)

    def test_degenerate_null(self):
        with pytest.raises(DegenerateNullError):
            fit_gamma([0.5, 0.5, 0.5])
        sample = PairedSample(np.arange(20.0), np.zeros(20))
        with pytest.raises(DegenerateNullError):
            gamma_test(sample, TestConfig(stat="hsic", null_model="gamma"))

    @pytest.mark.parametrize("kind", ["dcov", "dcor", "hsic-u", "feuerverger"])
    def test_only_biased_hsic(self, kind):
        with pytest.raises(UnsupportedStatisticError):
            gamma_test(independent_sample(6, 20), TestConfig(stat=kind, null_model="gamma"))

    def test_result_fields(self):
        sample = independent_sample(7, 100)
        result = run_test(sample, TestConfig(stat="hsic", null_model="gamma", gamma_permutations=40, seed=3))
        assert result.null.model is NullModel.GAMMA and result.null.size == 40
        assert result.reject == (result.statistic.value > result.threshold)
        assert 0.0 <= result.p_value <= 1.0
        assert (result.p_value < 0.05) == result.reject
