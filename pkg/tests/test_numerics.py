"""Special functions, keyed RNG streams, and the categorical sampler.

Reference values come from scipy.special / scipy.stats, plus a handful of
closed-form constants asserted directly.
"""

import math

import numpy as np
import numpy.testing as npt
import pytest
import scipy.special as sps
import scipy.stats

from relssvi.errors import NumericalError
from relssvi.numerics import (
    categorical_sample,
    child_rng,
    digamma,
    log_gamma,
    make_rng,
    trigamma,
)

EULER_GAMMA = 0.5772156649015329


def combined_error(got, want):
    """Min of absolute and relative error, elementwise.

    Near the zeros of log_gamma (x = 1, 2) relative error is meaningless,
    and for trigamma at tiny arguments (values ~1/x^2) absolute error is;
    the combination is tight everywhere.
    """
    got = np.asarray(got, dtype=float)
    want = np.asarray(want, dtype=float)
    abs_err = np.abs(got - want)
    rel_err = abs_err / np.maximum(np.abs(want), 1e-300)
    return np.minimum(abs_err, rel_err)


def argument_grid():
    rng = np.random.default_rng(20240817)
    log_spread = rng.uniform(np.log(1e-3), np.log(1e6), size=10_000)
    return np.exp(log_spread)


class TestDigamma:
    def test_known_constants(self):
        assert abs(digamma(1.0) - (-EULER_GAMMA)) < 1e-10
        assert abs(digamma(2.0) - (1.0 - EULER_GAMMA)) < 1e-10
        assert abs(digamma(0.5) - (-EULER_GAMMA - 2.0 * math.log(2.0))) < 1e-10

    def test_matches_scipy_over_wide_range(self):
        x = argument_grid()
        err = combined_error(digamma(x), sps.digamma(x))
        assert err.max() < 1e-10

    def test_recurrence(self):
        rng = np.random.default_rng(7)
        x = np.exp(rng.uniform(np.log(1e-2), np.log(1e3), size=10_000))
        npt.assert_allclose(digamma(x + 1.0), digamma(x) + 1.0 / x,
                            rtol=1e-10, atol=1e-10)

    def test_scalar_in_scalar_out(self):
        out = digamma(3.5)
        assert isinstance(out, float)
        arr = digamma(np.array([1.0, 2.0]))
        assert isinstance(arr, np.ndarray) and arr.shape == (2,)

    @pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
    def test_domain_errors(self, bad):
        with pytest.raises(NumericalError):
            digamma(bad)
        with pytest.raises(NumericalError):
            digamma(np.array([1.0, bad]))


class TestTrigamma:
    def test_known_constants(self):
        assert abs(trigamma(1.0) - math.pi ** 2 / 6.0) < 1e-10
        assert abs(trigamma(2.0) - (math.pi ** 2 / 6.0 - 1.0)) < 1e-10
        assert abs(trigamma(3.0) - (math.pi ** 2 / 6.0 - 1.25)) < 1e-10
        assert abs(trigamma(0.5) - math.pi ** 2 / 2.0) < 1e-10

    def test_matches_scipy_over_wide_range(self):
        x = argument_grid()
        err = combined_error(trigamma(x), sps.polygamma(1, x))
        assert err.max() < 1e-10

    def test_recurrence(self):
        rng = np.random.default_rng(8)
        x = np.exp(rng.uniform(np.log(1e-2), np.log(1e3), size=10_000))
        npt.assert_allclose(trigamma(x + 1.0), trigamma(x) - 1.0 / x ** 2,
                            rtol=1e-10, atol=1e-10)

    def test_is_derivative_of_digamma(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(0.5, 100.0, size=200)
        h = 1e-5
        numeric = (digamma(x + h) - digamma(x - h)) / (2.0 * h)
        npt.assert_allclose(trigamma(x), numeric, rtol=1e-5)

    @pytest.mark.parametrize("bad", [0.0, -0.5, float("nan")])
    def test_domain_errors(self, bad):
        with pytest.raises(NumericalError):
            trigamma(bad)


class TestLogGamma:
    def test_known_constants(self):
        assert abs(log_gamma(1.0)) < 1e-10
        assert abs(log_gamma(2.0)) < 1e-10
        assert abs(log_gamma(5.0) - math.log(24.0)) < 1e-10
        assert abs(log_gamma(0.5) - 0.5 * math.log(math.pi)) < 1e-10

    def test_matches_scipy_over_wide_range(self):
        x = argument_grid()
        err = combined_error(log_gamma(x), sps.gammaln(x))
        assert err.max() < 1e-10

    def test_recurrence(self):
        rng = np.random.default_rng(10)
        x = np.exp(rng.uniform(np.log(1e-2), np.log(1e3), size=10_000))
        npt.assert_allclose(log_gamma(x + 1.0), log_gamma(x) + np.log(x),
                            rtol=1e-10, atol=1e-10)

    def test_derivative_is_digamma(self):
        rng = np.random.default_rng(11)
        x = rng.uniform(0.5, 50.0, size=200)
        h = 1e-5
        numeric = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h)
        npt.assert_allclose(digamma(x), numeric, rtol=1e-5)

    @pytest.mark.parametrize("bad", [0.0, -2.0, float("nan")])
    def test_domain_errors(self, bad):
        with pytest.raises(NumericalError):
            log_gamma(bad)


class TestKeyedStreams:
    def test_same_key_same_stream(self):
        a = child_rng(42, "minibatch", 3)
        b = child_rng(42, "minibatch", 3)
        npt.assert_array_equal(a.integers(0, 1 << 30, size=16),
                               b.integers(0, 1 << 30, size=16))

    def test_distinct_keys_distinct_streams(self):
        draws = set()
        for key in [("minibatch", 0), ("minibatch", 1), ("chain", 0),
                    ("chain", 0, "doc-a"), ("chain", 0, "doc-b")]:
            stream = child_rng(99, *key)
            draws.add(tuple(stream.integers(0, 1 << 30, size=8).tolist()))
        assert len(draws) == 5

    def test_root_seed_matters(self):
        a = child_rng(1, "gibbs").integers(0, 1 << 30, size=8)
        b = child_rng(2, "gibbs").integers(0, 1 << 30, size=8)
        assert not np.array_equal(a, b)

    def test_make_rng_reproducible(self):
        npt.assert_array_equal(make_rng(5).integers(0, 100, size=10),
                               make_rng(5).integers(0, 100, size=10))


class TestCategoricalSample:
    def test_degenerate_weights(self):
        rng = make_rng(0)
        weights = np.array([0.0, 7.5, 0.0])
        assert all(categorical_sample(rng, weights) == 1 for _ in range(100))

    def test_two_category_frequency(self):
        rng = make_rng(123)
        weights = np.array([1.0, 1.0])
        n = 100_000
        draws = np.array([categorical_sample(rng, weights) for _ in range(n)])
        freq = draws.mean()
        # 4.5 sigma band for a fair binomial with n = 1e5
        assert abs(freq - 0.5) < 4.5 * 0.5 / math.sqrt(n)

    def test_chi_square_goodness_of_fit(self):
        rng = make_rng(2024)
        weights = np.array([0.10, 0.20, 0.30, 0.25, 0.15])
        n = 100_000
        counts = np.zeros(5)
        for _ in range(n):
            counts[categorical_sample(rng, weights)] += 1
        expected = weights / weights.sum() * n
        result = scipy.stats.chisquare(counts, expected)
        assert result.pvalue > 0.001

    def test_unnormalized_weights_allowed(self):
        rng = make_rng(3)
        a = [categorical_sample(rng, np.array([2.0, 6.0])) for _ in range(500)]
        rng = make_rng(3)
        b = [categorical_sample(rng, np.array([1.0, 3.0])) for _ in range(500)]
        assert a == b

    @pytest.mark.parametrize("bad", [
        np.array([0.0, 0.0]),
        np.array([1.0, -0.5]),
        np.array([1.0, float("nan")]),
        np.array([1.0, float("inf")]),
    ])
    def test_invalid_weights(self, bad):
        with pytest.raises(NumericalError):
            categorical_sample(make_rng(0), bad)
