import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from likertkit import CorrelationMatrix, DataError, mean_ci, pearson_matrix, pearson_r
from likertkit.basestats import chisq_cdf, chisq_sf, normal_cdf, normal_ppf


def test_identical_and_reversed_columns():
    x = np.array([1, 3, 2, 5, 4, 7], dtype=float)
    r = pearson_matrix(np.column_stack([x, x, 8 - x])).r
    assert r[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert r[0, 2] == pytest.approx(-1.0, abs=1e-15)


def test_pearson_against_covariance_oracle():
    x, y = [1, 2, 3, 4], [2, 4, 5, 9]
    cov = oracles.sample_cov(list(zip(x, y)))
    expected = cov[0][1] / math.sqrt(cov[0][0] * cov[1][1])
    assert pearson_r(x, y) == pytest.approx(expected, abs=1e-14)
    assert pearson_matrix(np.column_stack([x, y])).r[0, 1] == pytest.approx(expected, abs=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (12, 3), elements=st.integers(1, 7)),
       st.floats(0.1, 10), st.floats(-10, 10))
def test_pearson_affine_invariance(x, scale, shift):
    if np.any(np.ptp(x, axis=0) == 0):
        return
    y = x.copy()
    y[:, 1] = scale * y[:, 1] + shift
    assert np.allclose(pearson_matrix(x).r, pearson_matrix(y).r, atol=1e-12)


def test_pearson_errors():
    with pytest.raises(DataError, match="zero variance"):
        pearson_matrix(np.array([[1, 2], [1, 3], [1, 4]]))
    with pytest.raises(DataError, match="at least 3"):
        pearson_matrix(np.array([[1, 2], [2, 3]]))
    with pytest.raises(DataError):
        pearson_r([1, 1, 1], [1, 2, 3])


def test_correlation_matrix_rejects_asymmetry():
    with pytest.raises(DataError):
        CorrelationMatrix.from_array([[1, 0.2], [0.3, 1]])
    sub = CorrelationMatrix.from_array(np.eye(3), ("a", "b", "c")).select(["c", "a"])
    assert sub.items == ("c", "a")


def test_normal_quantile_against_bisection():
    assert normal_ppf(0.975) == pytest.approx(1.959964, abs=1e-6)
    for q in (0.001, 0.05, 0.3, 0.5, 0.9, 0.999):
        assert normal_ppf(q) == pytest.approx(oracles.normal_quantile(q), abs=1e-12)
        assert normal_cdf(normal_ppf(q)) == pytest.approx(q, abs=1e-14)


def test_mean_ci_examples():
    assert mean_ci([3.0] * 10).half_width == 0
    x = np.array([-1.0, 1.0] * 50)
    x = x / x.std(ddof=1)
    ci = mean_ci(x)
    assert ci.half_width == pytest.approx(0.196, abs=5e-4)
    assert ci.lower < ci.mean < ci.upper
    with pytest.raises(DataError):
        mean_ci([1.0])


def test_mean_ci_width_scales_with_root_n():
    base = np.arange(1.0, 8.0)
    w1 = mean_ci(np.tile(base, 10)).half_width
    w4 = mean_ci(np.tile(base, 40)).half_width
    # same spread (up to the n-1 correction), four times the data
    s1 = np.tile(base, 10).std(ddof=1)
    s4 = np.tile(base, 40).std(ddof=1)
    assert (w1 / s1) / (w4 / s4) == pytest.approx(2.0, rel=1e-12)


def test_chisq_examples():
    assert chisq_sf(0, 3) == 1
    assert chisq_sf(2 * math.log(2), 2) == pytest.approx(0.5, abs=1e-15)
    assert chisq_sf(11.07, 5) == pytest.approx(0.050, abs=5e-4)


@pytest.mark.parametrize("x,df", [(0.5, 1), (3.0, 2), (11.07, 5), (28.05, 1), (40.0, 25),
                                  (200.0, 190), (1e-3, 7)])
def test_chisq_against_quadrature(x, df):
    assert chisq_sf(x, df) == pytest.approx(oracles.chisq_sf(x, df), rel=1e-10, abs=1e-300)


@given(st.floats(0, 500), st.floats(0, 50), st.integers(1, 60))
def test_chisq_monotone_and_complementary(x, dx, df):
    assert chisq_sf(x + dx, df) <= chisq_sf(x, df)
    assert chisq_sf(x, df) + chisq_cdf(x, df) == pytest.approx(1.0, abs=1e-12)


def test_chisq_errors():
    with pytest.raises(DataError):
        chisq_sf(1.0, 0)
    with pytest.raises(DataError):
        chisq_sf(-1.0, 2)
