from __future__ import annotations

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cocstab.scaled import ScaledMatrix, relative_difference, spectral_norm


def _matrices(dim=2):
    return st.lists(
        st.floats(min_value=-3.0, max_value=3.0, allow_nan=False), min_size=dim * dim, max_size=dim * dim
    ).map(lambda vals: np.array(vals).reshape(dim, dim))


@given(_matrices())
@settings(max_examples=100)
def test_roundtrip_preserves_entries(m):
    assume(0.1 <= spectral_norm(m) <= 10.0)
    sm = ScaledMatrix.from_matrix(m)
    back = sm.matmul(ScaledMatrix.identity(2)).to_matrix()
    assert np.allclose(back, m, rtol=1e-15, atol=1e-300)


def test_roundtrip_at_extreme_scales():
    # one exp/log renormalization costs about |logscale| ulps of relative error
    for scale in (1e-9, 1e9):
        m = scale * np.array([[1.0, 2.0], [-0.5, 0.25]])
        back = ScaledMatrix.from_matrix(m).to_matrix()
        assert np.allclose(back, m, rtol=1e-13)


@given(_matrices(), _matrices(), _matrices())
@settings(max_examples=100)
def test_product_associative(a, b, c):
    sa, sb, sc = (ScaledMatrix.from_matrix(x) for x in (a, b, c))
    left = sa.matmul(sb).matmul(sc)
    right = sa.matmul(sb.matmul(sc))
    assert relative_difference(left, right) <= 3e-12


def test_long_scalar_power_log_norm():
    half = ScaledMatrix.from_matrix(0.5 * np.eye(2))
    product = ScaledMatrix.identity(2)
    for _ in range(10):
        product = half.matmul(product)
    assert product.log_norm == pytest.approx(10 * np.log(0.5), abs=1e-12)


def test_tiny_products_stay_representable():
    # 10^5 factors of 0.5 would underflow any direct representation; the
    # accumulated log error budget is 1e-12 per factor
    n = 10**5
    half = ScaledMatrix.from_matrix(np.array([[0.5]]))
    product = ScaledMatrix.identity(1)
    for _ in range(n):
        product = half.matmul(product)
    assert abs(product.log_norm - n * np.log(0.5)) <= 1e-12 * n
    assert 0.5 <= spectral_norm(product.unit) <= 2.0


def test_zero_matrix_sentinel_absorbs():
    z = ScaledMatrix.from_matrix(np.zeros((2, 2)))
    assert z.is_zero and z.log_norm == float("-inf")
    a = ScaledMatrix.from_matrix(np.eye(2))
    assert a.matmul(z).is_zero
    assert z.matmul(a).log_norm == float("-inf")


def test_apply_tracks_magnitude():
    m = ScaledMatrix.from_matrix(np.diag([0.5, 0.25]))
    unit, logmag = m.apply(np.array([3.0, 0.0]))
    assert np.allclose(unit, [1.0, 0.0])
    assert logmag == pytest.approx(np.log(1.5), abs=1e-12)
    _, neg = m.apply(np.zeros(2))
    assert neg == float("-inf")


def test_relative_difference_edge_cases():
    z = ScaledMatrix.zero(2)
    a = ScaledMatrix.from_matrix(np.eye(2))
    assert relative_difference(z, ScaledMatrix.zero(2)) == 0.0
    assert relative_difference(z, a) == float("inf")
    assert relative_difference(a, a) == 0.0
