import math

import pytest
from hypothesis import given, strategies as st

from qultra.errors import PoleError, SeriesDomainError
from qultra.qseries import (
    LogScaledReal,
    csum,
    paired_imag_qpoch,
    phi32_terminating,
    qpoch,
    qpoch_inf,
    qpoch_inf_multi,
)

qs = st.floats(0.05, 0.95)


def test_qpoch_small_values():
    assert qpoch(0.5, 0.5, 0) == 1.0
    assert qpoch(0.5, 0.5, 2) == pytest.approx(0.375, rel=1e-15)


def test_qpoch_inf_oracle():
    # 50-digit mpmath value
    assert qpoch_inf(0.5, 0.5) == pytest.approx(0.28878809508660242128, rel=1e-14)


def test_paired_imaginary_qpoch():
    assert paired_imag_qpoch(1.0, 0.5, 2) == pytest.approx(2.5, rel=1e-15)


@given(q=qs, x=st.floats(-2, 2), n=st.integers(0, 20), m=st.integers(0, 20))
def test_qpoch_splits(q, x, n, m):
    lhs = qpoch(x, q, n + m)
    rhs = qpoch(x, q, n) * qpoch(x * q**n, q, m)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@given(q=qs, x=st.floats(-0.9, 0.9), y=st.floats(-0.9, 0.9))
def test_qpoch_inf_multi_is_product(q, x, y):
    assert qpoch_inf_multi((x, y), q) == pytest.approx(qpoch_inf(x, q) * qpoch_inf(y, q), rel=1e-13)


@given(q=qs)
def test_euler_identity(q):
    assert qpoch_inf(-q, q) * qpoch_inf(q, q * q) == pytest.approx(1.0, rel=1e-12)


def test_csum_exact_cancellation():
    assert csum([1e16, 1.0, -1e16]) == 1.0
    assert csum([1j, 1e16, -1e16 + 1j]) == 2j


def test_log_scaled_real_roundtrip():
    x = LogScaledReal.from_float(-3.0) * LogScaledReal.from_float(2.0)
    assert x.to_float() == pytest.approx(-6.0)
    assert LogScaledReal.from_mantissa(0.5, 2000).log_mag == pytest.approx(1999 * math.log(2.0))
    with pytest.raises(ZeroDivisionError):
        x / LogScaledReal.from_float(0.0)


def test_phi32_terminates_at_qinv():
    q = 0.5
    # terminating 3phi2 with a q^{-1} numerator has exactly two terms
    val = phi32_terminating((1 / q, 0.2, 0.3), (0.4, 0.6), q, 0.7, 1)
    expect = 1 + (1 - 1 / q) * (1 - 0.2) * (1 - 0.3) / ((1 - 0.4) * (1 - 0.6) * (1 - q)) * 0.7
    assert val == pytest.approx(expect, rel=1e-14)


def test_phi32_errors():
    with pytest.raises(SeriesDomainError):
        phi32_terminating((0.9, 0.2, 0.3), (0.4, 0.6), 0.5, 0.7, 3)
    with pytest.raises(PoleError):
        phi32_terminating((8.0, 0.2, 0.3), (1.0, 0.6), 0.5, 0.7, 3)
