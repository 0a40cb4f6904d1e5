import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qultra import FamilyParams, RepParams
from qultra.errors import ParameterError
from qultra.ultraspherical import (
    ctilde,
    ctilde_all,
    ctilde_series,
    dual_dtilde,
    mu,
    qdiff_residual,
    recurrence_coeffs,
    scaled_disagreement,
    special_value,
    special_value_closed,
)

P = FamilyParams(0.5, 1.0)

# 50-digit mpmath recurrence, frozen
ORACLE_C = [
    (10, FamilyParams(0.5, 1.0), 0.3, -1.8652298124387618299e-6),
    (30, FamilyParams(0.9, 16.0), 4 * 0.9**3, 0.0010491916294050376901),
    (25, FamilyParams(0.3, 0.0625), -0.25 * 0.3**2, -3.252058256134619925e-88),
    (7, FamilyParams(0.5, 1.0), 1.7, 27.135161484009228341),
]

# 50-digit mpmath 3phi2 with complex denominators, frozen
ORACLE_D = [
    (3, 2, FamilyParams(0.5, 1.0), -0.771875),
    (5, 4, FamilyParams(0.5, 1.0), 5.2175569534301757812),
    (4, 6, FamilyParams(0.3, 4.0), -24202.322613799918571),
    (6, 3, FamilyParams(0.9, 0.0625), 0.015163043908682627121),
]


def test_low_degrees_closed_form():
    for x in (-1.3, -0.25, 0.0, 0.5, 2.0):
        assert ctilde(0, P, x) == 1.0
        assert ctilde(1, P, x) == pytest.approx(x, rel=1e-15)
        assert ctilde(2, P, x) == pytest.approx((9 * x * x - 1) / 10, rel=1e-14, abs=1e-16)
    assert ctilde(2, P, 0.5) == pytest.approx(0.125, rel=1e-15)


@pytest.mark.parametrize("n,p,x,expect", ORACLE_C)
def test_recurrence_against_oracle(n, p, x, expect):
    assert ctilde(n, p, x) == pytest.approx(expect, rel=1e-13)


@pytest.mark.parametrize("n,x,p,expect", ORACLE_D)
def test_dual_against_oracle(n, x, p, expect):
    assert dual_dtilde(n, x, p) == pytest.approx(expect, rel=1e-13)


def test_dual_first_values():
    assert dual_dtilde(1, 1, P) == pytest.approx(0.5, rel=1e-15)
    assert dual_dtilde(0, 7, P) == 1.0
    assert mu(0, -1.0, 0.5) == 0.5


def test_recurrence_coeffs_first():
    rc = recurrence_coeffs(0, P)
    assert rc.A == pytest.approx(1.0)
    assert rc.C == pytest.approx(0.0, abs=1e-16)


def test_series_and_recurrence_agree_off_grid():
    for n in range(12):
        for x in (0.37, -0.81, 1.4):
            rec = ctilde(n, P, x)
            ser, scale = ctilde_series(n, P, x)
            assert scaled_disagreement(rec, ser, scale) < 1e-10
    assert ctilde(6, P, 0.37, "both") == pytest.approx(ctilde(6, P, 0.37))


@settings(max_examples=40, deadline=None)
@given(q=st.floats(0.2, 0.9), c=st.floats(0.05, 16.0), n=st.integers(0, 25), x=st.floats(0.01, 2.0))
def test_parity(q, c, n, x):
    p = FamilyParams(q, c)
    assert ctilde(n, p, -x) == pytest.approx((-1) ** n * ctilde(n, p, x), rel=1e-12, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(q=st.floats(0.2, 0.9), a=st.floats(0.2, 4.0), n=st.integers(0, 30), sign=st.sampled_from((1, -1)))
def test_special_value_property(q, a, n, sign):
    rep = RepParams(q, a)
    val = special_value(n, rep, sign)
    assert val == pytest.approx(sign**n * a**n * q ** (n * (n + 1) / 2), rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(q=st.floats(0.2, 0.9), a=st.floats(0.25, 4.0), n=st.integers(0, 20), k=st.integers(0, 6))
def test_qdiff_property(q, a, n, k):
    rep = RepParams(q, a)
    for lam in (a * q ** (k + 1), -a * q ** (k + 1), 0.3 * a):
        r, scale = qdiff_residual(n, rep, lam, scaled=True)
        assert abs(r) <= 1e-9 * scale


def test_ctilde_all_matches_pointwise():
    vals = ctilde_all(15, P, 0.123)
    assert np.allclose(vals, [ctilde(n, P, 0.123) for n in range(16)], rtol=1e-14, atol=0)


def test_special_closed_sign():
    rep = RepParams(0.5, 2.0)
    assert special_value_closed(3, rep, -1) == pytest.approx(-(8.0 * 0.5**6))


def test_parameter_errors():
    for bad in ((1.5, 1.0), (0.5, 0.0), (0.0, 1.0), (float("nan"), 1.0)):
        with pytest.raises(ParameterError):
            FamilyParams(*bad)
    with pytest.raises(ValueError):
        ctilde(-1, P, 0.1)
    with pytest.raises(ValueError):
        ctilde(2, P, 0.1, "magic")
