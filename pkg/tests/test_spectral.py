import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qultra import RepParams
from qultra.errors import SpectrumViolationError
from qultra.repops import TridiagonalOperator, build_operator
from qultra.spectral import (
    eigenvalues,
    eigenvectors,
    match_spectrum,
    spectral_measure,
    sturm_count,
)

REP = RepParams(0.5, 1.0)


@settings(max_examples=30, deadline=None)
@given(off=st.lists(st.floats(0.05, 3.0), min_size=1, max_size=12), diag_seed=st.integers(0, 10_000))
def test_bisection_matches_characteristic_roots(off, diag_seed):
    n = len(off) + 1
    diag = np.random.default_rng(diag_seed).uniform(-1, 1, n)
    T = TridiagonalOperator(n, tuple(off), None, tuple(diag))
    got = np.array(eigenvalues(T))
    ref = np.sort(np.linalg.eigvalsh(T.to_dense()))
    assert np.allclose(got, ref, atol=1e-12 * max(1.0, T.norm_inf()))


def test_sturm_count_monotone():
    T = build_operator(20, REP)
    xs = np.linspace(-1, 1, 41)
    counts = sturm_count(np.zeros(20), np.asarray(T.offdiag), xs)
    assert np.all(np.diff(counts) >= 0)
    assert counts[0] == 0 and counts[-1] == 20


@pytest.mark.parametrize("N", [10, 25, 50])
def test_interlacing(N):
    T = build_operator(N + 1, REP)
    big = np.array(eigenvalues(T))
    small = np.array(eigenvalues(T.principal(N)))
    assert np.all(big[:-1] <= small + 1e-15) and np.all(small <= big[1:] + 1e-15)


def test_eigenvectors_are_unit_and_orthogonal():
    T = build_operator(40, REP)
    eigs = eigenvalues(T)
    V = eigenvectors(T, eigs)
    top = np.argsort(-np.abs(eigs))[:12]
    G = V[:, top].T @ V[:, top]
    assert np.allclose(G, np.eye(12), atol=1e-10)


def test_measure_pinned_ratio():
    m = spectral_measure(build_operator(80, REP))
    assert sum(m.masses) == pytest.approx(1.0, abs=1e-12)
    assert m.mass_at(0.5) / m.mass_at(0.25) == pytest.approx(1.2, rel=1e-9)
    with pytest.raises(KeyError):
        m.mass_at(0.7)


@pytest.mark.parametrize("rep", [RepParams(0.5, 1.0), RepParams(0.3, 0.25), RepParams(0.5, 4.0)])
def test_truncation_stability(rep):
    e80 = sorted(eigenvalues(build_operator(80, rep)), key=abs, reverse=True)
    e120 = sorted(eigenvalues(build_operator(120, rep)), key=abs, reverse=True)
    for k in range(12):
        assert abs(e80[k] - e120[k]) <= 1e-10


def test_spectral_radius_violation():
    with pytest.raises(SpectrumViolationError):
        match_spectrum([0.6, 0.25], REP, 2)
    with pytest.raises(ValueError):
        match_spectrum([0.5], REP, 0)


def test_match_pairs_nodes_in_order():
    rep = match_spectrum([0.5, -0.5, 0.25, -0.25, 0.0], REP, 5)
    assert [m[0] for m in rep.matched] == [0.5, -0.5, 0.25, -0.25]
    assert rep.unmatched_computed == [0.0]
