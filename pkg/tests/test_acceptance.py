"""Acceptance suite over the grid q in {0.3, 0.5, 0.9} x a in {0.25, 1, 4}.

Each test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import math

import pytest

from conftest import GRID
from qultra import RepParams
from qultra.cli import main
from qultra.repops import build_operator
from qultra.spectral import eigenvalues, match_spectrum, spectral_measure
from qultra.verify import (
    RATIONALS,
    certify,
    gram_dual,
    gram_primal,
    measure_ratio_errors,
    offset_stability,
    primal_weights,
    product_identity_residuals,
    scalar_product_psi,
    special_value_ledger,
    total_mass,
    unitarity_check,
    computed_bigC,
    _scan_qdiff,
    _scan_series,
    _scan_special,
    _scan_symmetrization,
)
from qultra.repops import printed_bigC


def _worst(fn):
    """Largest value of fn(rep) over the grid, with the point where it occurs."""
    vals = [(fn(rep), rep) for rep in GRID]
    v, rep = max(vals, key=lambda t: t[0])
    return v, f"q={rep.q} a={rep.a}"


def test_c01_series_recurrence(record):
    worst, at = _worst(_scan_series)
    record("1", worst <= 1e-10, f"max scaled |series - recurrence| = {worst:.2e} (tol 1e-10) at {at}")
    assert worst <= 1e-10


def test_c02_symmetrization(record):
    worst, at = _worst(_scan_symmetrization)
    record("2", worst <= 1e-13, f"max |a_n^2 / (A_n C_n+1) - 1| = {worst:.2e} (tol 1e-13) at {at}")
    assert worst <= 1e-13


def test_c03_qdiff(record):
    res = {rep: _scan_qdiff(rep) for rep in GRID}
    worst = max(r[0] for r in res.values())
    collapse = max(r[1] for r in res.values())
    ok = worst <= 1e-9 and collapse <= 1e-13
    record("3", ok, f"scaled residual {worst:.2e} (tol 1e-9), n=0 collapse {collapse:.2e} (tol 1e-13)")
    assert ok


def test_c04_spectrum(record):
    worst_err, worst_radius, lines = 0.0, 0.0, []
    ok = True
    for rep in GRID:
        N, tol = (200, 1e-6) if rep.q == 0.9 else (80, 1e-8)
        T = build_operator(N, rep)
        eigs = eigenvalues(T)
        radius = max(abs(e) for e in eigs) / (rep.a * rep.q) - 1.0
        rpt = match_spectrum(eigs, rep, 10, tol=1e-9, norm=T.norm_inf())
        ok &= rpt.max_rel_err <= tol and radius <= 1e-8 and len(rpt.matched) == 10
        worst_err = max(worst_err, rpt.max_rel_err)
        worst_radius = max(worst_radius, radius)
    record("4", ok, f"max rel err of top 10 = {worst_err:.2e}; max |lambda|/(aq) - 1 = {worst_radius:.1e}")
    assert ok


def test_c05_primal_orthogonality(record):
    off, par = 0.0, 0.0
    for rep in GRID:
        g = gram_primal(21, rep, 40)
        off, par = max(off, g.offdiag_max), max(par, g.parity_max)
    ok = off <= 1e-8 and par <= 1e-14
    record("5", ok, f"off-diagonal {off:.2e} (tol 1e-8), odd m+m' {par:.2e} (tol 1e-14), m <= 20")
    assert ok


def test_c06_dual_orthogonality(record):
    off, tail = 0.0, 0.0
    for rep in GRID:
        g = gram_dual(16, rep)
        off, tail = max(off, g.offdiag_max), max(tail, g.tail)
    ok = off <= 1e-8
    record("6", ok, f"off-diagonal {off:.2e} (tol 1e-8), n <= 15; truncation tail {tail:.1e}")
    assert ok


def test_c07_unitarity(record):
    off, col, spread_c, spread_r = 0.0, 0.0, 0.0, 0.0
    offsets = set()
    for rep in GRID:
        uc, _ = unitarity_check(rep, 20, 40, computed_bigC(rep))
        up, _ = unitarity_check(rep, 20, 40, printed_bigC(rep))
        off = max(off, uc.column_offdiag, uc.row_offdiag)
        col = max(col, max(abs(d - 1.0) for d in uc.column_diag))
        for diag, tag in ((up.column_diag, "c"), (up.row_diag, "r")):
            mean, spread = offset_stability(diag)
            if tag == "c":
                spread_c = max(spread_c, spread)
            else:
                spread_r = max(spread_r, spread)
            offsets.add(round(mean, 8))
    ok = off <= 1e-8 and col <= 1e-8 and max(spread_c, spread_r) <= 1e-8
    record(
        "7",
        ok,
        f"inner products {off:.2e}; computed-C columns |d-1| {col:.2e}; "
        f"printed-C diagonal spread {max(spread_c, spread_r):.1e}, offsets {sorted(offsets)}",
    )
    assert ok


@pytest.fixture(scope="module")
def masses():
    return {rep: total_mass(rep, size=80) for rep in GRID}


def test_c08a_total_mass_closed_form(record, masses):
    worst = max(tm.residual for tm in masses.values())
    record("8a", worst <= 1e-12, f"direct sum vs (a^2q^3;q^2)/(q;q^2) = {worst:.2e} (tol 1e-12)")
    assert worst <= 1e-12


def test_c08b_measure_completeness(record, masses):
    worst = max(tm.completeness for tm in masses.values())
    record("8b", worst <= 1e-12, f"|sum of spectral masses - 1| = {worst:.2e} (tol 1e-12)")
    assert worst <= 1e-12


def test_c08c_printed_total_mass_offsets(record, masses):
    # every printed-prefactor reading must give the same simple rational at every grid point
    rows = []
    ok = True
    for name in ("printed", "first_prefactor_twice"):
        vals = [tm.lhs_variants[name] for tm in masses.values()]
        mean, spread = offset_stability(vals)
        rational = all(any(abs(v / r - 1.0) <= 1e-8 for r in RATIONALS) for v in vals)
        ok &= spread <= 1e-8 and rational
        rows.append(f"{name}: range [{min(vals):.4g}, {max(vals):.4g}]")
    record("8c", ok, "; ".join(rows) + " (need one stable rational)")
    assert ok, "printed total-mass readings are not stable rational offsets"


def test_c09_norm_sums(record):
    parity, prod = 0.0, 0.0
    offsets = {}
    for rep in GRID:
        plus, minus = scalar_product_psi(1, rep), scalar_product_psi(-1, rep)
        parity = max(parity, abs(plus.value / minus.value - 1.0))
        prod = max(prod, *product_identity_residuals(rep))
        for e in plus.ledger + minus.ledger:
            offsets.setdefault(e.name, []).append(e.offset)
    stable = {k: offset_stability(v) for k, v in offsets.items()}
    ok_off = all(s <= 1e-8 for _, s in stable.values())
    ok = parity <= 1e-12 and prod <= 1e-12 and ok_off
    summary = ", ".join(f"{k.split('.', 1)[1]}={m:.6g}" for k, (m, _) in stable.items())
    record("9", ok, f"parity {parity:.1e}, products {prod:.1e}; offsets {summary}")
    assert ok


def test_c10_special_value(record):
    worst, at = _worst(_scan_special)
    ledger = [special_value_ledger(rep) for rep in GRID]
    misprint = all(abs(e.offset - 1.0) > 1e-8 for e in ledger)
    ok = worst <= 1e-11 and misprint
    record(
        "10",
        ok,
        f"C~_n(+-aq) vs (+-a)^n q^(n(n+1)/2): {worst:.2e} (tol 1e-11); "
        f"printed a^2 q^(n(n+1)) differs at every grid point: {misprint}",
    )
    assert ok


def test_c11_measure_agreement(record):
    worst = 0.0
    for rep in GRID:
        m = spectral_measure(build_operator(80, rep))
        worst = max(worst, max(measure_ratio_errors(m, rep, 4)))
    rep = RepParams(0.5, 1.0)
    m = spectral_measure(build_operator(80, rep))
    w = primal_weights(2, rep)
    pinned = m.mass_at(0.5) / m.mass_at(0.25)
    ok = worst <= 1e-6 and abs(w[0] / w[1] - 1.2) <= 1e-15 and abs(pinned - 1.2) <= 1e-6
    record("11", ok, f"mass/weight ratio error {worst:.2e} (tol 1e-6); pinned mass ratio {pinned:.12g}")
    assert ok


def test_c12_mutation(record, capsys):
    clean = certify(RepParams(0.5, 1.0))
    code = main(["certify", "--q", "0.5", "--a", "1", "--inject-weight-bug", "1e-6"])
    capsys.readouterr()
    ok = clean.verdict == "pass" and code == 1
    record("12", ok, f"clean verdict {clean.verdict}; with w_1 *= 1 + 1e-6 certify exits {code}")
    assert ok
