"""Symmetric tridiagonal eigensolver (Sturm bisection) and spectral measures.

Everything runs on numpy arrays; bisection advances all N brackets at once and
inverse iteration solves one pivoted tridiagonal system per node, vectorized
across nodes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError, SpectrumViolationError

MAX_BISECTION_STEPS = 200
INVERSE_ITERATIONS = 3
DEFAULT_TOL = 1e-15


@dataclass(frozen=True)
class SpectralMeasure:
    nodes: tuple
    masses: tuple
    flagged: tuple = ()

    def mass_at(self, x, rtol=1e-6):
        """Mass of the node closest to x (must lie within ``rtol`` relative)."""
        nodes = np.asarray(self.nodes)
        i = int(np.argmin(np.abs(nodes - x)))
        if abs(nodes[i] - x) > rtol * abs(x):
            raise KeyError(f"no node within {rtol:g} of {x!r}")
        return self.masses[i]


@dataclass(frozen=True)
class SpectrumReport:
    matched: list
    unmatched_computed: list
    max_rel_err: float
    flagged: list = field(default_factory=list)


def _arrays(T):
    return np.asarray(T.diagonal, dtype=float), np.asarray(T.offdiag, dtype=float)


def sturm_count(diag, off, x):
    """Number of eigenvalues strictly below each entry of ``x``.

    Counts negative pivots of the LDL^T factorization of T - x I; zero pivots
    are nudged to a tiny negative-free value, as in LAPACK's dstebz.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    off2 = off * off
    tiny = np.finfo(float).tiny
    count = np.zeros(x.shape, dtype=int)
    d = diag[0] - x
    for i in range(len(diag)):
        if i > 0:
            d = diag[i] - x - off2[i - 1] / d
        d = np.where(d == 0.0, -tiny, d)
        count += d < 0.0
    return count


def eigenvalues(T, tol=DEFAULT_TOL):
    """All eigenvalues of T in ascending order, by Sturm-count bisection.

    Each eigenvalue is bracketed to absolute width ``tol * ||T||_inf`` (or to
    adjacent floats, whichever is wider).
    """
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    diag, off = _arrays(T)
    n = len(diag)
    norm = T.norm_inf()
    if norm == 0.0:
        return tuple(diag.tolist())
    width = tol * norm
    lo = np.full(n, -norm * (1.0 + 1e-12) - width)
    hi = np.full(n, norm * (1.0 + 1e-12) + width)
    idx = np.arange(n)
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        active = (hi - lo > width) & (mid > lo) & (mid < hi)
        if not active.any():
            return tuple((0.5 * (lo + hi)).tolist())
        below = sturm_count(diag, off, mid) > idx
        hi = np.where(active & below, mid, hi)
        lo = np.where(active & ~below, mid, lo)
    raise SolverError(f"bisection did not converge in {MAX_BISECTION_STEPS} steps")


def _gttrf_solve(diag, off, shifts, rhs, floor):
    """Solve (T - s I) x = rhs for every shift s, with partial pivoting.

    Vectorized over the shift axis: ``rhs`` has shape (n, len(shifts)).
    """
    n = len(diag)
    d = diag[:, None] - shifts[None, :]
    dl = np.repeat(off[:, None], len(shifts), axis=1)
    du = dl.copy()
    du2 = np.zeros_like(d)
    swap = np.zeros((max(n - 1, 0), len(shifts)), dtype=bool)
    for i in range(n - 1):
        sw = np.abs(d[i]) < np.abs(dl[i])
        swap[i] = sw
        # no swap
        piv = np.where(d[i] == 0.0, floor, d[i])
        fact_n = dl[i] / piv
        # swap rows i and i+1
        fact_s = d[i] / np.where(sw, dl[i], 1.0)
        new_di = np.where(sw, dl[i], piv)
        new_dui = np.where(sw, d[i + 1], du[i])
        new_di1 = np.where(sw, du[i] - fact_s * d[i + 1], d[i + 1] - fact_n * du[i])
        if i < n - 2:
            du2[i] = np.where(sw, du[i + 1], 0.0)
            du[i + 1] = np.where(sw, -fact_s * du[i + 1], du[i + 1])
        d[i] = new_di
        du[i] = new_dui
        d[i + 1] = new_di1
        dl[i] = np.where(sw, fact_s, fact_n)
    d[n - 1] = np.where(d[n - 1] == 0.0, floor, d[n - 1])
    b = rhs.copy()
    for i in range(n - 1):
        bi, bi1 = b[i].copy(), b[i + 1].copy()
        b[i] = np.where(swap[i], bi1, bi)
        b[i + 1] = np.where(swap[i], bi - dl[i] * bi1, bi1 - dl[i] * bi)
    x = np.empty_like(b)
    x[n - 1] = b[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i]
    return x


def eigenvectors(T, eigs, iterations=INVERSE_ITERATIONS):
    """Unit eigenvectors (columns) by shifted inverse iteration."""
    diag, off = _arrays(T)
    n = len(diag)
    shifts = np.asarray(eigs, dtype=float)
    floor = np.finfo(float).eps * T.norm_inf()
    v = np.ones((n, len(shifts)))
    v /= np.linalg.norm(v, axis=0)
    for _ in range(iterations):
        with np.errstate(over="ignore", invalid="ignore"):
            v = _gttrf_solve(diag, off, shifts, v, floor)
            v /= np.max(np.abs(v), axis=0)
        v /= np.linalg.norm(v, axis=0)
    if not np.all(np.isfinite(v)):
        raise SolverError("inverse iteration produced non-finite vectors")
    return v


def spectral_measure(T, tol=DEFAULT_TOL):
    """Nodes and first-component masses of the truncated Jacobi matrix.

    Nodes whose nearest neighbour lies within 1e-8 * ||T|| are flagged: their
    inverse-iteration vectors are not reliably orthogonal.
    """
    eigs = np.asarray(eigenvalues(T, tol))
    vecs = eigenvectors(T, eigs)
    masses = vecs[0] ** 2
    gaps = np.full(len(eigs), np.inf)
    if len(eigs) > 1:
        dif = np.diff(eigs)
        gaps[:-1] = dif
        gaps[1:] = np.minimum(gaps[1:], dif)
    flagged = tuple(float(e) for e, g in zip(eigs, gaps) if g < 1e-8 * T.norm_inf())
    return SpectralMeasure(tuple(eigs.tolist()), tuple(masses.tolist()), flagged)


def analytic_node(k, sign, rep):
    return sign * rep.a * rep.q ** (k + 1)


def match_spectrum(eigs, rep, count, tol=1e-9, norm=None):
    """Match the ``count`` largest-|lambda| eigenvalues to +-a q^{k+1}.

    Positive eigenvalues in decreasing order pair with a q, a q^2, ...; the
    negative ones likewise.  Eigenvalues with |lambda| below ``10 tol ||T||``
    sit at the accumulation point and are reported unmatched.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    eigs = sorted(eigs)
    if norm is None:
        norm = max(abs(e) for e in eigs)
    radius = rep.a * rep.q
    top = max(abs(e) for e in eigs)
    if top > radius * (1.0 + 10.0 * tol):
        raise SpectrumViolationError(
            f"eigenvalue {top!r} lies outside the spectral radius a q = {radius!r}"
        )
    chosen = sorted(eigs, key=lambda e: -abs(e))[:count]
    floor = 10.0 * tol * norm
    matched, unmatched = [], []
    for sign in (1, -1):
        side = sorted((e for e in chosen if e * sign > 0), key=abs, reverse=True)
        for k, e in enumerate(side):
            if abs(e) < floor:
                unmatched.append(e)
                continue
            node = analytic_node(k, sign, rep)
            matched.append((node, e, abs(e - node) / abs(node)))
    unmatched.extend(e for e in chosen if e == 0.0)
    matched.sort(key=lambda t: (-abs(t[0]), -t[0]))
    max_err = max((m[2] for m in matched), default=0.0)
    return SpectrumReport(matched, unmatched, max_err)


def spectrum_tolerance(q):
    """Certified relative tolerance for matched nodes; decay is slow near q = 1."""
    return 1e-6 if q >= 0.8 else 1e-8


__all__ = [
    "SpectralMeasure",
    "SpectrumReport",
    "sturm_count",
    "eigenvalues",
    "eigenvectors",
    "spectral_measure",
    "match_spectrum",
    "spectrum_tolerance",
]

