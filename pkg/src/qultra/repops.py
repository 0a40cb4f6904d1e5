"""Representation operators I (Jacobi matrix) and J (diagonal), eigenvectors,
and the normalization of the eigenvector frame.

Nodes are always indexed as +-a q^{n+1}, n >= 0.
"""

from dataclasses import dataclass, field
import math

from . import _dd
from .errors import FrameError, OperatorError
from .params import RepParams
from .qseries import LogScaledReal, qpoch_inf
from .ultraspherical import (
    ctilde_scaled,
    match_node,
    node_scaled,
    qdiff_coefficients,
    recurrence_coeffs,
    scaled_points,
)

SYMMETRIZATION_TOL = 1e-13
FRAME_LIMIT = 1e300
# below this the ratio test is dominated by binary64 rounding of a_n
RATIO_FLOOR = 1e-15


def jacobi_offdiag(n, rep):
    """Coupling a_n between basis states n and n+1 of the operator I."""
    q, a2 = rep.q, rep.a * rep.a
    ratio = (1.0 - q ** (n + 1)) * (1.0 + a2 * q ** (n + 1)) / (
        (1.0 + a2 * q ** (2 * n + 1)) * (1.0 + a2 * q ** (2 * n + 3))
    )
    return math.sqrt(a2 * q ** (n + 2)) * math.sqrt(ratio)


def symmetrization_residual(n, rep):
    """Relative gap between a_n^2 and A_n C_{n+1}."""
    fam = rep.family
    lhs = jacobi_offdiag(n, rep) ** 2
    rhs = recurrence_coeffs(n, fam).A * recurrence_coeffs(n + 1, fam).C
    return abs(lhs - rhs) / abs(rhs)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Truncated zero-diagonal Jacobi matrix of I.  ``offdiag[n]`` couples n and n+1."""

    size: int
    offdiag: tuple
    rep: RepParams = None
    diagonal: tuple = field(default=None)

    def __post_init__(self):
        if self.size < 1:
            raise OperatorError("size must be at least 1")
        if len(self.offdiag) != self.size - 1:
            raise OperatorError("offdiag must have size - 1 entries")
        if any(not (v > 0.0) for v in self.offdiag):
            raise OperatorError("off-diagonal entries must be strictly positive")
        if self.diagonal is None:
            object.__setattr__(self, "diagonal", (0.0,) * self.size)

    def norm_inf(self):
        e = (0.0,) + tuple(self.offdiag) + (0.0,)
        return max(abs(self.diagonal[i]) + e[i] + e[i + 1] for i in range(self.size))

    def matvec(self, v):
        n = self.size
        out = [self.diagonal[i] * v[i] for i in range(n)]
        for i, e in enumerate(self.offdiag):
            out[i] += e * v[i + 1]
            out[i + 1] += e * v[i]
        return out

    def principal(self, size):
        return TridiagonalOperator(size, self.offdiag[: size - 1], self.rep, self.diagonal[:size])

    def to_dense(self):
        import numpy as np

        m = np.diag(np.asarray(self.diagonal, dtype=float))
        idx = np.arange(self.size - 1)
        m[idx, idx + 1] = self.offdiag
        m[idx + 1, idx] = self.offdiag
        return m


def build_operator(N, rep, check_ratio=True):
    if N < 2:
        raise OperatorError("operator size must be at least 2")
    off = tuple(jacobi_offdiag(n, rep) for n in range(N - 1))
    for n in range(N - 1):
        if symmetrization_residual(n, rep) > SYMMETRIZATION_TOL:
            raise OperatorError(f"a_{n}^2 != A_{n} C_{n + 1}")
    if check_ratio:
        sq = math.sqrt(rep.q)
        for n in range(20, N - 2):
            if abs(off[n + 1] / off[n] - sq) > max(10.0 * rep.q ** (n / 2), RATIO_FLOOR):
                raise OperatorError(f"ratio a_{n + 1}/a_{n} does not approach sqrt(q)")
    return TridiagonalOperator(N, off, rep)


def log_prefactor(m, rep):
    """log of the eigenvector prefactor d_m (positive for every m).

    d_m = [(-a^2 q; q)_m (1 + a^2 q^{2m+1}) / ((q; q)_m (1 + a^2 q) a^{2m})]^{1/2} q^{-m(m+3)/4}
    """
    q, a2 = rep.q, rep.a * rep.a
    parts = [math.log1p(a2 * q ** (2 * m + 1)), -math.log1p(a2 * q), -2.0 * m * math.log(rep.a)]
    qk = q
    for _ in range(m):
        parts.append(math.log1p(a2 * qk))
        parts.append(-math.log1p(-qk))
        qk *= q
    return 0.5 * math.fsum(parts) - m * (m + 3) / 4.0 * math.log(q)


def log_prefactors(M, rep):
    """log d_m for m < M, accumulated incrementally."""
    q, a2 = rep.q, rep.a * rep.a
    base = -math.log1p(a2 * q)
    out = []
    acc = []
    loga = math.log(rep.a)
    logq = math.log(q)
    for m in range(M):
        if m > 0:
            qk = q ** m
            acc.append(math.log1p(a2 * qk))
            acc.append(-math.log1p(-qk))
        s = math.fsum(acc) + base + math.log1p(a2 * q ** (2 * m + 1)) - 2.0 * m * loga
        out.append(0.5 * s - m * (m + 3) / 4.0 * logq)
    return out


def _lam_dd(lam):
    return lam if isinstance(lam, tuple) else (float(lam), 0.0)


def betas(M, lam, rep):
    """beta_0..beta_{M-1}(lam) as LogScaledReal; ``lam`` may be a double-double pair."""
    vals = ctilde_scaled(M - 1, rep, _lam_dd(lam))
    logs = log_prefactors(M, rep)
    out = []
    for (mant, e), ld in zip(vals, logs):
        p = LogScaledReal.from_mantissa(mant, e)
        out.append(p * LogScaledReal(1, ld) if p.sign else p)
    return out


def node_betas(M, k, sign, rep):
    """beta_0..beta_{M-1} at the node sign * a q^{k+1} (backward recurrence)."""
    vals = node_scaled(M - 1, k, sign, rep)
    logs = log_prefactors(M, rep)
    out = []
    for (mant, e), ld in zip(vals, logs):
        p = LogScaledReal.from_mantissa(mant, e)
        out.append(p * LogScaledReal(1, ld) if p.sign else p)
    return out


def beta(m, lam, rep):
    return betas(m + 1, lam, rep)[m]


@dataclass(frozen=True)
class EigenvectorExpansion:
    lam: float
    coeffs: tuple

    def as_floats(self):
        return [c.to_float() for c in self.coeffs]


def eigenvector(lam, N, rep):
    """Coefficients beta_0..beta_{N-1}(lam) of psi_lam.

    At a spectral node +-a q^{k+1} the coefficients are the decaying solution
    and come from the backward recurrence; elsewhere they are iterated forward.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    lam_f = _dd.to_float(_lam_dd(lam))
    hit = match_node(lam_f, rep)
    if hit is not None:
        return EigenvectorExpansion(lam_f, tuple(node_betas(N, hit[0], hit[1], rep)))
    return EigenvectorExpansion(lam_f, tuple(betas(N, lam, rep)))


def eigen_residual(vec, T):
    """||T v - lam v|| / ||v|| for the truncated operator."""
    v = _normalized_floats(vec.coeffs)
    tv = T.matvec(v)
    num = math.sqrt(math.fsum((tv[i] - vec.lam * v[i]) ** 2 for i in range(len(v))))
    den = math.sqrt(math.fsum(x * x for x in v))
    return num / den


def _normalized_floats(coeffs):
    top = max(c.log_mag for c in coeffs if c.sign)
    return [c.sign * math.exp(c.log_mag - top) if c.sign else 0.0 for c in coeffs]


def partial_norm_sq(vec):
    """Squared norm of the (unnormalized) truncated expansion, as a log."""
    top = max(2.0 * c.log_mag for c in vec.coeffs if c.sign)
    s = math.fsum(math.exp(2.0 * c.log_mag - top) for c in vec.coeffs if c.sign)
    return top + math.log(s)


def j_diag(n, rep):
    return rep.q ** (-n) - rep.a * rep.a * rep.q ** (n + 1)


def j_action_terms(lam, N, rep):
    """Per basis index m: (J beta_m(lam), three right-side terms)."""
    if lam == 0:
        raise ValueError("lam must be non-zero")
    here, up, down = scaled_points(rep, lam)
    b0 = betas(N, here, rep)
    bq = betas(N, up, rep)
    bqi = betas(N, down, rep)
    k1, k2, k3 = qdiff_coefficients(rep, lam)
    rows = []
    for m in range(N):
        # every term shares the prefactor d_m; divide out the largest magnitude
        d = max((b.log_mag for b in (b0[m], bq[m], bqi[m]) if b.sign), default=0.0)

        def rel(x):
            return x.sign * math.exp(x.log_mag - d) if x.sign else 0.0

        rows.append((j_diag(m, rep) * rel(b0[m]), (k1 * rel(bq[m]), k2 * rel(b0[m]), k3 * rel(bqi[m]))))
    return rows


def j_action_residual(lam, N, rep):
    """Max over m < N of the relative residual of J psi_lam against the three-term action."""
    worst = 0.0
    for lhs, rhs in j_action_terms(lam, N, rep):
        scale = max(abs(lhs), *(abs(t) for t in rhs))
        if scale == 0.0:
            continue
        worst = max(worst, abs(lhs - math.fsum(rhs)) / scale)
    return worst


def printed_bigC(rep):
    """C = [(q; q^2)_inf / (-a^2 q^3; q^2)_inf]^{1/2} as printed (second form)."""
    q, a2 = rep.q, rep.a * rep.a
    return math.sqrt(qpoch_inf(q, q * q) / qpoch_inf(-a2 * q ** 3, q * q))


def printed_bigC_first_form(rep):
    """C = [(-a^2 q^2; q^2)_inf / (-a^2 q^2, -q; q)_inf]^{1/2} (first printed form)."""
    q, a2 = rep.q, rep.a * rep.a
    return math.sqrt(
        qpoch_inf(-a2 * q * q, q * q) / (qpoch_inf(-a2 * q * q, q) * qpoch_inf(-q, q))
    )


def schedule_ratio(n, rep):
    """c_n / c_{n-1} = sqrt(q (1 + a^2 q^{2n}) / (1 - q^{2n}))."""
    q = rep.q
    return math.sqrt(q * (1.0 + rep.a * rep.a * q ** (2 * n)) / (1.0 - q ** (2 * n)))


@dataclass(frozen=True)
class NormalizationSchedule:
    bigC: float
    cs: tuple


def normalization(K, rep, bigC=None):
    """c_n = C (q^n (-a^2 q^2; q^2)_n / (q^2; q^2)_n)^{1/2}, n < K.

    ``bigC`` defaults to the printed constant.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if bigC is None:
        bigC = printed_bigC(rep)
    q, a2 = rep.q, rep.a * rep.a
    cs = [bigC]
    log_acc = []
    for n in range(1, K):
        q2n = q ** (2 * n)
        log_acc.extend((math.log(q), math.log1p(a2 * q2n), -math.log1p(-q2n)))
        cs.append(bigC * math.exp(0.5 * math.fsum(log_acc)))
    return NormalizationSchedule(bigC, tuple(cs))


@dataclass(frozen=True)
class UnitaryFrame:
    """Columns interleaved as (+, 0), (-, 0), (+, 1), (-, 1), ...

    ``entries[m][2n]`` is c_n beta_m(a q^{n+1}); ``entries[m][2n+1]`` is
    c_n beta_m(-a q^{n+1}).
    """

    rows: int
    cols: int
    entries: tuple
    schedule: NormalizationSchedule

    def column(self, j):
        return [row[j] for row in self.entries]


def build_frame(M, K, rep, bigC=None):
    """Frame of M basis rows and K node pairs (2K columns)."""
    if M < 1 or K < 1:
        raise ValueError("M and K must be positive")
    sched = normalization(K, rep, bigC)
    log_c = [math.log(c) for c in sched.cs]
    cols = []
    for n in range(K):
        for sign in (1, -1):
            bs = node_betas(M, n, sign, rep)
            col = []
            for b in bs:
                if b.sign == 0:
                    col.append(0.0)
                    continue
                lm = b.log_mag + log_c[n]
                if lm > math.log(FRAME_LIMIT):
                    raise FrameError(f"frame entry overflows at node {n}, sign {sign}")
                col.append(b.sign * math.exp(lm))
            cols.append(col)
    entries = tuple(tuple(cols[j][m] for j in range(2 * K)) for m in range(M))
    return UnitaryFrame(M, 2 * K, entries, sched)
