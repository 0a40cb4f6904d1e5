"""Discrete q-ultraspherical polynomials C~_n^{(c)}(x; q) and their duals.

The three-term recurrence

    x C~_n = A_n C~_{n+1} + C_n C~_{n-1},
    A_n = (1 + c q^{n+1}) / (1 + c q^{2n+1}),   C_n = A_n - 1,

is the normative definition.  Two evaluation regimes:

* generic x: forward iteration in double-double with power-of-two rescaling;
* x on the grid +-b q^{k+1} (b = sqrt(c)): there C~_0, C~_1, ... is the
  decaying solution of the recurrence and the polynomial is violently
  ill-conditioned in x (condition ~1e226 at q=0.3, n=30).  Points within
  ``NODE_RTOL`` of a grid node snap to the exact node and are evaluated with
  Miller's backward recurrence normalized to C~_0 = 1.

The 3phi2 series route is an independent cross-check.  It loses everything to
cancellation at large n, so agreement with the recurrence is measured relative
to the largest series term.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

from . import _dd
from .errors import ConsistencyError, MethodDisagreementError
from .params import FamilyParams, RepParams
from .qseries import LogScaledReal, csum, phi32_terms

SERIES_AGREEMENT_TOL = 1e-10
IMAG_TOL = 1e-10
SPECIAL_VALUE_TOL = 1e-11
NODE_RTOL = 1e-13

_RESCALE_HI = 2.0 ** 400
_RESCALE_LO = 2.0 ** -400
_NEG_I_POW = (1.0 + 0j, -1j, -1.0 + 0j, 1j)


@dataclass(frozen=True)
class RecurrenceCoeffs:
    A: float
    C: float


def recurrence_coeffs(n, p):
    q, c = p.q, p.c
    den = 1.0 + c * q ** (2 * n + 1)
    A = (1.0 + c * q ** (n + 1)) / den
    C = c * q ** (n + 1) * (1.0 - q ** n) / den
    return RecurrenceCoeffs(A, C)


def c_dd(p):
    """The family parameter as a double-double (exactly a*a for RepParams)."""
    if isinstance(p, RepParams):
        return _dd.two_prod(p.a, p.a)
    return (float(p.c), 0.0)


def node_base(p):
    return p.a if isinstance(p, RepParams) else math.sqrt(p.c)


def node_dd(k, sign, p):
    """The grid node sign * b q^{k+1} as a double-double pair."""
    v = _dd.mul_float(_dd.power(p.q, k + 1), node_base(p))
    return v if sign > 0 else _dd.neg(v)


def match_node(x, p, rtol=NODE_RTOL):
    """``(k, sign)`` when x equals sign * b q^{k+1} to ``rtol``, else None."""
    if isinstance(x, tuple):
        x = _dd.to_float(x)
    if x == 0.0 or not math.isfinite(x):
        return None
    k = round(math.log(abs(x) / node_base(p)) / math.log(p.q)) - 1
    if k < 0:
        return None
    sign = 1 if x > 0 else -1
    node = _dd.to_float(node_dd(k, sign, p))
    if abs(x - node) <= rtol * abs(node):
        return k, sign
    return None


def _coeffs_dd(q, cdd, n_max):
    """A_n, C_n for n < n_max in double-double."""
    out = []
    q_dd = _dd.dd(q)
    qn = (1.0, 0.0)
    one = (1.0, 0.0)
    for _ in range(n_max):
        qn1 = _dd.mul(qn, q_dd)
        cqn1 = _dd.mul(cdd, qn1)
        den = _dd.add(one, _dd.mul(cqn1, qn))  # 1 + c q^{2n+1}
        A = _dd.div(_dd.add(one, cqn1), den)
        C = _dd.div(_dd.mul(cqn1, _dd.sub(one, qn)), den)
        out.append((A, C))
        qn = qn1
    return out


def _rescale(cur, prev):
    mag = abs(cur[0]) if cur[0] != 0.0 else abs(prev[0])
    if mag == 0.0 or _RESCALE_LO < mag < _RESCALE_HI:
        return cur, prev, 0
    shift = math.frexp(mag)[1]
    return _dd.ldexp(cur, -shift), _dd.ldexp(prev, -shift), shift


def forward_scaled(n_max, q, c, x):
    """Forward recurrence: C~_0..C~_{n_max}(x) as (mantissa, exponent2) pairs.

    ``c`` and ``x`` may be floats or double-double pairs.
    """
    cdd = _dd.dd(c)
    x_dd = _dd.dd(x)
    out = [(1.0, 0)]
    if n_max == 0:
        return out
    out.append((_dd.to_float(x_dd), 0))
    coeffs = _coeffs_dd(q, cdd, n_max)
    prev = (1.0, 0.0)
    cur = x_dd
    exp2 = 0
    for n in range(1, n_max):
        A, C = coeffs[n]
        nxt = _dd.div(_dd.sub(_dd.mul(x_dd, cur), _dd.mul(C, prev)), A)
        prev, cur = cur, nxt
        cur, prev, shift = _rescale(cur, prev)
        exp2 += shift
        out.append((_dd.to_float(cur), exp2))
    return out


def _miller(x, coeffs, L, M):
    """Backward recurrence from p_L = 0, p_{L-1} = 1 down to degree 0.

    Returns p_0..p_M as (mantissa, exponent2) pairs normalized to p_0 = 1.
    """
    p_next, p_cur = (0.0, 0.0), (1.0, 0.0)
    exp2 = 0
    vals = [None] * (M + 1)
    if L - 1 <= M:
        vals[L - 1] = (p_cur, exp2)
    for n in range(L - 1, 0, -1):
        A, C = coeffs[n]
        p_next, p_cur = p_cur, _dd.div(_dd.sub(_dd.mul(x, p_cur), _dd.mul(A, p_next)), C)
        mag = abs(p_cur[0])
        if mag > _RESCALE_HI or (0.0 < mag < _RESCALE_LO):
            shift = math.frexp(mag)[1]
            p_cur = _dd.ldexp(p_cur, -shift)
            p_next = _dd.ldexp(p_next, -shift)
            exp2 += shift
        if n - 1 <= M:
            vals[n - 1] = (p_cur, exp2)
    m0, e0 = vals[0]
    out = []
    for m, e in vals:
        r = _dd.div(m, m0)
        shift = math.frexp(r[0])[1] if r[0] != 0.0 else 0
        out.append((_dd.to_float(_dd.ldexp(r, -shift)), e - e0 + shift))
    return out


def _same_scaled(u, v, rtol):
    (mu_, eu), (mv, ev) = u, v
    if mu_ == 0.0 or mv == 0.0:
        return mu_ == mv
    return abs(math.ldexp(mu_ / mv, eu - ev) - 1.0) <= rtol


def _underflow_index(p):
    """Largest degree at which C_n stays comfortably inside binary64 range."""
    return int((-600.0 - math.log(p.c)) / math.log(p.q))


def node_scaled(M, k, sign, p, rtol=1e-15):
    """C~_0..C~_M at the node sign * b q^{k+1} as (mantissa, exponent2) pairs.

    Near the node the wanted sequence is the minimal solution, which only
    separates from the dominant one beyond degree ~2k.  Deep nodes
    (2k >= M + 10) never reach that regime and are iterated forward; the rest
    use Miller's algorithm, with the start index grown until two starts agree
    to ``rtol``.  Miller results are cached per node in blocks of 64 degrees.
    """
    if 2 * k >= M + 10:
        return forward_scaled(M, p.q, c_dd(p), node_dd(k, sign, p))
    block = 64 * (M // 64 + 1) - 1
    return list(_miller_cached(block, k, sign, p, rtol)[: M + 1])


def _stitch(vals, x, k, p):
    """Replace degrees m <= 2k - 10 by forward values and rescale the rest to match.

    For tiny x the odd degrees are O(x) against the even ones, which costs the
    normalized backward sequence its relative accuracy there.  Forward
    iteration is benign in that range.
    """
    m0 = min(len(vals) - 1, 2 * k - 10)
    if m0 < 1:
        return vals
    fwd = forward_scaled(m0, p.q, c_dd(p), x)
    (fm, fe), (pm, pe) = fwd[m0], vals[m0]
    if fm == 0.0 or pm == 0.0:
        return vals
    ratio, shift = math.frexp(fm / pm)
    out = list(fwd)
    for m, e in vals[m0 + 1:]:
        out.append((m * ratio, e + fe - pe + shift))
    return out


@lru_cache(maxsize=512)
def _miller_cached(M, k, sign, p, rtol):
    x = node_dd(k, sign, p)
    L = max(M + 40, 2 * k + 80)
    limit = _underflow_index(p)
    cdd = c_dd(p)
    coeffs = _coeffs_dd(p.q, cdd, min(limit, 2 * L))
    prev = None
    while True:
        if L > limit:
            raise ConsistencyError("backward recurrence did not settle before C_n underflows")
        if L > len(coeffs):
            coeffs = _coeffs_dd(p.q, cdd, min(limit, 2 * L))
        vals = _stitch(_miller(x, coeffs, L, M), x, k, p)
        if prev is not None and all(_same_scaled(u, v, rtol) for u, v in zip(vals, prev)):
            return tuple(vals)
        prev = vals
        L += 40


ctilde_node_scaled = node_scaled


def ctilde_scaled(n_max, p, x):
    """C~_0..C~_{n_max}(x) as (mantissa, exponent2) pairs; x may be a double-double.

    Arguments on the grid snap to the node and use the backward recurrence.
    """
    hit = match_node(x, p)
    if hit is not None:
        return node_scaled(n_max, hit[0], hit[1], p)
    return forward_scaled(n_max, p.q, c_dd(p), x)


def _to_log(pairs):
    return [LogScaledReal.from_mantissa(m, e) for m, e in pairs]


def ctilde_log(n_max, p, x):
    return _to_log(ctilde_scaled(n_max, p, x))


def ctilde_node_log(M, k, sign, p):
    return _to_log(node_scaled(M, k, sign, p))


def ctilde_all(n_max, p, x):
    """C~_0..C~_{n_max}(x) as floats; tiny node values may underflow to 0."""
    return [math.ldexp(m, e) for m, e in ctilde_scaled(n_max, p, x)]


def ctilde_series_terms(n, p, x):
    """Terms of (-i)^n 3phi2(q^-n, -c q^{n+1}, i x; i sqrt(c) q, -i sqrt(c) q; q, q)."""
    q, c = p.q, p.c
    sc = math.sqrt(c)
    pref = _NEG_I_POW[n % 4]
    terms = phi32_terms(
        (q ** (-n), -c * q ** (n + 1), 1j * x),
        (1j * sc * q, -1j * sc * q),
        q,
        q,
        n,
    )
    return [pref * t for t in terms]


def _real_part(terms, what):
    total = csum(terms)
    scale = max(abs(t) for t in terms)
    if abs(total.imag) > IMAG_TOL * max(scale, abs(total.real)):
        raise ConsistencyError(f"{what} has imaginary part {total.imag:.3e}")
    return total.real, scale


def ctilde_series(n, p, x):
    """Series route.  Returns ``(value, scale)`` with scale the largest |term|."""
    return _real_part(ctilde_series_terms(n, p, x), f"series value of C~_{n}({x})")


def scaled_disagreement(value_a, value_b, scale=0.0):
    denom = max(abs(value_a), abs(value_b), scale)
    if denom == 0.0:
        return 0.0
    return abs(value_a - value_b) / denom


def ctilde(n, p, x, method="recurrence"):
    """Value of C~_n^{(c)}(x; q).

    ``method`` is ``"recurrence"``, ``"series"`` or ``"both"``; ``"both"``
    returns the recurrence value after checking that the series agrees to
    1e-10 relative to the largest magnitude involved.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    if method == "series":
        return ctilde_series(n, p, x)[0]
    m, e = ctilde_scaled(n, p, x)[n]
    rec = math.ldexp(m, e)
    if method == "recurrence":
        return rec
    if method != "both":
        raise ValueError(f"unknown method {method!r}")
    ser, scale = ctilde_series(n, p, x)
    err = scaled_disagreement(rec, ser, scale)
    if err > SERIES_AGREEMENT_TOL:
        raise MethodDisagreementError(
            f"C~_{n}({x}): recurrence {rec!r} vs series {ser!r}, scaled error {err:.3e}"
        )
    return rec


def special_value_closed(n, rep, sign=1):
    """(sign * a)^n q^{n(n+1)/2}."""
    mag = math.exp(n * math.log(rep.a) + 0.5 * n * (n + 1) * math.log(rep.q))
    return -mag if (sign < 0 and n % 2 == 1) else mag


def printed_special_value(n, rep):
    """a^2 q^{n(n+1)}: the printed form, already wrong at n = 0."""
    return rep.a ** 2 * rep.q ** (n * (n + 1))


def special_value_series(n, rep, sign=1):
    """Series route at x = sign*a*q, with the pair i x / (sign i a q) cancelled.

    What remains is (-i)^n 2phi1(q^-n, -a^2 q^{n+1}; -sign i a q; q, q).
    Returns ``(value, scale)``.
    """
    q, a = rep.q, rep.a
    ix = sign * 1j * a * q
    terms = phi32_terms((q ** (-n), -a * a * q ** (n + 1), ix), (-ix, ix), q, q, n)
    pref = _NEG_I_POW[n % 4]
    return _real_part([pref * t for t in terms], "special-value series")


def special_value_error(n, rep, sign=1):
    """Relative error of the recurrence value at sign*a*q against the closed form."""
    m, e = node_scaled(n, 0, sign, rep)[n]
    logc = n * math.log(rep.a) + 0.5 * n * (n + 1) * math.log(rep.q)
    e2 = math.floor(logc / math.log(2.0))
    mc = math.exp(logc - e2 * math.log(2.0))
    if sign < 0 and n % 2 == 1:
        mc = -mc
    return abs(math.ldexp(m / mc, e - e2) - 1.0)


def special_value(n, rep, sign=1):
    """C~_n^{(a^2)}(sign * a q; q) = (sign * a)^n q^{n(n+1)/2}.

    The closed form (q-Chu-Vandermonde) is checked against the recurrence
    (relative) and the series route (scaled by its largest term).
    """
    closed = special_value_closed(n, rep, sign)
    rel = special_value_error(n, rep, sign)
    if rel > SPECIAL_VALUE_TOL:
        raise ConsistencyError(f"special value n={n}: recurrence and closed form differ by {rel:.3e}")
    ser, scale = special_value_series(n, rep, sign)
    if math.isfinite(ser) and math.isfinite(scale):
        err = scaled_disagreement(closed, ser, scale)
        if err > SPECIAL_VALUE_TOL:
            raise ConsistencyError(
                f"special value n={n}: series and closed form differ by {err:.3e} (scaled)"
            )
    return closed


def mu(x, s, q):
    """q^{-x} + s q^{x+1}; the dual family uses s = -c."""
    return q ** (-x) + s * q ** (x + 1)


def _norm_dd(v, exp2):
    m = abs(v[0])
    if m == 0.0:
        return v, exp2
    shift = math.frexp(m)[1]
    return _dd.ldexp(v, -shift), exp2 + shift


def dual_dtilde_scaled(n, x, q, c):
    """D~_n^{(c)}(mu(x; -c) | q) as ``(mantissa, exponent2, scale)``.

    Sums the terminating
    3phi2(q^-x, -c q^{x+1}, q^-n; i sqrt(c) q, -i sqrt(c) q; q, -q^{n+1})
    in double-double; the paired imaginary denominators reduce to the real
    (-c q^2; q^2)_k.  Terms carry a running power-of-two exponent so large x
    does not overflow.  ``scale`` is the largest |term| in units of 2**exponent2.
    """
    if n < 0 or x < 0:
        raise ValueError("n and x must be non-negative")
    c = _dd.dd(c)
    q_dd = _dd.dd(q)
    one = (1.0, 0.0)
    qinv = _dd.div(one, q_dd)
    q_neg_x = _dd.power(qinv, x)
    q_neg_n = _dd.power(qinv, n)
    z = _dd.neg(_dd.power(q_dd, n + 1))
    cqx1 = _dd.mul(c, _dd.power(q_dd, x + 1))
    q2 = _dd.mul(q_dd, q_dd)
    cq2 = _dd.mul(c, q2)

    term, texp = one, 0
    terms = [(term, texp)]
    qk = one
    q2k = one
    for _ in range(min(n, x)):
        num = _dd.mul(
            _dd.mul(_dd.sub(one, _dd.mul(q_neg_x, qk)), _dd.add(one, _dd.mul(cqx1, qk))),
            _dd.sub(one, _dd.mul(q_neg_n, qk)),
        )
        den = _dd.mul(_dd.sub(one, _dd.mul(q_dd, qk)), _dd.add(one, _dd.mul(cq2, q2k)))
        term = _dd.mul(_dd.div(num, den), _dd.mul(term, z))
        term, texp = _norm_dd(term, texp)
        terms.append((term, texp))
        qk = _dd.mul(qk, q_dd)
        q2k = _dd.mul(q2k, q2)
    emax = max(e for t, e in terms if t[0] != 0.0)
    total = (0.0, 0.0)
    scale = 0.0
    for t, e in terms:
        shifted = _dd.ldexp(t, e - emax)
        total = _dd.add(total, shifted)
        scale = max(scale, abs(shifted[0]))
    return _dd.to_float(total), emax, scale


def dual_dtilde_log(n, x, p):
    m, e, _ = dual_dtilde_scaled(n, x, p.q, c_dd(p))
    return LogScaledReal.from_mantissa(m, e)


def dual_dtilde(n, x, p):
    """D~_n^{(c)}(mu(x; -c) | q) as a float."""
    m, e, _ = dual_dtilde_scaled(n, x, p.q, c_dd(p))
    return math.ldexp(m, e)


def qdiff_coefficients(rep, lam):
    """Coefficients (k1, k2, k3) of C~(q lam), C~(lam), C~(lam/q) on the right side.

    On a grid node lam = +-a q^{k+1} they are formed from k, so k3 is exactly
    zero at k = 0.
    """
    q, a2 = rep.q, rep.a * rep.a
    hit = match_node(lam, rep)
    if hit is not None:
        k = hit[0]
        lam2 = a2 * q ** (2 * k + 2)
        k3 = 1.0 - q ** (-2 * k)
    else:
        lam_f = _dd.to_float(_dd.dd(lam))
        lam2 = lam_f * lam_f
        k3 = (lam2 - a2 * q * q) / lam2
    k1 = -a2 * q * (lam2 + 1.0) / lam2
    k2 = a2 * q * (1.0 + q) / lam2
    return k1, k2, k3


def scaled_points(rep, lam):
    """lam, q lam and lam / q as double-double pairs, exact when lam is a node."""
    hit = match_node(lam, rep)
    if hit is not None:
        k, sign = hit
        down = node_dd(k - 1, sign, rep) if k >= 1 else (sign * rep.a, 0.0)
        return node_dd(k, sign, rep), node_dd(k + 1, sign, rep), down
    lam_dd = _dd.dd(lam)
    return lam_dd, _dd.mul_float(lam_dd, rep.q), _dd.div(lam_dd, _dd.dd(rep.q))


def qdiff_terms(n, rep, lam):
    """Left side and the three right-side terms of the q-difference equation

        (q^-n - a^2 q^{n+1}) C~_n(lam)
            = -a^2 q lam^-2 (lam^2 + 1) C~_n(q lam)
              + lam^-2 a^2 q (1 + q) C~_n(lam)
              + lam^-2 (lam^2 - a^2 q^2) C~_n(lam / q),

    all in a common power-of-two unit (returned last).
    """
    if lam == 0:
        raise ValueError("lam must be non-zero")
    q, a2 = rep.q, rep.a * rep.a
    k1, k2, k3 = qdiff_coefficients(rep, lam)
    vals = [ctilde_scaled(n, rep, pt)[n] for pt in scaled_points(rep, lam)]
    nonzero = [e for m, e in vals if m != 0.0]
    unit = max(nonzero) if nonzero else 0
    p_lam, p_up, p_down = (math.ldexp(m, e - unit) for m, e in vals)
    lhs = (q ** (-n) - a2 * q ** (n + 1)) * p_lam
    rhs = (k1 * p_up, k2 * p_lam, k3 * p_down)
    return lhs, rhs, unit


def qdiff_residual(n, rep, lam, scaled=False):
    """LHS - RHS of the q-difference equation at degree n and point lam.

    With ``scaled=True`` returns ``(residual, scale)`` in the common unit, where
    scale is the largest absolute term on either side.
    """
    lhs, rhs, unit = qdiff_terms(n, rep, lam)
    residual = lhs - math.fsum(rhs)
    if scaled:
        return residual, max(abs(lhs), *(abs(t) for t in rhs))
    return math.ldexp(residual, unit)


__all__ = [
    "FamilyParams",
    "RepParams",
    "RecurrenceCoeffs",
    "recurrence_coeffs",
    "ctilde",
    "ctilde_all",
    "ctilde_log",
    "ctilde_scaled",
    "ctilde_series",
    "match_node",
    "special_value",
    "printed_special_value",
    "mu",
    "dual_dtilde",
    "dual_dtilde_log",
    "qdiff_residual",
]
