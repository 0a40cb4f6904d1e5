"""q-analysis kernels: q-Pochhammer symbols and terminating 3phi2 series.

All sums go through :func:`math.fsum` in ascending index order, so results are
correctly rounded for the computed terms and reproducible run to run.
"""

from dataclasses import dataclass
import math

from .errors import PoleError, SeriesDomainError, TruncationError


@dataclass(frozen=True)
class LogScaledReal:
    """A real number stored as ``sign * exp(log_mag)``.

    Used for products that mix factors like ``q**(-n*(n+3)/4)`` with rapidly
    decaying ones; only the final result is brought back to binary64.
    """

    sign: int
    log_mag: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")

    @classmethod
    def from_float(cls, x):
        if x == 0.0:
            return cls(0, 0.0)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_mantissa(cls, m, exponent2):
        """The value ``m * 2**exponent2``; keeps huge/tiny values exact in range."""
        if m == 0.0:
            return cls(0, 0.0)
        return cls(1 if m > 0 else -1, math.log(abs(m)) + exponent2 * math.log(2.0))

    def to_float(self):
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    __float__ = to_float

    def __mul__(self, other):
        if not isinstance(other, LogScaledReal):
            other = LogScaledReal.from_float(float(other))
        sign = self.sign * other.sign
        if sign == 0:
            return LogScaledReal(0, 0.0)
        return LogScaledReal(sign, self.log_mag + other.log_mag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogScaledReal):
            other = LogScaledReal.from_float(float(other))
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero LogScaledReal")
        if self.sign == 0:
            return self
        return LogScaledReal(self.sign * other.sign, self.log_mag - other.log_mag)

    def __neg__(self):
        return LogScaledReal(-self.sign, self.log_mag)

    def square(self):
        if self.sign == 0:
            return self
        return LogScaledReal(1, 2.0 * self.log_mag)


@dataclass(frozen=True)
class SeriesTolerance:
    eps_term: float = 1e-16
    max_terms: int = 10000

    def __post_init__(self):
        if not (0.0 < self.eps_term < 1.0):
            raise ValueError("eps_term must lie in (0, 1)")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_TOL = SeriesTolerance()


def csum(values):
    """Compensated sum of real or complex values, ascending order."""
    values = list(values)
    if any(isinstance(v, complex) for v in values):
        return complex(math.fsum(v.real for v in values), math.fsum(v.imag for v in values))
    return math.fsum(values)


def qpoch(x, q, n):
    """Finite q-Pochhammer symbol (x; q)_n = prod_{k<n} (1 - x q^k)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    result = 1.0
    qk = 1.0
    for _ in range(n):
        result *= 1.0 - x * qk
        qk *= q
    return result


def qpoch_inf(x, q, tol=DEFAULT_TOL):
    """(x; q)_inf truncated once |x| q^k < eps_term.

    The relative truncation error is at most ``2 * eps_term * |x| / (1 - q)``.
    """
    result = 1.0
    term = abs(x)
    xk = x
    for _ in range(tol.max_terms):
        if term < tol.eps_term:
            return result
        result *= 1.0 - xk
        xk *= q
        term *= q
    raise TruncationError(
        f"(x;q)_inf with x={x!r}, q={q!r} did not reach its tail bound in {tol.max_terms} factors"
    )


def qpoch_inf_multi(xs, q, tol=DEFAULT_TOL):
    """(x1, x2, ...; q)_inf."""
    result = 1.0
    for x in xs:
        result *= qpoch_inf(x, q, tol)
    return result


def paired_imag_qpoch(c, q, n):
    """(ic; q)_n (-ic; q)_n evaluated in real arithmetic as (-c^2; q^2)_n."""
    return qpoch(-c * c, q * q, n)


def _is_termination_witness(p, target):
    return abs(p - target) <= 1e-12 * abs(target)


def phi32_terms(num, den, q, z, n_stop):
    """Terms k = 0..n_stop of a terminating 3phi2 series.

    One numerator parameter must equal q**(-n_stop).
    """
    a1, a2, a3 = num
    b1, b2 = den
    if n_stop < 0:
        raise ValueError("n_stop must be non-negative")
    witness = q ** (-n_stop)
    if not any(_is_termination_witness(p, witness) for p in num):
        raise SeriesDomainError(
            f"no numerator parameter equals q^-{n_stop}; the series does not terminate there"
        )
    terms = [1.0]
    term = 1.0
    qk = 1.0
    for k in range(n_stop):
        d1 = 1.0 - b1 * qk
        d2 = 1.0 - b2 * qk
        d0 = 1.0 - q * qk
        if d1 == 0 or d2 == 0:
            raise PoleError(f"denominator Pochhammer vanishes at k={k + 1}")
        term = term * ((1.0 - a1 * qk) * (1.0 - a2 * qk) * (1.0 - a3 * qk)) / (d0 * d1 * d2) * z
        terms.append(term)
        qk *= q
    return terms


def phi32_terminating(num, den, q, z, n_stop):
    """Terminating 3phi2(a1, a2, a3; b1, b2; q, z), summed over k = 0..n_stop."""
    return csum(phi32_terms(num, den, q, z, n_stop))
