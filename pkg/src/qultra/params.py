from dataclasses import dataclass
import math

from .errors import ParameterError


def _check_q(q):
    if not (isinstance(q, (int, float)) and math.isfinite(q) and 0.0 < q < 1.0):
        raise ParameterError(f"q must satisfy 0 < q < 1, got {q!r}")


@dataclass(frozen=True)
class FamilyParams:
    """Parameters (q, c) of the polynomial family C~_n^{(c)}(x; q)."""

    q: float
    c: float

    def __post_init__(self):
        _check_q(self.q)
        if not (math.isfinite(self.c) and self.c > 0.0):
            raise ParameterError(f"c must be positive, got {self.c!r}")


@dataclass(frozen=True)
class RepParams:
    """Representation parameters (q, a).

    The lowest weight l is fixed implicitly by q**(2l - 1) = -a and is never
    materialized.  The driven polynomial family has c = a**2.
    """

    q: float
    a: float

    def __post_init__(self):
        _check_q(self.q)
        if not (isinstance(self.a, (int, float)) and math.isfinite(self.a) and self.a > 0.0):
            raise ParameterError(f"a must be positive, got {self.a!r}")

    @property
    def c(self):
        return self.a * self.a

    @property
    def family(self):
        return FamilyParams(self.q, self.a * self.a)
