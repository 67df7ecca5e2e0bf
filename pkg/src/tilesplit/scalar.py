"""Positive scalars that stay exact under products, quotients and rational powers.

An exact scalar is stored as a finite product of prime powers with rational
exponents, ``prod p**e_p``.  This covers rationals (integer exponents) and
rational powers of rationals such as ``2**(1/2) / 3``.  Anything else is kept
as a positive float.  Mixing an exact scalar with a float gives a float.

Lengths in the associated graph are logarithms of scalars, so sums of lengths
are products of scalars and integer multiples of lengths are powers.  Exact
comparison of lengths then reduces to comparing exponent vectors, which is
sound because the logarithms of distinct primes are linearly independent over
the rationals.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping

__all__ = [
    "Scalar",
    "factorize",
    "frac_gcd",
    "exact_sum",
    "parse_scalar",
]


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer by trial division."""
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def frac_gcd(values: Iterable[Fraction]) -> Fraction:
    """Largest positive rational g with every value an integer multiple of g."""
    vals = [Fraction(v) for v in values if v != 0]
    if not vals:
        return Fraction(0)
    num = reduce(math.gcd, (abs(v.numerator) for v in vals))
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (v.denominator for v in vals))
    return Fraction(num, den)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"not an exact rational: {x!r}")


class Scalar:
    """Positive real number, exact (prime-power product) or numeric (float)."""

    __slots__ = ("_exps", "_value", "_log")

    def __init__(self, exps: Mapping[int, Fraction] | None = None, value: float | None = None):
        if exps is None:
            if value is None:
                raise ValueError("need exponents or a value")
            v = float(value)
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"scalar must be finite and positive, got {value!r}")
            self._exps = None
            self._value = v
            self._log = math.log(v)
        else:
            clean = tuple(sorted((int(p), Fraction(e)) for p, e in exps.items() if e != 0))
            self._exps = clean
            self._log = sum(float(e) * math.log(p) for p, e in clean)
            self._value = math.exp(self._log) if self._log < 700.0 else math.inf

    # construction -----------------------------------------------------------
    @classmethod
    def one(cls) -> "Scalar":
        return cls({})

    @classmethod
    def rational(cls, q) -> "Scalar":
        q = _as_fraction(q)
        if q <= 0:
            raise ValueError(f"scalar must be positive, got {q}")
        exps: dict[int, Fraction] = {}
        for p, e in factorize(q.numerator).items():
            exps[p] = exps.get(p, Fraction(0)) + e
        for p, e in factorize(q.denominator).items():
            exps[p] = exps.get(p, Fraction(0)) - e
        return cls(exps)

    @classmethod
    def power(cls, base, exponent) -> "Scalar":
        return cls.rational(base) ** _as_fraction(exponent)

    @classmethod
    def numeric(cls, x: float) -> "Scalar":
        return cls(value=x)

    # queries ----------------------------------------------------------------
    @property
    def exact(self) -> bool:
        return self._exps is not None

    @property
    def exponents(self) -> dict[int, Fraction]:
        if self._exps is None:
            raise ValueError("numeric scalar has no exponent vector")
        return dict(self._exps)

    def __float__(self) -> float:
        return self._value

    def log(self) -> float:
        return self._log

    def is_one(self) -> bool:
        if self._exps is not None:
            return not self._exps
        return self._value == 1.0

    def as_fraction(self) -> Fraction | None:
        """The exact rational value, or None when irrational or numeric."""
        if self._exps is None or any(e.denominator != 1 for _, e in self._exps):
            return None
        out = Fraction(1)
        for p, e in self._exps:
            out *= Fraction(p) ** int(e)
        return out

    def base_exponent(self) -> tuple[Fraction, Fraction]:
        """Write an exact scalar as ``base ** (1/D)`` with rational base."""
        if self._exps is None:
            raise ValueError("numeric scalar")
        D = 1
        for _, e in self._exps:
            D = D * e.denominator // math.gcd(D, e.denominator)
        base = Fraction(1)
        for p, e in self._exps:
            base *= Fraction(p) ** int(e * D)
        return base, Fraction(1, D)

    # arithmetic -------------------------------------------------------------
    def __mul__(self, other) -> "Scalar":
        other = _coerce(other)
        if self._exps is not None and other._exps is not None:
            exps = dict(self._exps)
            for p, e in other._exps:
                exps[p] = exps.get(p, Fraction(0)) + e
            return Scalar(exps)
        return Scalar(value=math.exp(self._log + other._log))

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self._exps is not None:
            return Scalar({p: -e for p, e in self._exps})
        return Scalar(value=1.0 / self._value)

    def __truediv__(self, other) -> "Scalar":
        return self * _coerce(other).inverse()

    def __rtruediv__(self, other) -> "Scalar":
        return _coerce(other) * self.inverse()

    def __pow__(self, k) -> "Scalar":
        if isinstance(k, float):
            return Scalar(value=math.exp(self._log * k))
        k = _as_fraction(k)
        if self._exps is not None:
            return Scalar({p: e * k for p, e in self._exps})
        return Scalar(value=math.exp(self._log * float(k)))

    def __lt__(self, other) -> bool:
        return self.compare(_coerce(other)) < 0

    def __gt__(self, other) -> bool:
        return self.compare(_coerce(other)) > 0

    def compare(self, other: "Scalar") -> int:
        """Sign of self - other; exact equality is detected exactly."""
        if self._exps is not None and other._exps is not None and self._exps == other._exps:
            return 0
        a, b = self.log(), other.log()
        return (a > b) - (a < b)

    def close(self, other, rel: float = 1e-12) -> bool:
        other = _coerce(other)
        if self.exact and other.exact:
            return self._exps == other._exps
        return abs(self._value - other._value) <= rel * max(abs(self._value), abs(other._value))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scalar):
            return NotImplemented
        if self._exps is not None or other._exps is not None:
            return self._exps == other._exps
        return self._value == other._value

    def __hash__(self) -> int:
        return hash(self._exps) if self._exps is not None else hash(self._value)

    def __repr__(self) -> str:
        if self._exps is None:
            return f"Scalar({self._value!r})"
        q = self.as_fraction()
        if q is not None:
            return f"Scalar({q})"
        base, ex = self.base_exponent()
        return f"Scalar({base}**{ex})"

    # serialization ----------------------------------------------------------
    def to_json(self):
        if self._exps is None:
            return self._value
        q = self.as_fraction()
        if q is not None:
            return str(q)
        base, ex = self.base_exponent()
        return {"base": str(base), "exponent": str(ex)}


def _coerce(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar.rational(x)
    return Scalar.numeric(float(x))


def parse_scalar(obj) -> Scalar:
    """Decode the JSON encoding: "p/q" string, {"base", "exponent"} or a number."""
    if isinstance(obj, bool):
        raise ValueError("boolean is not a scalar")
    if isinstance(obj, str):
        return Scalar.rational(obj)
    if isinstance(obj, int):
        return Scalar.rational(obj)
    if isinstance(obj, float):
        return Scalar.numeric(obj)
    if isinstance(obj, dict):
        extra = set(obj) - {"base", "exponent"}
        if extra or "base" not in obj:
            raise ValueError(f"bad scalar object {obj!r}")
        base, ex = obj["base"], obj.get("exponent", "1")
        if isinstance(base, float) or isinstance(ex, float):
            return Scalar.numeric(float(Fraction(base) if isinstance(base, str) else base)
                                  ** float(Fraction(ex) if isinstance(ex, str) else ex))
        return Scalar.power(base, ex)
    raise ValueError(f"bad scalar {obj!r}")


def exact_sum(values: Iterable[Scalar]) -> Fraction | None:
    """Exact sum when every term is rational, else None."""
    total = Fraction(0)
    for v in values:
        q = v.as_fraction()
        if q is None:
            return None
        total += q
    return total
