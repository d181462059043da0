"""Exact Gaussian-rational coefficients and input parsing helpers."""

from __future__ import annotations

import numbers
from fractions import Fraction


class GaussianRational:
    """Complex number with arbitrary-precision rational real and imaginary parts.

    Instances are immutable. Arithmetic with ``int`` and ``Fraction`` operands is
    supported; mixing with ``float``/``complex`` raises ``TypeError`` so exact and
    floating values cannot be combined by accident.
    """

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _to_fraction(re))
        object.__setattr__(self, "im", _to_fraction(im))

    @classmethod
    def _make(cls, re: Fraction, im: Fraction) -> "GaussianRational":
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    def __reduce__(self):
        return (GaussianRational, (self.re, self.im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Fraction)):
            return cls._make(Fraction(value), Fraction(0))
        raise TypeError(f"cannot use {type(value).__name__} as an exact coefficient")

    def __add__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational._make(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational._make(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return other - self

    def __neg__(self):
        return GaussianRational._make(-self.re, -self.im)

    def __mul__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b and not d:
            return GaussianRational._make(a * c, b)
        return GaussianRational._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        if not c and not d:
            raise ZeroDivisionError("division by exact zero")
        if not b and not d:
            return GaussianRational._make(a / c, b)
        den = c * c + d * d
        return GaussianRational._make((a * c + b * d) / den, (b * c - a * d) / den)

    def __rtruediv__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return other / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return GaussianRational(1) / (self ** (-k))
        result = GaussianRational._make(Fraction(1), Fraction(0))
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if not self.im:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self) -> float:
        return abs(complex(self))

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._make(self.re, -self.im)

    @property
    def is_real(self) -> bool:
        return not self.im

    def norm2(self) -> Fraction:
        """Squared modulus, exact."""
        return self.re * self.re + self.im * self.im

    def __repr__(self):
        return f"GaussianRational({self.re!s}, {self.im!s})"

    def __str__(self):
        return format_exact(self)


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, float):
        # literal decimal expansion, so 0.1 becomes 1/10 rather than the binary value
        return Fraction(repr(value))
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def _format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_exact(c: GaussianRational) -> str:
    """Text form ``a/b+c/d*i``; purely real values print without the imaginary part."""
    if not c.im:
        return _format_fraction(c.re)
    sign = "+" if c.im > 0 else "-"
    return f"{_format_fraction(c.re)}{sign}{_format_fraction(abs(c.im))}*i"


def format_float(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    sign = "+" if c.imag > 0 else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}*i"


def parse_exact(value) -> GaussianRational:
    """Parse a JSON-level coefficient into a Gaussian rational.

    Accepts ints, floats (literal decimal expansion), strings ``"num/den"`` or
    decimal strings, ``[re, im]`` pairs of those, and existing exact values.
    """
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex coefficient must be a [re, im] pair, got {value!r}")
        return GaussianRational(_to_fraction(value[0]), _to_fraction(value[1]))
    if isinstance(value, complex):
        return GaussianRational(_to_fraction(value.real), _to_fraction(value.imag))
    if isinstance(value, numbers.Number) or isinstance(value, str):
        try:
            return GaussianRational(_to_fraction(value), 0)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"invalid rational literal {value!r}") from exc
    raise ValueError(f"unsupported coefficient {value!r}")


def to_json_exact(c: GaussianRational) -> list[str]:
    return [_format_fraction(c.re), _format_fraction(c.im)]


def is_exact(c) -> bool:
    return isinstance(c, GaussianRational)
