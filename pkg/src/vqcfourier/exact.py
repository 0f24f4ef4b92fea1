"""Exact Gaussian-rational numbers (a + b i with a, b in Q)."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

__all__ = ["GaussianRational", "I_POWERS"]


class GaussianRational:
    """Immutable complex number with rational real and imaginary parts."""

    __slots__ = ("_re", "_im")

    def __init__(self, re=0, im=0):
        self._re = re if isinstance(re, Fraction) else Fraction(re)
        self._im = im if isinstance(im, Fraction) else Fraction(im)

    @property
    def re(self) -> Fraction:
        return self._re

    @property
    def im(self) -> Fraction:
        return self._im

    @classmethod
    def coerce(cls, value) -> GaussianRational:
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value, 0)
        if isinstance(value, float):
            return cls(Fraction(value), 0)
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        raise TypeError(f"cannot convert {type(value).__name__} to GaussianRational")

    @classmethod
    def i_power(cls, exponent: int) -> GaussianRational:
        return I_POWERS[exponent % 4]

    def conjugate(self) -> GaussianRational:
        return GaussianRational(self._re, -self._im)

    def abs2(self) -> Fraction:
        return self._re * self._re + self._im * self._im

    def __add__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self._re + other._re, self._im + other._im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self._re, -self._im)

    def __sub__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return GaussianRational(self._re - other._re, self._im - other._im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        a, b, c, d = self._re, self._im, other._re, other._im
        return GaussianRational(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = GaussianRational.coerce(other)
        den = other.abs2()
        if den == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        num = self * other.conjugate()
        return GaussianRational(num._re / den, num._im / den)

    def __eq__(self, other):
        try:
            other = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self._re == other._re and self._im == other._im

    def __hash__(self):
        if self._im == 0:
            return hash(self._re)
        return hash((self._re, self._im))

    def __bool__(self):
        return bool(self._re) or bool(self._im)

    def __complex__(self):
        return complex(float(self._re), float(self._im))

    def __repr__(self):
        return f"GaussianRational({self._re}, {self._im})"

    def __str__(self):
        if self._im == 0:
            return str(self._re)
        if self._re == 0:
            return f"{self._im}i"
        sign = "+" if self._im > 0 else "-"
        return f"{self._re}{sign}{abs(self._im)}i"


I_POWERS = (
    GaussianRational(1, 0),
    GaussianRational(0, 1),
    GaussianRational(-1, 0),
    GaussianRational(0, -1),
)
