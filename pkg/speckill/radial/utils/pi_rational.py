"""
pi_rational.py

Exact numbers of the form a + b*pi with rational a and b.

Every quantity met when analysing radial profiles (plateau values, squared
radii, multiples of pi*r^2, slopes) lives in this set, so comparisons such as
"action > E" can be decided exactly. Since pi is irrational, a + b*pi is zero
only when a = b = 0; any other sign is decided with outward-rounded interval
arithmetic at increasing precision.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Union

from mpmath import iv

# Starting precision (bits) for interval sign decisions
_START_PREC = 64

# iv.prec is global state of the mpmath interval context
_PRECISION_LOCK = threading.Lock()


def to_fraction(value: Union[int, Fraction, str, float]) -> Fraction:
    """
    Converts an int, Fraction, decimal string ("0.35", "1e-6") or "p/q" string
    into a Fraction. Floats are converted through their shortest repr so that
    0.35 becomes 7/20 rather than its binary expansion.

    Args:
        value: The value to convert.

    Returns:
        Fraction: The exact rational value.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("Booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"Cannot convert {type(value).__name__} to Fraction")


def fraction_str(value: Fraction) -> str:
    """
    Formats a Fraction as "p/q" (or "p" for integers).
    """
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _interval(value: Fraction):
    return iv.mpf(value.numerator) / value.denominator


def _sign(rat: Fraction, pi: Fraction) -> int:
    """
    Returns the sign of rat + pi * PI exactly.
    """
    if pi == 0:
        return (rat > 0) - (rat < 0)
    if rat == 0:
        return (pi > 0) - (pi < 0)

    with _PRECISION_LOCK:
        saved_prec = iv.prec
        try:
            prec = _START_PREC
            while True:
                iv.prec = prec
                enclosure = _interval(rat) + _interval(pi) * iv.pi
                if enclosure > 0:
                    return 1
                if enclosure < 0:
                    return -1
                prec *= 2
        finally:
            iv.prec = saved_prec


@dataclass(frozen=True)
class PiRational:
    """
    An exact real number rat + pi_coeff * PI.

    Attributes:
        rat (Fraction): The rational part.
        pi (Fraction): The coefficient of PI.
    """

    rat: Fraction = Fraction(0)
    pi: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "rat", to_fraction(self.rat))
        object.__setattr__(self, "pi", to_fraction(self.pi))

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def of(cls, value: Any) -> "PiRational":
        """
        Coerces ints, Fractions, strings, floats and {"rat", "pi"} mappings
        into a PiRational.
        """
        if isinstance(value, PiRational):
            return value
        if isinstance(value, dict):
            return cls.from_json(value)
        return cls(to_fraction(value), Fraction(0))

    @classmethod
    def pi_multiple(cls, coefficient: Union[int, Fraction, str]) -> "PiRational":
        """
        Returns coefficient * PI.
        """
        return cls(Fraction(0), to_fraction(coefficient))

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "PiRational":
        return cls(to_fraction(data.get("rat", 0)), to_fraction(data.get("pi", 0)))

    def to_json(self) -> Dict[str, str]:
        return {"rat": fraction_str(self.rat), "pi": fraction_str(self.pi)}

    # ------------------------------------------------------------------
    # Properties
    # ------------------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.pi == 0

    def sign(self) -> int:
        return _sign(self.rat, self.pi)

    def is_zero(self) -> bool:
        return self.rat == 0 and self.pi == 0

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other: Any) -> "PiRational":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PiRational(self.rat + other.rat, self.pi + other.pi)

    __radd__ = __add__

    def __neg__(self) -> "PiRational":
        return PiRational(-self.rat, -self.pi)

    def __pos__(self) -> "PiRational":
        return self

    def __sub__(self, other: Any) -> "PiRational":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return PiRational(self.rat - other.rat, self.pi - other.pi)

    def __rsub__(self, other: Any) -> "PiRational":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other: Any) -> "PiRational":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_rational:
            return PiRational(self.rat * other.rat, self.pi * other.rat)
        if self.is_rational:
            return PiRational(other.rat * self.rat, other.pi * self.rat)
        raise ArithmeticError(
            f"Product of {self} and {other} has a pi^2 term and is not representable"
        )

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "PiRational":
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero")
        if other.is_rational:
            return PiRational(self.rat / other.rat, self.pi / other.rat)
        if other.rat == 0 and self.rat == 0:
            return PiRational(self.pi / other.pi, Fraction(0))
        raise ArithmeticError(f"Quotient {self} / {other} is not representable")

    def __abs__(self) -> "PiRational":
        return -self if self.sign() < 0 else self

    # ------------------------------------------------------------------
    # Comparison
    # ------------------------------------------------------------------

    def _cmp(self, other: Any) -> int:
        other = _coerce(other)
        if other is NotImplemented:
            raise TypeError(f"Cannot compare PiRational with {type(other).__name__}")
        return (self - other).sign()

    def __eq__(self, other: Any) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.rat == other.rat and self.pi == other.pi

    def __hash__(self) -> int:
        return hash((self.rat, self.pi))

    def __lt__(self, other: Any) -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: Any) -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: Any) -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: Any) -> bool:
        return self._cmp(other) >= 0

    # ------------------------------------------------------------------
    # Conversion
    # ------------------------------------------------------------------

    def __float__(self) -> float:
        return float(self.rat) + float(self.pi) * math.pi

    def __str__(self) -> str:
        if self.pi == 0:
            return fraction_str(self.rat)
        if self.rat == 0:
            return f"{fraction_str(self.pi)}*pi"
        return f"{fraction_str(self.rat)} + {fraction_str(self.pi)}*pi"

    def __repr__(self) -> str:
        return f"PiRational({self})"


def _coerce(value: Any):
    if isinstance(value, PiRational):
        return value
    if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
        return PiRational(Fraction(value), Fraction(0))
    return NotImplemented


ZERO = PiRational()
PI = PiRational.pi_multiple(1)
TWO_PI = PiRational.pi_multiple(2)


def floor_ratio(value: PiRational, unit: PiRational) -> int:
    """
    Returns the largest integer k with k * unit <= value, for unit > 0.

    The float quotient only seeds the search; the result is settled by exact
    comparisons.

    Args:
        value (PiRational): The numerator.
        unit (PiRational): The positive step.

    Returns:
        int: floor(value / unit).
    """
    if unit.sign() <= 0:
        raise ValueError("unit must be positive")

    guess = math.floor(float(value) / float(unit))
    while unit * guess > value:
        guess -= 1
    while unit * (guess + 1) <= value:
        guess += 1
    return guess


def ceil_ratio(value: PiRational, unit: PiRational) -> int:
    """
    Returns the smallest integer k with k * unit >= value, for unit > 0.
    """
    return -floor_ratio(-value, unit)


def smallest_multiple_above(unit: PiRational, threshold: PiRational) -> int:
    """
    Returns the smallest positive integer k with k * unit > threshold.
    """
    return max(1, floor_ratio(threshold, unit) + 1)
