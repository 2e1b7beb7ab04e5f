"""Unit tests for exact a + b*pi arithmetic."""
from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from speckill.radial.utils.pi_rational import (
    PI,
    ZERO,
    PiRational,
    ceil_ratio,
    floor_ratio,
    fraction_str,
    smallest_multiple_above,
    to_fraction,
)


class TestToFraction:
    """Tests for to_fraction and fraction_str."""

    def test_decimal_strings_are_exact(self):
        """Decimal strings parse to their exact rational value."""
        assert to_fraction("0.35") == Fraction(7, 20)
        assert to_fraction("1e-6") == Fraction(1, 10**6)

    def test_floats_use_shortest_repr(self):
        """0.35 becomes 7/20 rather than its binary expansion."""
        assert to_fraction(0.35) == Fraction(7, 20)

    def test_ratio_strings(self):
        """p/q strings are accepted."""
        assert to_fraction("7/20") == Fraction(7, 20)

    def test_rejects_booleans(self):
        """Booleans are not numbers."""
        with pytest.raises(TypeError):
            to_fraction(True)

    def test_fraction_str(self):
        """Integers print without a denominator."""
        assert fraction_str(Fraction(7, 20)) == "7/20"
        assert fraction_str(Fraction(-3)) == "-3"


class TestPiRational:
    """Tests for the PiRational number type."""

    def test_zero_only_when_both_parts_vanish(self):
        """a + b*pi = 0 iff a = b = 0."""
        assert PiRational().is_zero()
        assert PiRational(Fraction(0), Fraction(0)).sign() == 0
        assert not PiRational(Fraction(-22, 7), Fraction(1)).is_zero()

    def test_sign_near_rational_approximations(self):
        """Signs against close rational approximations of pi are exact."""
        assert (PI - Fraction(355, 113)).sign() == -1
        assert (PI - Fraction(333, 106)).sign() == 1
        assert (PI - Fraction(22, 7)).sign() == -1

    def test_sign_matches_float_on_random_values(self):
        """Random well-separated values agree with floating point."""
        rng = random.Random(7)
        for _ in range(200):
            a = Fraction(rng.randint(-1000, 1000), rng.randint(1, 50))
            b = Fraction(rng.randint(-1000, 1000), rng.randint(1, 50))
            value = float(a) + float(b) * math.pi
            if abs(value) < 1e-9:
                continue
            assert PiRational(a, b).sign() == (1 if value > 0 else -1)

    def test_arithmetic(self):
        """Sums, scalar products and quotients stay exact."""
        x = PiRational(Fraction(1), Fraction(1, 2))
        y = PiRational(Fraction(-1, 3), Fraction(2))
        assert x + y == PiRational(Fraction(2, 3), Fraction(5, 2))
        assert x - y == PiRational(Fraction(4, 3), Fraction(-3, 2))
        assert x * 2 == PiRational(Fraction(2), Fraction(1))
        assert x / Fraction(1, 2) == PiRational(Fraction(2), Fraction(1))
        assert PI * 3 / PI == PiRational(Fraction(3))

    def test_pi_squared_is_rejected(self):
        """Products with two pi factors are not representable."""
        with pytest.raises(ArithmeticError):
            _ = PI * PI

    def test_comparisons(self):
        """Comparisons are decided exactly."""
        assert PI > 3
        assert PI < Fraction(22, 7)
        assert PiRational(Fraction(2, 5)) > PI * Fraction(49, 400)
        assert abs(-PI) == PI
        assert ZERO <= ZERO

    def test_json_round_trip(self):
        """JSON uses p/q strings for both parts."""
        x = PiRational(Fraction(-1, 10), Fraction(1, 25))
        assert x.to_json() == {"rat": "-1/10", "pi": "1/25"}
        assert PiRational.of(x.to_json()) == x

    def test_float(self):
        """float() evaluates rat + pi * PI."""
        x = PiRational(Fraction(-1, 10), Fraction(1, 25))
        assert float(x) == pytest.approx(0.04 * math.pi - 0.1, rel=1e-15)


class TestRatios:
    """Tests for floor_ratio, ceil_ratio and smallest_multiple_above."""

    def test_floor_and_ceil(self):
        """Ratios of pi-multiples are exact integers."""
        assert floor_ratio(PI * 7, PI * 2) == 3
        assert ceil_ratio(PI * 7, PI * 2) == 4
        assert floor_ratio(PI * -7, PI * 2) == -4

    def test_exact_multiple(self):
        """floor and ceil agree on exact multiples."""
        assert floor_ratio(PI * 6, PI * 2) == 3
        assert ceil_ratio(PI * 6, PI * 2) == 3

    def test_smallest_multiple_above(self):
        """The multiple is strictly above the threshold and at least one."""
        unit = PiRational(Fraction(1), Fraction(9, 400))
        assert smallest_multiple_above(unit, PiRational(Fraction(2, 5))) == 1
        assert smallest_multiple_above(PI, PI * 2) == 3

    def test_rejects_nonpositive_unit(self):
        """The unit must be positive."""
        with pytest.raises(ValueError):
            floor_ratio(PI, -PI)
