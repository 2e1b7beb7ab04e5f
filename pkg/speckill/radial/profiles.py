"""
profiles.py

Constructors for the radial profiles used throughout speckill: the spectral
killer, the certification profile and a sharpness bump.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Any, Optional, Tuple

from speckill.errors import InvalidParameterError
from speckill.radial.utils.pi_rational import PI, ZERO, PiRational, to_fraction
from speckill.radial.utils.profile_infra import RadialProfile, make_profile

logger = logging.getLogger(__name__)


def check_radii(r: Any, eps: Any) -> Tuple[Fraction, Fraction]:
    """
    Coerces (r, eps) to Fractions and checks 0 < eps < r/4.

    Raises:
        InvalidParameterError: If the radii are not admissible.
    """
    try:
        r, eps = to_fraction(r), to_fraction(eps)
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"Radii must be rational numbers: {exc}") from exc

    if r <= 0:
        raise InvalidParameterError(f"Radius r must be positive, got {r}.")
    if eps <= 0:
        raise InvalidParameterError(f"epsilon must be positive, got {eps}.")
    if eps >= r / 4:
        raise InvalidParameterError(f"epsilon must be < r/4 (epsilon={eps}, r={r}).")
    return r, eps


def shell_s(r: Fraction, eps: Fraction, k: int) -> PiRational:
    """
    Area coordinate (r - k*eps)^2 / 2 of the k-th shell radius.
    """
    return PiRational((r - k * eps) ** 2 / 2)


def ball_area(r: Any) -> PiRational:
    """
    Returns pi * r^2.
    """
    return PI * to_fraction(r) ** 2


def make_killer(r: Any, eps: Any) -> RadialProfile:
    """
    Builds the spectral killer K_eps: zero outside the shell
    r - 4eps <= |z| <= r - eps, equal to -pi r^2 on r - 3eps <= |z| <= r - 2eps
    and linear (in s) in between.

    Args:
        r: Ball radius.
        eps: Shell width parameter, 0 < eps < r/4.

    Returns:
        RadialProfile: The killer profile.
    """
    r, eps = check_radii(r, eps)
    depth = -ball_area(r)

    profile = make_profile(
        [
            (shell_s(r, eps, 4), ZERO),
            (shell_s(r, eps, 3), depth),
            (shell_s(r, eps, 2), depth),
            (shell_s(r, eps, 1), ZERO),
        ]
    )
    logger.debug("Built killer r=%s eps=%s", r, eps)
    return profile


def make_certification_profile(
    r: Any, eps: Any, m: Any, plateau: Optional[Any] = None
) -> RadialProfile:
    """
    Builds the certification profile F: m on the inner ball B_{r-4eps}, the
    plateau value (default -pi r^2) on the middle shell and 0 outside B_{r-eps}.

    Args:
        r: Ball radius.
        eps: Shell width parameter, 0 < eps < r/4.
        m: Positive inner plateau value.
        plateau: Optional middle plateau value a with -pi r^2 <= a <= 0.

    Returns:
        RadialProfile: The certification profile.
    """
    r, eps = check_radii(r, eps)
    m = PiRational.of(m)
    if m.sign() <= 0:
        raise InvalidParameterError(f"Inner plateau m must be positive, got {m}.")

    depth = -ball_area(r)
    plateau = depth if plateau is None else PiRational.of(plateau)
    if plateau < depth or plateau.sign() > 0:
        raise InvalidParameterError(
            f"Plateau value must lie in [-pi r^2, 0], got {plateau}."
        )

    return make_profile(
        [
            (shell_s(r, eps, 4), m),
            (shell_s(r, eps, 3), plateau),
            (shell_s(r, eps, 2), plateau),
            (shell_s(r, eps, 1), ZERO),
        ]
    )


def make_bump_profile(r: Any, theta: Any) -> RadialProfile:
    """
    Builds a profile supported in B_r with maximum theta * pi r^2 and every
    slope inside (-2pi, 2pi), so it has no nonconstant 1-periodic orbits. As
    theta -> 1 its maximum approaches pi r^2, which shows that the upper bound
    pi r^2 on c(H) cannot be improved.

    Args:
        r: Ball radius.
        theta: Height fraction, 0 < theta < 1.
    """
    r, theta = to_fraction(r), to_fraction(theta)
    if r <= 0:
        raise InvalidParameterError(f"Radius r must be positive, got {r}.")
    if not 0 < theta < 1:
        raise InvalidParameterError(f"theta must lie in (0, 1), got {theta}.")

    # Descending slope is -4*pi*theta/(1 + theta) > -2*pi
    return make_profile(
        [
            ((1 - theta) * r**2 / 4, ball_area(r) * theta),
            (r**2 / 2, ZERO),
        ]
    )
