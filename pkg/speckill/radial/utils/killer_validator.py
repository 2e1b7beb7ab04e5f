"""
killer_validator.py

Checks a radial profile against the five defining conditions of a spectral
killer K_eps for the ball B_r:

    (1) support inside the shell r - 4eps <= |z| <= r - eps
    (2) radial, i.e. a single-valued function of |z|
    (3) decreasing linearly on r - 4eps <= |z| <= r - 3eps
    (4) equal to -pi r^2 on r - 3eps <= |z| <= r - 2eps
    (5) increasing linearly on r - 2eps <= |z| <= r - eps

Linearity is measured in the area coordinate s = |z|^2/2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, List, Optional, Tuple

from speckill.errors import InvalidParameterError, SpeckillError
from speckill.radial.profiles import ball_area, check_radii, shell_s
from speckill.radial.utils.pi_rational import PiRational
from speckill.radial.utils.profile_infra import RadialProfile, evaluate

logger = logging.getLogger(__name__)

CONDITION_NAMES = {
    1: "support",
    2: "radial",
    3: "linear_descent",
    4: "plateau",
    5: "linear_ascent",
}


@dataclass
class ConditionResult:
    """The outcome of checking one killer condition."""

    condition: int
    name: str
    ok: bool
    detail: str = ""


@dataclass
class KillerValidationReport:
    """Per-condition results for one profile."""

    results: List[ConditionResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def failures(self) -> List[ConditionResult]:
        return [r for r in self.results if not r.ok]

    def to_json(self):
        return {
            "ok": self.ok,
            "conditions": [
                {"condition": r.condition, "name": r.name, "ok": r.ok, "detail": r.detail}
                for r in self.results
            ],
        }


def _interior_nodes(profile: RadialProfile, low: PiRational, high: PiRational):
    return [n for n in profile.nodes if low < n.s < high]


def _is_linear_on(profile: RadialProfile, low: PiRational, high: PiRational) -> bool:
    # Interior nodes must lie on the chord between the endpoints
    f_low, f_high = evaluate(profile, low), evaluate(profile, high)
    chord = (f_high - f_low) / (high - low)
    return all(
        n.value == f_low + chord * (n.s - low)
        for n in _interior_nodes(profile, low, high)
    )


def _check_support(profile, s4, s1) -> ConditionResult:
    offenders = [
        n.s for n in profile.nodes if (n.s <= s4 or n.s >= s1) and not n.value.is_zero()
    ]
    for s in (PiRational(0), s4, s1):
        if not evaluate(profile, s).is_zero():
            offenders.append(s)

    if offenders:
        where = ", ".join(str(s) for s in sorted(set(offenders), key=float))
        return ConditionResult(1, CONDITION_NAMES[1], False, f"nonzero at s = {where}")
    return ConditionResult(1, CONDITION_NAMES[1], True)


def _check_linear(condition, profile, low, high, direction) -> ConditionResult:
    name = CONDITION_NAMES[condition]
    f_low, f_high = evaluate(profile, low), evaluate(profile, high)
    moves = (f_high - f_low).sign()

    if moves != direction:
        word = "decrease" if direction < 0 else "increase"
        return ConditionResult(
            condition, name, False, f"does not {word}: f({low})={f_low}, f({high})={f_high}"
        )
    if not _is_linear_on(profile, low, high):
        return ConditionResult(condition, name, False, f"not linear on [{low}, {high}]")
    return ConditionResult(condition, name, True)


def _check_plateau(profile, s3, s2, depth) -> ConditionResult:
    points = [s3, s2] + [n.s for n in _interior_nodes(profile, s3, s2)]
    bad = [s for s in points if evaluate(profile, s) != depth]
    if bad:
        values = ", ".join(f"f({s})={evaluate(profile, s)}" for s in bad)
        return ConditionResult(4, CONDITION_NAMES[4], False, f"expected {depth}: {values}")
    return ConditionResult(4, CONDITION_NAMES[4], True)


def _as_profile(candidate: Any) -> Tuple[Optional[RadialProfile], ConditionResult]:
    # A node list is radial if it defines a single-valued function of s alone
    name = CONDITION_NAMES[2]
    if isinstance(candidate, RadialProfile):
        return candidate, ConditionResult(2, name, True, "given as a radial profile")
    try:
        profile = RadialProfile(tuple(candidate), compact=False)
    except SpeckillError as exc:
        return None, ConditionResult(2, name, False, exc.message)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        return None, ConditionResult(2, name, False, f"not a list of (s, value) nodes: {exc}")
    return profile, ConditionResult(2, name, True, f"{len(profile.nodes)} nodes in s")


def _skipped(reason: str) -> List[ConditionResult]:
    return [ConditionResult(k, CONDITION_NAMES[k], False, reason) for k in (1, 3, 4, 5)]


def validate_killer(candidate: Any, r: Any, eps: Any) -> KillerValidationReport:
    """
    Checks each killer condition individually. Never raises; inadmissible
    radii or a malformed candidate are carried by the report as failures.

    Args:
        candidate: The candidate killer, a RadialProfile or a sequence of
            (s, value) nodes.
        r: Ball radius.
        eps: Shell width parameter.

    Returns:
        KillerValidationReport: One result per condition (1)-(5).
    """
    profile, radial = _as_profile(candidate)
    try:
        r, eps = check_radii(r, eps)
    except InvalidParameterError as exc:
        results = _skipped(f"no shell: {exc.message}")
    else:
        if profile is None:
            results = _skipped("no profile to evaluate")
        else:
            s1, s2, s3, s4 = (shell_s(r, eps, k) for k in (1, 2, 3, 4))
            results = [
                _check_support(profile, s4, s1),
                _check_linear(3, profile, s4, s3, -1),
                _check_plateau(profile, s3, s2, -ball_area(r)),
                _check_linear(5, profile, s2, s1, 1),
            ]

    report = KillerValidationReport(sorted(results + [radial], key=lambda c: c.condition))
    for failure in report.failures:
        logger.debug("Killer condition (%s) failed: %s", failure.condition, failure.detail)
    return report
