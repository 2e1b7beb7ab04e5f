"""
profile_infra.py

Infrastructure for exact piecewise-linear radial profiles f(s), s = |z|^2/2.

A profile is a list of nodes (s, value). It is constant at the first node value
on [0, s_first], linear between consecutive nodes and constant at the last node
value beyond s_last. Nonconstant 1-periodic orbits live at corner nodes where
the slope jumps across a multiple 2*pi*l of 2*pi.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, List, Sequence, Tuple

from speckill.errors import InvalidParameterError, InvalidProfileError
from speckill.radial.utils.pi_rational import (
    TWO_PI,
    ZERO,
    PiRational,
    ceil_ratio,
    floor_ratio,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProfileNode:
    """A single breakpoint (s, f(s)) of a radial profile."""

    s: PiRational
    value: PiRational

    def __post_init__(self):
        object.__setattr__(self, "s", PiRational.of(self.s))
        object.__setattr__(self, "value", PiRational.of(self.value))

    def to_json(self) -> Dict[str, Any]:
        return {"s": self.s.to_json(), "value": self.value.to_json()}


@dataclass(frozen=True)
class RadialProfile:
    """
    An exact piecewise-linear radial Hamiltonian profile.

    Attributes:
        nodes (Tuple[ProfileNode, ...]): Breakpoints with strictly increasing s.
        compact (bool): If True the last node value must be zero, i.e. the
            profile vanishes outside a ball. Shifted profiles are not compact.
    """

    nodes: Tuple[ProfileNode, ...]
    compact: bool = True

    def __post_init__(self):
        # Normalize the node container so profiles are hashable
        nodes = tuple(
            n if isinstance(n, ProfileNode) else ProfileNode(*n) for n in self.nodes
        )
        object.__setattr__(self, "nodes", nodes)

        if not nodes:
            raise InvalidProfileError("A radial profile needs at least one node.")
        if nodes[0].s.sign() < 0:
            raise InvalidProfileError(f"First node s-value {nodes[0].s} is negative.")

        for left, right in zip(nodes, nodes[1:]):
            if not left.s < right.s:
                raise InvalidProfileError(
                    f"Node s-values must be strictly increasing ({left.s} >= {right.s})."
                )
            # Slopes are divided by delta s, so it must be rational
            if not (right.s - left.s).is_rational:
                raise InvalidProfileError(
                    f"Node spacing {right.s - left.s} is not rational."
                )

        if self.compact and not nodes[-1].value.is_zero():
            raise InvalidProfileError(
                f"Compactly supported profile must end at value 0, got {nodes[-1].value}."
            )

    @cached_property
    def s_values(self) -> Tuple[PiRational, ...]:
        return tuple(n.s for n in self.nodes)

    @cached_property
    def segment_slopes(self) -> Tuple[PiRational, ...]:
        return tuple(
            (right.value - left.value) / (right.s - left.s)
            for left, right in zip(self.nodes, self.nodes[1:])
        )

    def to_json(self) -> Dict[str, Any]:
        return {"nodes": [n.to_json() for n in self.nodes]}

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "RadialProfile":
        try:
            nodes = [
                ProfileNode(PiRational.of(n["s"]), PiRational.of(n["value"]))
                for n in data["nodes"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidProfileError(f"Malformed profile JSON: {exc}") from exc
        return cls(tuple(nodes), compact=data.get("compact", True))


@dataclass(frozen=True)
class OrbitCircle:
    """
    A circle family of nonconstant 1-periodic orbits at a corner node.

    Attributes:
        s_star (PiRational): Area coordinate of the corner.
        l (int): Nonzero winding number, 2*pi*l strictly between the slopes.
        concavity (int): +1 if the slope increases across the corner (f'' > 0),
            -1 if it decreases.
        f_value (PiRational): Profile value at the corner.
        node_index (int): Index of the corner node in the profile.
    """

    s_star: PiRational
    l: int
    concavity: int
    f_value: PiRational
    node_index: int = -1

    def __post_init__(self):
        if self.l == 0:
            raise InvalidParameterError("Orbit circles have nonzero winding number.")
        if self.concavity not in (1, -1):
            raise InvalidParameterError(
                f"Concavity must be +1 or -1, got {self.concavity}."
            )

    def to_json(self) -> Dict[str, Any]:
        return {"s": self.s_star.to_json(), "l": self.l, "concavity": self.concavity}


def evaluate(profile: RadialProfile, s: Any) -> PiRational:
    """
    Evaluates a profile exactly at area coordinate s.

    Args:
        profile (RadialProfile): The profile.
        s: Area coordinate s = |z|^2/2 >= 0 (anything PiRational.of accepts).

    Returns:
        PiRational: f(s).
    """
    s = PiRational.of(s)
    if s.sign() < 0:
        raise InvalidParameterError(f"Area coordinate must be >= 0, got {s}.")

    nodes = profile.nodes
    if s <= nodes[0].s:
        return nodes[0].value
    if s >= nodes[-1].s:
        return nodes[-1].value

    # Index of the segment [s_i, s_{i+1}] containing s
    i = bisect.bisect_right(profile.s_values, s) - 1
    left = nodes[i]
    if s == left.s:
        return left.value
    return left.value + profile.segment_slopes[i] * (s - left.s)


def slopes(profile: RadialProfile) -> List[Tuple[PiRational, PiRational]]:
    """
    Returns the (left, right) one-sided slopes at every node. The profile is
    flat before the first node and after the last one.
    """
    seg = profile.segment_slopes
    result = []
    for i in range(len(profile.nodes)):
        left = seg[i - 1] if i > 0 else ZERO
        right = seg[i] if i < len(seg) else ZERO
        result.append((left, right))
    return result


def winding_range(low: PiRational, high: PiRational) -> range:
    """
    Returns all integers l with low < 2*pi*l < high (zero included).
    """
    l_min = floor_ratio(low, TWO_PI) + 1
    l_max = ceil_ratio(high, TWO_PI) - 1
    return range(l_min, l_max + 1)


def orbit_circles(profile: RadialProfile) -> List[OrbitCircle]:
    """
    Lists one orbit circle per corner node and admissible nonzero winding l,
    sorted by (s_star, l).

    Args:
        profile (RadialProfile): The profile.

    Returns:
        List[OrbitCircle]: The circle families.
    """
    circles = []
    for i, (node, (left, right)) in enumerate(zip(profile.nodes, slopes(profile))):
        jump = (right - left).sign()
        if jump == 0:
            continue

        low, high = (left, right) if jump > 0 else (right, left)
        for l in winding_range(low, high):
            if l == 0:
                continue
            circles.append(
                OrbitCircle(
                    s_star=node.s,
                    l=l,
                    concavity=jump,
                    f_value=node.value,
                    node_index=i,
                )
            )

    logger.debug("Found %s orbit circles on %s nodes", len(circles), len(profile.nodes))
    return circles


def sup_norm(profile: RadialProfile) -> PiRational:
    """
    Returns max |f|, attained at a node since the profile is piecewise linear.
    """
    return max((abs(n.value) for n in profile.nodes), default=ZERO)


def shift(profile: RadialProfile, constant: Any) -> RadialProfile:
    """
    Adds a constant to every node value. The result is not compactly supported
    unless the constant is zero.
    """
    constant = PiRational.of(constant)
    nodes = tuple(ProfileNode(n.s, n.value + constant) for n in profile.nodes)
    return RadialProfile(nodes, compact=profile.compact and constant.is_zero())


def make_profile(points: Sequence[Tuple[Any, Any]], compact: bool = True) -> RadialProfile:
    """
    Builds a profile from (s, value) pairs of anything PiRational.of accepts.
    """
    return RadialProfile(
        tuple(ProfileNode(PiRational.of(s), PiRational.of(v)) for s, v in points),
        compact=compact,
    )
