"""
orbit_infra.py

Capped 1-periodic orbits of radial profiles on a monotone (or aspherical)
manifold model: actions, Conley-Zehnder indices and Novikov recapping.

Conventions:
    - a constant orbit at a Morse critical point p with trivial capping has
      index i_Morse(p) - n
    - gluing a sphere A to the capping shifts the index by -2 c1(A) and the
      action by -omega(A) = -lambda * c1(A)
    - c1(A) ranges over N*Z, N being the minimal Chern number
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

from speckill.errors import InvalidParameterError, RecappingError
from speckill.radial.utils.pi_rational import (
    PiRational,
    fraction_str,
    to_fraction,
)
from speckill.radial.utils.profile_infra import OrbitCircle

logger = logging.getLogger(__name__)

DEFAULT_CHERN_GEN = 1


class Mode(str, Enum):
    MONOTONE = "monotone"
    ASPHERICAL = "aspherical"


class OrbitKind(str, Enum):
    TRIVIAL = "trivial"
    CIRCLE = "circle"


@dataclass(frozen=True)
class ManifoldModel:
    """
    The closed monotone manifold hosting the ball.

    Attributes:
        n (int): Half of the real dimension.
        lam (Fraction): Monotonicity constant, omega = lam * c1 on spheres.
        chern_gen (int): Minimal Chern number N.
        mode (Mode): MONOTONE, or ASPHERICAL where only trivial cappings exist.
    """

    n: int
    lam: Fraction
    chern_gen: int = DEFAULT_CHERN_GEN
    mode: Mode = Mode.MONOTONE

    def __post_init__(self):
        object.__setattr__(self, "lam", to_fraction(self.lam))
        object.__setattr__(self, "mode", Mode(self.mode))

        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidParameterError(f"Half-dimension n must be >= 1, got {self.n}.")
        if not isinstance(self.chern_gen, int) or self.chern_gen < 1:
            raise InvalidParameterError(
                f"Minimal Chern number must be >= 1, got {self.chern_gen}."
            )
        if self.mode is Mode.MONOTONE and self.lam == 0:
            raise InvalidParameterError("Monotone models need lambda != 0.")

    @property
    def aspherical(self) -> bool:
        return self.mode is Mode.ASPHERICAL

    def admits(self, c1: int) -> bool:
        """
        Returns True if c1 is the Chern number of some sphere class.
        """
        if self.aspherical:
            return c1 == 0
        return c1 % self.chern_gen == 0

    def check_c1(self, c1: int) -> None:
        if self.aspherical and c1 != 0:
            raise RecappingError(f"Aspherical models have no capping with c1 = {c1}.")
        if c1 % self.chern_gen != 0:
            raise InvalidParameterError(
                f"c1 = {c1} is not a multiple of the minimal Chern number {self.chern_gen}."
            )

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "lambda": fraction_str(self.lam),
            "chern_gen": self.chern_gen,
            "mode": self.mode.value,
        }


@dataclass(frozen=True)
class SymbolicAction:
    """
    An action value base + lam_coeff * lambda, kept symbolic in lambda.
    """

    base: PiRational
    lam_coeff: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "base", PiRational.of(self.base))
        object.__setattr__(self, "lam_coeff", to_fraction(self.lam_coeff))

    def at(self, lam: Any) -> PiRational:
        """
        Substitutes a value for lambda.
        """
        return self.base + PiRational.of(lam) * self.lam_coeff

    def shifted(self, lam_delta: Any) -> "SymbolicAction":
        return SymbolicAction(self.base, self.lam_coeff + to_fraction(lam_delta))

    def to_json(self) -> Dict[str, str]:
        data = self.base.to_json()
        data["lambda"] = fraction_str(self.lam_coeff)
        return data


@dataclass(frozen=True)
class CappedOrbitClass:
    """
    A capped orbit class [z, u] (or a whole circle family of them).

    Trivial orbits carry plateau_id/plateau_value/morse_index, circle orbits
    carry circle/branch. Branch 1 sits at the minimum of the perturbing Morse
    function on the circle, branch 2 at its maximum.
    """

    kind: OrbitKind
    c1: int
    action: SymbolicAction
    index: int
    plateau_id: Optional[str] = None
    plateau_value: Optional[PiRational] = None
    morse_index: Optional[int] = None
    circle: Optional[OrbitCircle] = None
    branch: Optional[int] = None

    @property
    def l(self) -> Optional[int]:
        return self.circle.l if self.circle is not None else None

    def action_value(self, lam: Any) -> PiRational:
        return self.action.at(lam)

    def to_json(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is OrbitKind.TRIVIAL:
            row["plateau_id"] = self.plateau_id
        else:
            row["circle"] = self.circle.to_json()
        row["branch"] = self.branch
        row["morse_index"] = self.morse_index
        row["c1"] = self.c1
        row["action"] = self.action.to_json()
        row["index"] = self.index
        return row


def base_action_circle(circle: OrbitCircle) -> PiRational:
    """
    Action of a circle orbit with its trivial capping: f(s*) - 2*pi*l*s*.

    Args:
        circle (OrbitCircle): The orbit circle.

    Returns:
        PiRational: The exact action.
    """
    return circle.f_value - PiRational.pi_multiple(2 * circle.l) * circle.s_star


def trivial_index(morse_index: int, model: ManifoldModel, c1: int = 0) -> int:
    """
    CZ index of a constant orbit: morse_index - n - 2*c1.

    Raises:
        InvalidParameterError: If morse_index is outside [0, 2n] or c1 is not
            a multiple of N.
    """
    if not 0 <= morse_index <= 2 * model.n:
        raise InvalidParameterError(
            f"Morse index must lie in [0, {2 * model.n}], got {morse_index}."
        )
    model.check_c1(c1)
    return morse_index - model.n - 2 * c1


def _base_circle_index(l: int, concavity: int, branch: int, n: int) -> int:
    if branch == 1:
        return -2 * l * n - n + (0 if concavity > 0 else 1)
    return -2 * l * n + n - (1 if concavity > 0 else 0)


def circle_index(
    circle: OrbitCircle, branch: int, model: ManifoldModel, c1: int = 0
) -> int:
    """
    CZ index of the branch-th orbit on a circle family:

        branch 1, f'' > 0: -2ln - n        branch 2, f'' > 0: -2ln + n - 1
        branch 1, f'' < 0: -2ln - n + 1    branch 2, f'' < 0: -2ln + n

    shifted by -2*c1.
    """
    if branch not in (1, 2):
        raise InvalidParameterError(f"Branch must be 1 or 2, got {branch}.")
    model.check_c1(c1)
    return _base_circle_index(circle.l, circle.concavity, branch, model.n) - 2 * c1


def recap(orbit: CappedOrbitClass, a_c1: int, model: ManifoldModel) -> CappedOrbitClass:
    """
    Glues a sphere with Chern number a_c1 to the capping.

    Args:
        orbit (CappedOrbitClass): The capped orbit.
        a_c1 (int): c1 of the glued sphere, a multiple of N.
        model (ManifoldModel): The manifold model.

    Returns:
        CappedOrbitClass: The recapped orbit (c1 += a, index -= 2a,
            action -= lambda * a).

    Raises:
        RecappingError: If a_c1 != 0 on an aspherical model.
    """
    if a_c1 == 0:
        return orbit
    if model.aspherical:
        raise RecappingError(
            f"Cannot recap by c1 = {a_c1}: the model is aspherical."
        )
    model.check_c1(a_c1)

    return replace(
        orbit,
        c1=orbit.c1 + a_c1,
        index=orbit.index - 2 * a_c1,
        action=orbit.action.shifted(-a_c1),
    )


def index_n_solutions(circle: OrbitCircle, model: ManifoldModel) -> List[Tuple[int, int]]:
    """
    Solves circle_index(circle, branch, c1) = n over branches and admissible
    c1. For f'' < 0 only branch 2 with c1 = -ln can work, for f'' > 0 only
    branch 1 with c1 = -n(l + 1). On aspherical models only c1 = 0 is kept.

    Returns:
        List[Tuple[int, int]]: (branch, c1) pairs.
    """
    solutions = []
    for branch in (1, 2):
        gap = _base_circle_index(circle.l, circle.concavity, branch, model.n) - model.n
        if gap % 2:
            continue
        c1 = gap // 2
        if model.admits(c1):
            solutions.append((branch, c1))
    return solutions


def capped_trivial(
    plateau_id: str,
    plateau_value: Any,
    morse_index: int,
    model: ManifoldModel,
    c1: int = 0,
) -> CappedOrbitClass:
    """
    Builds the capped class of a constant orbit on a plateau.
    """
    plateau_value = PiRational.of(plateau_value)
    return CappedOrbitClass(
        kind=OrbitKind.TRIVIAL,
        c1=c1,
        action=SymbolicAction(plateau_value, -c1),
        index=trivial_index(morse_index, model, c1),
        plateau_id=plateau_id,
        plateau_value=plateau_value,
        morse_index=morse_index,
    )


def capped_circle(
    circle: OrbitCircle, branch: int, model: ManifoldModel, c1: int = 0
) -> CappedOrbitClass:
    """
    Builds the capped class of one branch of a circle family.
    """
    return CappedOrbitClass(
        kind=OrbitKind.CIRCLE,
        c1=c1,
        action=SymbolicAction(base_action_circle(circle), -c1),
        index=circle_index(circle, branch, model, c1),
        circle=circle,
        branch=branch,
    )
