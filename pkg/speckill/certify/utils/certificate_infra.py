"""
certificate_infra.py

Types for the spectral-killer certifier: the certification input, per-orbit
verdicts, the per-family enumeration windows and the certificate itself.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional

from speckill.floer.utils.orbit_infra import CappedOrbitClass, ManifoldModel
from speckill.radial.utils.pi_rational import PI, PiRational, fraction_str, to_fraction

# Default zero tolerance is this fraction of pi r^2
DEFAULT_TAU_FACTOR = Fraction(1, 10**6)


class Verdict(str, Enum):
    ZERO = "ZERO"
    NEGATIVE = "NEGATIVE"
    ABOVE_E = "ABOVE_E"
    FORBIDDEN_IN_RANGE = "FORBIDDEN_IN_RANGE"


class CertificateStatus(str, Enum):
    CERTIFIED = "CERTIFIED"
    REFUTED = "REFUTED"
    INVALID_INPUT = "INVALID_INPUT"


def _optional_pi(value: Any) -> Optional[PiRational]:
    return None if value is None else PiRational.of(value)


@dataclass(frozen=True)
class CertificationInput:
    """
    Parameters of one certification run.

    Attributes:
        model (ManifoldModel): The manifold model.
        r (Fraction): Ball radius.
        eps (Fraction): Shell width parameter.
        energy (PiRational): Displacement-energy bound E of the ball.
        tau (Optional[PiRational]): Zero tolerance, default 1e-6 * pi r^2.
        h_max (PiRational): Bound on sup H for the Hamiltonians being killed.
        m (Optional[PiRational]): Inner plateau override.
        plateau (Optional[PiRational]): Middle plateau override (probe mode).
        l_window (Optional[int]): Cap on |l| of enumerated circle orbits.
    """

    model: ManifoldModel
    r: Fraction
    eps: Fraction
    energy: PiRational
    tau: Optional[PiRational] = None
    h_max: PiRational = PiRational()
    m: Optional[PiRational] = None
    plateau: Optional[PiRational] = None
    l_window: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "r", to_fraction(self.r))
        object.__setattr__(self, "eps", to_fraction(self.eps))
        object.__setattr__(self, "energy", PiRational.of(self.energy))
        object.__setattr__(self, "h_max", PiRational.of(self.h_max))
        object.__setattr__(self, "tau", _optional_pi(self.tau))
        object.__setattr__(self, "m", _optional_pi(self.m))
        object.__setattr__(self, "plateau", _optional_pi(self.plateau))

    @property
    def ball_area(self) -> PiRational:
        return PI * self.r**2

    @property
    def effective_tau(self) -> PiRational:
        if self.tau is not None:
            return self.tau
        return self.ball_area * DEFAULT_TAU_FACTOR

    @property
    def effective_plateau(self) -> PiRational:
        return -self.ball_area if self.plateau is None else self.plateau

    def to_json(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_json(),
            "r": fraction_str(self.r),
            "epsilon": fraction_str(self.eps),
            "E": self.energy.to_json(),
            "tau": self.effective_tau.to_json(),
            "h_max": self.h_max.to_json(),
            "m_override": None if self.m is None else self.m.to_json(),
            "plateau": self.effective_plateau.to_json(),
            "l_window": self.l_window,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "CertificationInput":
        """
        Inverse of to_json. The effective tau and plateau written there are
        read back as explicit values, which certify the same way.
        """
        model = data["model"]
        return cls(
            model=ManifoldModel(
                n=model["n"],
                lam=model["lambda"],
                chern_gen=model["chern_gen"],
                mode=model["mode"],
            ),
            r=data["r"],
            eps=data["epsilon"],
            energy=PiRational.of(data["E"]),
            tau=_optional_pi(data.get("tau")),
            h_max=PiRational.of(data.get("h_max", 0)),
            m=_optional_pi(data.get("m_override")),
            plateau=_optional_pi(data.get("plateau")),
            l_window=data.get("l_window"),
        )


@dataclass(frozen=True)
class OrbitVerdict:
    """
    Classification of one index-n capped orbit.

    Attributes:
        orbit (CappedOrbitClass): The orbit.
        verdict (Verdict): Where its action falls relative to (0, E].
        step (int): Proof step 1..7 that produced the row.
        action (PiRational): The action with lambda substituted.
    """

    orbit: CappedOrbitClass
    verdict: Verdict
    step: int
    action: PiRational

    @property
    def sort_key(self):
        o = self.orbit
        return (
            self.step,
            o.l if o.l is not None else 0,
            o.c1,
            o.morse_index if o.morse_index is not None else -1,
            o.branch or 0,
        )

    def to_json(self) -> Dict[str, Any]:
        row = {"step": self.step}
        row.update(self.orbit.to_json())
        row["action_value"] = self.action.to_json()
        row["action_float"] = float(self.action)
        row["verdict"] = self.verdict.value
        return row


def classify(action: PiRational, tau: PiRational, energy: PiRational) -> Verdict:
    """
    Places an action relative to the forbidden range (tau, E].
    """
    if abs(action) <= tau:
        return Verdict.ZERO
    if action < -tau:
        return Verdict.NEGATIVE
    if action > energy:
        return Verdict.ABOVE_E
    return Verdict.FORBIDDEN_IN_RANGE


@dataclass
class GapCheck:
    """|n lambda - pi (r - k eps)^2| > E for one shell radius."""

    k: int
    value: PiRational
    ok: bool

    def to_json(self) -> Dict[str, Any]:
        return {"k": self.k, "value": self.value.to_json(), "ok": self.ok}


@dataclass
class FamilyWindow:
    """
    The circle family of one corner: action(l) = alpha + l * beta.

    Attributes:
        step (int): Proof step 4..7.
        alpha (PiRational): Constant term.
        beta (PiRational): Slope in l.
        band_ls (List[int]): Every nonzero l whose action meets [-tau, E + tau].
        profile_ls (List[int]): Windings present in the profile at this corner.
        excluded_ok (bool): Every l outside band_ls provably misses the band.
    """

    step: int
    alpha: PiRational
    beta: PiRational
    band_ls: List[int]
    profile_ls: List[int]
    excluded_ok: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "step": self.step,
            "alpha": self.alpha.to_json(),
            "beta": self.beta.to_json(),
            "band_l": self.band_ls,
            "profile_l": [min(self.profile_ls), max(self.profile_ls)]
            if self.profile_ls
            else [],
            "excluded_ok": self.excluded_ok,
        }


@dataclass
class SpectralCertificate:
    """
    The outcome of a certification run. CERTIFIED iff the table is nonempty
    and holds no FORBIDDEN_IN_RANGE row.
    """

    status: CertificateStatus
    parameters: Dict[str, Any]
    chosen_m: Optional[PiRational] = None
    table: List[OrbitVerdict] = field(default_factory=list)
    offender: Optional[OrbitVerdict] = None
    reason: Optional[str] = None
    frame: List[str] = field(default_factory=list)
    gap_checks: List[GapCheck] = field(default_factory=list)
    windows: List[FamilyWindow] = field(default_factory=list)
    dichotomy_failures: List[OrbitVerdict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status is CertificateStatus.CERTIFIED

    @property
    def steps_present(self) -> List[int]:
        return sorted({row.step for row in self.table})

    def to_json(self, with_digest: bool = True) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "status": self.status.value,
            "reason": self.reason,
            "chosen_m": None if self.chosen_m is None else self.chosen_m.to_json(),
            "parameters": self.parameters,
            "frame": self.frame,
            "offender": None if self.offender is None else self.offender.to_json(),
            "gap_checks": [g.to_json() for g in self.gap_checks],
            "windows": [w.to_json() for w in self.windows],
            "dichotomy_failures": [row.to_json() for row in self.dichotomy_failures],
            "table": [row.to_json() for row in self.table],
        }
        if with_digest:
            data["digest"] = self.digest()
        return data

    def digest(self) -> str:
        """
        SHA-256 of the canonical JSON encoding (without the digest itself).
        """
        canonical = json.dumps(
            self.to_json(with_digest=False), separators=(",", ":"), allow_nan=False
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
