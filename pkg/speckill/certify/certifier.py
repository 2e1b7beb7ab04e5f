"""
certifier.py

Certifies c(F) = 0 for the certification profile F of a ball B_r by listing
every capped orbit of CZ index n and showing that its action is either
approximately zero or outside the range (0, E].

Since 0 <= c(F) <= E and c(F) is the action of some index-n capped orbit, such
a table forces c(F) = 0. The orbits are grouped in seven steps:

    1. the maximum of F at the origin (plateau m)
    2. the middle plateau (value a, default -pi r^2)
    3. the outer plateau (value 0)
    4-7. the circle families at the four corners s = (r - k eps)^2 / 2,
         k = 4, 3, 2, 1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

from speckill.certify.utils.certificate_infra import (
    CertificateStatus,
    CertificationInput,
    FamilyWindow,
    GapCheck,
    OrbitVerdict,
    SpectralCertificate,
    Verdict,
    classify,
)
from speckill.errors import (
    InvalidParameterError,
    SchemaMismatchError,
    SpeckillError,
    WindowOverflowError,
)
from speckill.floer.utils.orbit_infra import (
    ManifoldModel,
    capped_circle,
    capped_trivial,
    index_n_solutions,
)
from speckill.radial.profiles import make_certification_profile
from speckill.radial.utils.pi_rational import (
    PI,
    PiRational,
    ceil_ratio,
    floor_ratio,
    smallest_multiple_above,
)
from speckill.radial.utils.profile_infra import orbit_circles

logger = logging.getLogger(__name__)

# Corner node index of the certification profile -> proof step
CORNER_STEPS = {0: 4, 1: 5, 2: 6, 3: 7}

# Shell multiple k of the corner radius r - k*eps for each circle step
STEP_SHELL = {4: 4, 5: 3, 6: 2, 7: 1}

PLATEAU_IN = "plateau_in"
PLATEAU_MID = "plateau_mid"
PLATEAU_OUT = "plateau_out"


@dataclass
class PreconditionReport:
    """Violations of the certification hypotheses, empty when all hold."""

    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_preconditions(inp: CertificationInput) -> PreconditionReport:
    """
    Checks pi r^2 <= E < |lambda|/2 and eps < r/4 (only the latter, plus
    positivity, on aspherical models). Never raises.

    Args:
        inp (CertificationInput): The run parameters.

    Returns:
        PreconditionReport: The list of violated conditions.
    """
    report = PreconditionReport()
    v = report.violations
    tau = inp.effective_tau

    if inp.r <= 0:
        v.append(f"r must be positive (r={inp.r})")
    if inp.eps <= 0:
        v.append(f"epsilon must be positive (epsilon={inp.eps})")
    if inp.r > 0 and inp.eps >= inp.r / 4:
        v.append(f"epsilon < r/4 fails (epsilon={inp.eps}, r/4={inp.r / 4})")
    if inp.energy.sign() <= 0:
        v.append(f"E must be positive (E={inp.energy})")
    if tau.sign() <= 0:
        v.append(f"tau must be positive (tau={tau})")
    elif inp.energy.sign() > 0 and not tau < inp.energy:
        v.append(f"tau < E fails (tau={tau}, E={inp.energy})")
    if inp.m is not None and inp.m.sign() <= 0:
        v.append(f"m override must be positive (m={inp.m})")
    if inp.l_window is not None and inp.l_window < 1:
        v.append(f"l_window must be >= 1 (l_window={inp.l_window})")

    if inp.r > 0:
        plateau = inp.effective_plateau
        if plateau < -inp.ball_area or plateau.sign() > 0:
            v.append(f"plateau must lie in [-pi r^2, 0] (plateau={plateau})")

    if not inp.model.aspherical and inp.r > 0:
        if inp.ball_area > inp.energy:
            v.append(f"pi r^2 <= E fails (pi r^2={inp.ball_area}, E={inp.energy})")
        half_lam = PiRational(abs(inp.model.lam) / 2)
        if not inp.energy < half_lam:
            v.append(f"E < |lambda|/2 fails (E={inp.energy}, |lambda|/2={half_lam})")

    for violation in v:
        logger.debug("Precondition violated: %s", violation)
    return report


def family_beta(inp: CertificationInput, step: int) -> PiRational:
    """
    Returns n*lambda - pi (r - k eps)^2 for the corner of a circle step.
    """
    k = STEP_SHELL[step]
    return PiRational(inp.model.n * inp.model.lam) - PI * (inp.r - k * inp.eps) ** 2


def family_alpha(inp: CertificationInput, step: int, m: PiRational) -> PiRational:
    """
    Returns the l-independent part of the action of a circle step:
    m, n*lambda + a, n*lambda + a and 0 for steps 4, 5, 6, 7.
    """
    if step == 4:
        return m
    if step in (5, 6):
        return PiRational(inp.model.n * inp.model.lam) + inp.effective_plateau
    return PiRational()


def choose_m(inp: CertificationInput) -> PiRational:
    """
    Picks the inner plateau m: the smallest positive multiple of
    |n lambda - pi (r - 4 eps)^2| strictly above max(h_max + pi r^2, E) + tau.
    An explicit override in the input wins.

    Args:
        inp (CertificationInput): The run parameters.

    Returns:
        PiRational: The chosen m.
    """
    if inp.m is not None:
        return inp.m

    unit = abs(family_beta(inp, 4))
    threshold = max(inp.h_max + inp.ball_area, inp.energy) + inp.effective_tau
    k = smallest_multiple_above(unit, threshold)
    logger.debug("Chose m = %s * %s", k, unit)
    return unit * k


def closed_form_action(
    inp: CertificationInput, m: PiRational, step: int, c1: int, l: Optional[int]
) -> PiRational:
    """
    Recomputes the action of an index-n row from the closed-form expression of
    its step, independently of the profile and capping machinery.
    """
    lam = PiRational(inp.model.lam)
    if step == 1:
        return m
    if step == 2:
        return inp.effective_plateau - lam * c1
    if step == 3:
        return -(lam * c1)
    return family_alpha(inp, step, m) + family_beta(inp, step) * l


def _band_ls(alpha: PiRational, beta: PiRational, low: PiRational, high: PiRational):
    # Integers l with low <= alpha + l * beta <= high
    if beta.sign() > 0:
        lo, hi = ceil_ratio(low - alpha, beta), floor_ratio(high - alpha, beta)
    else:
        gamma = -beta
        lo, hi = ceil_ratio(alpha - high, gamma), floor_ratio(alpha - low, gamma)
    return lo, hi


def family_windows(inp: CertificationInput, m: PiRational) -> List[FamilyWindow]:
    """
    For each circle step, finds every nonzero l whose action can meet
    [-tau, E + tau] and verifies that the neighbouring windings on both sides
    miss that band. Since the action is affine in l, this excludes every other
    winding. Only meaningful on monotone models.

    Args:
        inp (CertificationInput): The run parameters.
        m (PiRational): The inner plateau value.

    Returns:
        List[FamilyWindow]: One window per step 4..7.
    """
    if inp.model.aspherical:
        return []

    tau = inp.effective_tau
    low, high = -tau, inp.energy + tau
    profile = make_certification_profile(inp.r, inp.eps, m, inp.effective_plateau)
    by_step: Dict[int, List[int]] = {step: [] for step in STEP_SHELL}
    for circle in orbit_circles(profile):
        by_step[CORNER_STEPS[circle.node_index]].append(circle.l)

    windows = []
    for step in sorted(STEP_SHELL):
        alpha, beta = family_alpha(inp, step, m), family_beta(inp, step)
        if beta.is_zero():
            # Degenerate only when the gap checks fail
            windows.append(FamilyWindow(step, alpha, beta, [], by_step[step], False))
            continue

        lo, hi = _band_ls(alpha, beta, low, high)
        band = [l for l in range(lo, hi + 1) if l != 0]

        def in_band(l: int) -> bool:
            action = alpha + beta * l
            return low <= action <= high

        excluded_ok = not in_band(lo - 1) and not in_band(hi + 1)
        windows.append(FamilyWindow(step, alpha, beta, band, by_step[step], excluded_ok))
    return windows


def gap_checks(inp: CertificationInput) -> List[GapCheck]:
    """
    Checks |n lambda - pi (r - k eps)^2| > E for k = 1..4, which is what keeps
    every circle family out of (0, E]. Empty on aspherical models.
    """
    if inp.model.aspherical:
        return []

    checks = []
    for step, k in sorted(STEP_SHELL.items(), key=lambda item: item[1]):
        value = abs(family_beta(inp, step))
        checks.append(GapCheck(k=k, value=value, ok=value > inp.energy))
    return checks


def _predicted_verdict(row: OrbitVerdict, lam_sign: int) -> Optional[Verdict]:
    # Sign dichotomy of the circle steps on monotone models
    if row.step == 5 and row.orbit.l is not None and row.orbit.l <= -2:
        return Verdict.ABOVE_E if lam_sign < 0 else Verdict.NEGATIVE
    if row.step in (6, 7):
        return Verdict.NEGATIVE if lam_sign < 0 else Verdict.ABOVE_E
    if row.step == 4 and lam_sign < 0:
        return Verdict.ABOVE_E
    return None


def dichotomy_failures(
    table: List[OrbitVerdict], model: ManifoldModel
) -> List[OrbitVerdict]:
    """
    Rows of steps 4-7 whose verdict contradicts the sign predicted from the
    sign of lambda. Empty whenever the certification hypotheses hold.
    """
    if model.aspherical:
        return []

    lam_sign = 1 if model.lam > 0 else -1
    failures = []
    for row in table:
        predicted = _predicted_verdict(row, lam_sign)
        if predicted is not None and row.verdict is not predicted:
            failures.append(row)
    return failures


def _classified(orbit, step, inp) -> OrbitVerdict:
    action = orbit.action_value(inp.model.lam)
    return OrbitVerdict(
        orbit=orbit,
        verdict=classify(action, inp.effective_tau, inp.energy),
        step=step,
        action=action,
    )


def enumerate_index_n(inp: CertificationInput, m: PiRational) -> List[OrbitVerdict]:
    """
    Lists every index-n capped orbit class of the certification profile with
    its verdict, sorted by (step, l, c1).

    Args:
        inp (CertificationInput): The run parameters.
        m (PiRational): The inner plateau value.

    Returns:
        List[OrbitVerdict]: The certification table.

    Raises:
        WindowOverflowError: If some winding exceeds inp.l_window.
    """
    model = inp.model
    n = model.n
    plateau = inp.effective_plateau
    rows: List[OrbitVerdict] = []

    # Step 1: the maximum at the origin, trivially capped
    rows.append(_classified(capped_trivial(PLATEAU_IN, m, 2 * n, model, 0), 1, inp))

    # Steps 2-3: index n forces morse_index = 2n + 2 c1 with c1 in [-n, 0]
    for step, plateau_id, value in ((2, PLATEAU_MID, plateau), (3, PLATEAU_OUT, PiRational())):
        for c1 in range(-n, 1):
            if not model.admits(c1):
                continue
            orbit = capped_trivial(plateau_id, value, 2 * n + 2 * c1, model, c1)
            rows.append(_classified(orbit, step, inp))

    # Steps 4-7: circle families at the four corners
    profile = make_certification_profile(inp.r, inp.eps, m, plateau)
    for circle in orbit_circles(profile):
        if inp.l_window is not None and abs(circle.l) > inp.l_window:
            raise WindowOverflowError(
                f"Winding l={circle.l} at s={circle.s_star} exceeds l_window={inp.l_window}."
            )
        step = CORNER_STEPS[circle.node_index]
        for branch, c1 in index_n_solutions(circle, model):
            rows.append(_classified(capped_circle(circle, branch, model, c1), step, inp))

    rows.sort(key=lambda row: row.sort_key)
    logger.debug("Enumerated %s index-%s rows", len(rows), n)
    return rows


def _frame(status: CertificateStatus, offender: Optional[OrbitVerdict]) -> List[str]:
    frame = [
        "c(F) in [0, E]: nonnegativity lemma plus the energy-capacity bound",
        "c(F) is the action of a capped orbit of CZ index n (spectrality)",
    ]
    if status is CertificateStatus.CERTIFIED:
        frame.append("every index-n action is ~0 or outside (0, E], hence c(F) = 0")
    elif offender is not None:
        frame.append(
            f"step {offender.step} orbit has action {offender.action} in (0, E], "
            "so c(F) = 0 does not follow"
        )
    return frame


def certify(inp: CertificationInput) -> SpectralCertificate:
    """
    Runs the full certification: preconditions, choice of m, enumeration,
    classification and the side checks.

    Args:
        inp (CertificationInput): The run parameters.

    Returns:
        SpectralCertificate: CERTIFIED, REFUTED with the first offending row,
            or INVALID_INPUT with the violated preconditions.
    """
    parameters = inp.to_json()
    preconditions = check_preconditions(inp)
    if not preconditions.ok:
        logger.info("Invalid input: %s", "; ".join(preconditions.violations))
        return SpectralCertificate(
            status=CertificateStatus.INVALID_INPUT,
            parameters=parameters,
            reason="; ".join(preconditions.violations),
        )

    m = choose_m(inp)
    table = enumerate_index_n(inp, m)
    forbidden = [row for row in table if row.verdict is Verdict.FORBIDDEN_IN_RANGE]

    if table and not forbidden:
        status, offender = CertificateStatus.CERTIFIED, None
    else:
        status, offender = CertificateStatus.REFUTED, (forbidden[0] if forbidden else None)

    certificate = SpectralCertificate(
        status=status,
        parameters=parameters,
        chosen_m=m,
        table=table,
        offender=offender,
        frame=_frame(status, offender),
        gap_checks=gap_checks(inp),
        windows=family_windows(inp, m),
        dichotomy_failures=dichotomy_failures(table, inp.model),
    )
    logger.info("Certificate %s with %s rows", status.value, len(table))
    return certificate


def probe_plateau(inp: CertificationInput, a: Any) -> SpectralCertificate:
    """
    Reruns the certification with middle plateau a instead of -pi r^2. The
    step-5 orbit with l = -1 then has action pi (r - 3 eps)^2 + a, which lands
    in (0, E] for a > -pi (r - 3 eps)^2 and refutes the certificate.

    Raises:
        InvalidParameterError: If a is outside [-pi r^2, 0].
    """
    a = PiRational.of(a)
    if a < -inp.ball_area or a.sign() > 0:
        raise InvalidParameterError(f"Probe plateau must lie in [-pi r^2, 0], got {a}.")
    return certify(replace(inp, plateau=a))


def replay_certificate(document: Dict[str, Any]) -> SpectralCertificate:
    """
    Re-runs the certification recorded in a certificate document and checks
    that it reproduces the recorded status and digest.

    Args:
        document (Dict[str, Any]): A certificate as written by to_json, or a
            killer-certify report holding one under "certificate".

    Returns:
        SpectralCertificate: The replayed certificate.

    Raises:
        SchemaMismatchError: If the document is malformed or the replay does
            not match it.
    """
    try:
        document = document.get("certificate", document)
        inp = CertificationInput.from_json(document["parameters"])
        recorded_status, recorded_digest = document["status"], document["digest"]
    except (AttributeError, KeyError, TypeError, ValueError, SpeckillError) as e:
        raise SchemaMismatchError(f"Malformed certificate document ({e}).")

    certificate = certify(inp)
    if certificate.status.value != recorded_status:
        raise SchemaMismatchError(
            f"Certificate records {recorded_status}, replay gives {certificate.status.value}."
        )
    if certificate.digest() != recorded_digest:
        raise SchemaMismatchError("Certificate digest does not match its replay.")
    logger.debug("Replayed certificate %s", recorded_digest[:12])
    return certificate
