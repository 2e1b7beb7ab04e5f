"""
derivations.py

Builds auditable bound traces from the rules in rules.py:

    - derive_nonneg: c(H) >= 0 for H supported in a set of energy E
    - derive_theorem_bound: 0 <= c(H) <= pi r^2 for H supported in a disjoint
      union of balls, through the spectral killers
    - zeta_of_capped_family: zeta(F) = 0 when c(sF) is uniformly bounded
    - pb_lower_bound: pb(U) >= 1/(2 d^2 pi r^2) for d-regular ball covers
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import sympy as sp

from speckill.calculus.rules import RULES, get_rule
from speckill.calculus.utils.fact_infra import (
    AuditReport,
    BoundFact,
    BoundTrace,
    Quantity,
    c_of,
    to_expr,
)
from speckill.errors import (
    InvalidParameterError,
    MissingPremiseError,
    SpeckillError,
    TheoremPreconditionError,
)
from speckill.floer.utils.orbit_infra import ManifoldModel
from speckill.radial.utils.pi_rational import PiRational, to_fraction

logger = logging.getLogger(__name__)

# Killer shell width used for each ball, as a fraction of its radius
DEFAULT_EPS_FRACTION = Fraction(1, 8)


def apply_axiom(
    trace: BoundTrace,
    rule: str,
    premises: Sequence[str] = (),
    params: Optional[Dict[str, Any]] = None,
    fact_id: Optional[str] = None,
) -> BoundFact:
    """
    Fires a rule on premise facts of the trace and appends the result.

    Args:
        trace (BoundTrace): The trace to extend.
        rule (str): Rule name (see rules.RULES).
        premises (Sequence[str]): Ids of premise facts.
        params (Optional[Dict[str, Any]]): Rule parameters.
        fact_id (Optional[str]): Id of the new fact (default f<N>).

    Returns:
        BoundFact: The new fact.

    Raises:
        SchemaMismatchError: If the premises do not fit the rule.
    """
    params = dict(params or {})
    premise_facts = [trace.get(p) for p in premises]
    axiom = get_rule(rule)
    quantity, interval = axiom(trace, premise_facts, params)
    fact = BoundFact(
        fact_id=fact_id or trace.next_id(),
        quantity=quantity,
        interval=interval,
        rule=rule,
        premises=tuple(premises),
        params=params,
        hypothetical=axiom.concludes_hypothetically(premise_facts),
    )
    return trace.add(fact)


def audit(trace: BoundTrace) -> AuditReport:
    """
    Replays every fact from its premises and parameters and reports any fact
    whose quantity, interval or hypothesis flag is not reproduced exactly, or
    which cites a later fact. Hypotheses that no discharging rule closes are
    listed separately.
    """
    report = AuditReport()
    for position, fact in enumerate(trace.facts):
        report.checked += 1
        try:
            if any(trace.position(p) >= position for p in fact.premises):
                report.mismatches.append(f"{fact.fact_id}: cites a later fact")
                continue
            premises = [trace.get(p) for p in fact.premises]
            axiom = get_rule(fact.rule)
            quantity, interval = axiom(trace, premises, dict(fact.params))
        except SpeckillError as exc:
            report.mismatches.append(f"{fact.fact_id}: {exc.message}")
            continue

        if quantity != fact.quantity:
            report.mismatches.append(f"{fact.fact_id}: quantity {quantity} != {fact.quantity}")
        elif not interval.equals(fact.interval):
            report.mismatches.append(f"{fact.fact_id}: interval {interval} != {fact.interval}")
        elif axiom.concludes_hypothetically(premises) != fact.hypothetical:
            report.mismatches.append(f"{fact.fact_id}: hypothesis flag does not match {fact.rule}")

    report.undischarged = _undischarged(trace)
    logger.debug(
        "Audited %s facts, %s mismatches, %s open hypotheses",
        report.checked,
        len(report.mismatches),
        len(report.undischarged),
    )
    return report


def _undischarged(trace: BoundTrace) -> List[str]:
    # Walk backwards: a hypothesis is closed once a discharging fact cites it,
    # directly or through a chain of hypothetical facts
    closed = set()
    for fact in reversed(trace.facts):
        axiom = RULES.get(fact.rule)
        if (axiom is not None and axiom.discharges) or fact.fact_id in closed:
            closed.update(p for p in fact.premises if trace.get(p).hypothetical)
    return [f.fact_id for f in trace.facts if f.hypothetical and f.fact_id not in closed]


def _energy_fact(trace: BoundTrace, hid: str) -> BoundFact:
    # Single-ball Hamiltonians use energy-capacity, disjoint sums add them up
    ham = trace.hamiltonian(hid)
    if not ham.parts:
        return apply_axiom(trace, "energy_capacity", params={"target": hid})
    part_facts = [_energy_fact(trace, part) for part in ham.parts]
    return apply_axiom(
        trace,
        "union_energy_bound",
        [f.fact_id for f in part_facts],
        {"target": hid},
    )


def _declare_iterate(trace: BoundTrace, hid: str, m: int) -> str:
    ham = trace.hamiltonian(hid)
    name = f"{hid}^{m}"
    parts = [_declare_iterate(trace, part, m) for part in ham.parts]
    trace.declare(
        name,
        support=ham.support,
        roles=("iterate",),
        parts=parts,
        iterate_of=(hid, m),
    )
    return name


def smallest_fold(delta: sp.Expr, energy: sp.Expr) -> int:
    """
    Returns the smallest integer m with m * delta > 2E.
    """
    m = max(1, math.floor(float(2 * energy / delta)))
    while not (m * delta - 2 * energy).is_positive:
        m += 1
    while m > 1 and ((m - 1) * delta - 2 * energy).is_positive:
        m -= 1
    return m


def derive_nonneg(
    support: Any = "U",
    energy: Any = None,
    trace: Optional[BoundTrace] = None,
    target: Optional[str] = None,
) -> BoundTrace:
    """
    Derives c(H) >= 0 from the premise |c(G)| <= E for every G supported in
    the same set as H, by contradiction: if c(H) <= -delta then
    c(H^{#m}) <= -m delta < -E for m delta > 2E.

    Args:
        support: Ball id (or iterable of ball ids) of the support of H.
        energy: E, used to declare the ball when a fresh trace is created.
        trace (Optional[BoundTrace]): Existing trace to extend. It must hold a
            fact bounding c(target) with a finite upper bound.
        target (Optional[str]): Hamiltonian id, default "H".

    Returns:
        BoundTrace: The trace ending with c(H) in [0, E].

    Raises:
        MissingPremiseError: If the trace holds no energy bound for H.
    """
    target = target or "H"
    if trace is None:
        if energy is None:
            raise MissingPremiseError("derive_nonneg needs E or a trace with its premise.")
        trace = BoundTrace()
        ball_ids = [support] if isinstance(support, str) else list(support)
        if len(ball_ids) != 1:
            raise InvalidParameterError("A fresh trace needs a single support set.")
        trace.declare_ball(ball_ids[0], 0, energy)
        trace.declare(target, support=ball_ids, roles=("restriction",))
        _energy_fact(trace, target)

    premise = trace.find(c_of(target))
    if premise is None or not premise.interval.bounded_above or premise.interval.lo.is_infinite:
        raise MissingPremiseError(f"No fact -E <= c({target}) <= E in the trace.")
    bound = premise.interval.hi

    # A hypothetical c(H) <= -delta with delta = E/2 (or 1 when E = 0)
    delta = bound / 2 if bound.is_positive else sp.Integer(1)
    m = smallest_fold(delta, bound)
    logger.debug("Nonnegativity for %s: delta=%s, m=%s", target, delta, m)

    hypothesis = apply_axiom(
        trace,
        "assumption",
        params={"kind": "c", "args": [target], "hi": -delta},
    )
    iterate = _declare_iterate(trace, target, m)
    folded = apply_axiom(trace, "m_fold_triangle", [hypothesis.fact_id], {"target": iterate})
    iterate_energy = _energy_fact(trace, iterate)
    lemma = apply_axiom(
        trace,
        "nonneg_lemma",
        [folded.fact_id, iterate_energy.fact_id],
        {"target": target, "delta": delta, "m": m},
    )
    apply_axiom(trace, "intersect", [premise.fact_id, lemma.fact_id])
    return trace


def derive_theorem_bound(
    balls: Sequence[Tuple[Any, Any]],
    model: ManifoldModel,
    certificates: Optional[Mapping[int, Any]] = None,
    eps_fraction: Fraction = DEFAULT_EPS_FRACTION,
) -> BoundTrace:
    """
    Derives 0 <= c(H) <= pi r^2, r = max r_i, for H supported in a disjoint
    union of balls B_{r_i} with energies E_i < |lambda|/2.

    Args:
        balls (Sequence[Tuple[Any, Any]]): (r_i, E_i) pairs.
        model (ManifoldModel): The manifold model (provides lambda).
        certificates (Optional[Mapping[int, Any]]): CERTIFIED certificates per
            ball index, used instead of the killer theorem instance.
        eps_fraction (Fraction): Killer shell width as a fraction of r_i.

    Returns:
        BoundTrace: The full trace, ending with c(H) in [0, pi r^2].

    Raises:
        TheoremPreconditionError: Listing every ball with E_i >= |lambda|/2.
    """
    if not balls:
        raise InvalidParameterError("At least one ball is required.")
    certificates = certificates or {}

    radii = [to_fraction(r) for r, _ in balls]
    energies = [to_expr(e) for _, e in balls]
    if any(r <= 0 for r in radii):
        raise InvalidParameterError("Ball radii must be positive.")

    half_lam = sp.Abs(to_expr(model.lam)) / 2
    offending = [f"U{i + 1}" for i, e in enumerate(energies) if not (e - half_lam).is_negative]
    if offending:
        raise TheoremPreconditionError(offending)

    trace = BoundTrace(lam=model.lam)
    ids = [str(i + 1) for i in range(len(balls))]
    for i, r, e in zip(ids, radii, energies):
        trace.declare_ball(f"U{i}", r, e)
        trace.declare(f"H{i}", support=[f"U{i}"], roles=("restriction",))
        trace.declare(f"K{i}", support=[f"U{i}"], roles=("killer",))
        trace.declare(f"HK{i}", support=[f"U{i}"], roles=("sum",), parts=[f"H{i}", f"K{i}"])
    trace.declare("H", support=[f"U{i}" for i in ids], roles=("sum",), parts=[f"H{i}" for i in ids])
    trace.declare("K", support=[f"U{i}" for i in ids], roles=("sum",), parts=[f"K{i}" for i in ids])
    trace.declare(
        "G", support=[f"U{i}" for i in ids], roles=("sum",), parts=[f"HK{i}" for i in ids]
    )

    # Energy bound and nonnegativity for H
    _energy_fact(trace, "H")
    derive_nonneg(trace=trace, target="H")
    nonneg = [f for f in trace.facts if f.rule == "nonneg_lemma" and f.quantity == c_of("H")][-1]

    # c(H_i + K_i) = 0 for every ball
    zero_facts = []
    for index, i in enumerate(ids):
        certificate = certificates.get(index)
        if certificate is not None and certificate.status.value == "CERTIFIED":
            parameters = certificate.parameters
            fact = apply_axiom(
                trace,
                "killer_certificate",
                params={
                    "target": f"HK{i}",
                    "status": certificate.status.value,
                    "r": parameters["r"],
                    "eps": parameters["epsilon"],
                    "E": sp.sstr(to_expr(PiRational.of(parameters["E"]))),
                    "lambda": parameters["model"]["lambda"],
                    "digest": certificate.digest(),
                },
            )
        else:
            fact = apply_axiom(trace, "killer_theorem", params={"target": f"HK{i}"})
        zero_facts.append(fact.fact_id)
    g_upper = apply_axiom(trace, "triangle", zero_facts, {"target": "G"})

    # ||K||_inf = max pi r_i^2
    norm_facts = [
        apply_axiom(
            trace,
            "sup_norm",
            params={"target": f"K{i}", "r": str(r), "eps": str(r * eps_fraction)},
        ).fact_id
        for i, r in zip(ids, radii)
    ]
    norm = apply_axiom(trace, "disjoint_norm", norm_facts, {"target": "K"})

    upper = apply_axiom(
        trace,
        "continuity",
        [g_upper.fact_id, norm.fact_id],
        {"target": "H", "perturbation": "K"},
    )
    final = apply_axiom(trace, "intersect", [nonneg.fact_id, upper.fact_id])
    logger.info("c(H) in %s", final.interval)
    return trace


def zeta_of_capped_family(
    pi_r_sq_bound: Any = None,
    trace: Optional[BoundTrace] = None,
    family: str = "F",
) -> BoundFact:
    """
    Derives zeta(F) = 0 from 0 <= c(sF) <= B for all s > 0.

    Args:
        pi_r_sq_bound: B, used to create the premise when no trace is given.
        trace (Optional[BoundTrace]): Trace holding the c_family premise.
        family (str): The Hamiltonian F.

    Returns:
        BoundFact: zeta(F) in [0, 0].

    Raises:
        MissingPremiseError: If no uniform bound on c(sF) is available.
        InvalidParameterError: If B is not positive.
    """
    if trace is None:
        if pi_r_sq_bound is None:
            raise MissingPremiseError("zeta_of_capped_family needs a bound or a trace.")
        bound = to_expr(pi_r_sq_bound)
        if not bound.is_positive:
            raise InvalidParameterError(f"The bound must be positive, got {bound}.")
        # F is supported in a ball of radius sqrt(B/pi)
        trace = BoundTrace()
        trace.declare_ball("B", sp.sqrt(bound / sp.pi), bound)
        trace.declare(family, support=["B"], roles=("family",))
        apply_axiom(trace, "theorem_bound_family", params={"family": family, "bound": bound})

    premise = trace.find(Quantity("c_family", (family,)))
    if premise is None:
        raise MissingPremiseError(f"No fact bounding c(s{family}) for all s > 0.")
    return apply_axiom(trace, "zeta_limit", [premise.fact_id])


def pb_lower_bound(d: int, r: Any) -> Tuple[sp.Expr, BoundTrace]:
    """
    Derives pb(U) >= 1/(2 d^2 pi r^2) for a d-regular cover by balls of radius
    at most r, colored into d + 1 families of disjoint balls F_1..F_{d+1}
    with prefix sums G_k = F_1 + ... + F_k and G_{d+1} = 1.

    Args:
        d (int): Regularity, d >= 1.
        r: Maximal radius (number, string or sympy expression).

    Returns:
        Tuple[sp.Expr, BoundTrace]: The bound and its trace.
    """
    if not isinstance(d, int) or d < 1:
        raise InvalidParameterError(f"d must be an integer >= 1, got {d}.")
    r = to_expr(r)
    if not r.is_positive:
        raise InvalidParameterError(f"r must be positive, got {r}.")

    area = sp.pi * r**2
    trace = BoundTrace()
    families = [f"F{j}" for j in range(1, d + 2)]
    # Each family is a disjoint union of balls of radius at most r
    for j, name in enumerate(families, start=1):
        trace.declare_ball(f"B{j}", r, area)
        trace.declare(name, support=[f"B{j}"], roles=("family", "partition_sum"))

    # zeta(F_j) = 0 for every family of disjoint balls
    bound_facts, zeta_facts = {}, {}
    for name in families:
        bound_facts[name] = apply_axiom(
            trace, "theorem_bound_family", params={"family": name, "bound": area}
        )
        zeta_facts[name] = apply_axiom(trace, "zeta_limit", [bound_facts[name].fact_id])

    trace.declare("G1", roles=("prefix", "partition_sum"), parts=["F1"])
    prefix = apply_axiom(trace, "instantiate", [zeta_facts["F1"].fact_id], {"target": "G1"})

    for k in range(1, d + 1):
        member = families[k]
        current, following = f"G{k}", f"G{k + 1}"
        extra = {"constant": 1} if k == d else {}
        trace.declare(
            following,
            roles=("prefix", "partition_sum"),
            parts=[current, member],
            **extra,
        )
        s_fact = apply_axiom(trace, "s_bound", [bound_facts[member].fact_id], {"left": current})
        bracket = apply_axiom(trace, "bracket_by_nu", params={"left": current, "right": member})
        pi_fact = apply_axiom(trace, "pb_inequality", [s_fact.fact_id, bracket.fact_id])
        prefix = apply_axiom(
            trace,
            "telescope",
            [prefix.fact_id, zeta_facts[member].fact_id, pi_fact.fact_id],
            {"target": following},
        )

    one = apply_axiom(trace, "zeta_normalization", params={"target": f"G{d + 1}"})
    nu = apply_axiom(trace, "solve_nu", [prefix.fact_id, one.fact_id])
    final = apply_axiom(trace, "pb_infimum", [nu.fact_id], {"cover": "U"})

    bound = sp.simplify(final.interval.lo)
    logger.debug("pb bound for d=%s, r=%s: %s", d, r, bound)
    return bound, trace


def interval_summary(fact: BoundFact) -> Dict[str, Any]:
    """
    Short JSON description of a fact's interval for reports.
    """
    return {"quantity": str(fact.quantity), **fact.interval.to_json()}
