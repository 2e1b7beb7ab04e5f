"""
rules.py

The inference rules of the bound calculus. Each rule checks its premises
against a fixed schema and fires only on an exact match; everything else is a
SchemaMismatchError.

You can add a rule by defining another AxiomRule instance below; it is picked
up by RULES automatically.
"""

from __future__ import annotations

from typing import Any, Dict, Sequence

import sympy as sp

from speckill.calculus.utils.fact_infra import (
    NU,
    AxiomRule,
    BoundFact,
    BoundTrace,
    Interval,
    Quantity,
    c_of,
    same_expr,
    to_expr,
)
from speckill.errors import SchemaMismatchError
from speckill.radial.profiles import make_killer
from speckill.radial.utils.profile_infra import sup_norm


def _param(params: Dict[str, Any], key: str) -> Any:
    if key not in params:
        raise SchemaMismatchError(f"Missing rule parameter '{key}'.")
    return params[key]


def _expect(fact: BoundFact, kind: str, *args: str) -> None:
    if fact.quantity.kind != kind or (args and fact.quantity.args != args):
        wanted = f"{kind}({', '.join(args)})" if args else kind
        raise SchemaMismatchError(
            f"Premise {fact.fact_id} bounds {fact.quantity}, expected {wanted}."
        )


def _require_upper(fact: BoundFact) -> sp.Expr:
    if not fact.interval.bounded_above:
        raise SchemaMismatchError(f"Premise {fact.fact_id} has no upper bound.")
    return fact.interval.hi


def _pairwise_disjoint(trace: BoundTrace, hids: Sequence[str]) -> bool:
    seen = set()
    for hid in hids:
        support = trace.hamiltonian(hid).support
        if support is None or seen & support:
            return False
        seen |= support
    return True


def _check_sum(trace: BoundTrace, target: str, premises: Sequence[BoundFact], kind: str):
    # Premises must bound exactly the declared disjoint summands of target
    parts = trace.hamiltonian(target).parts
    if not parts:
        raise SchemaMismatchError(f"{target} is not declared as a sum.")
    for fact in premises:
        _expect(fact, kind)
    cited = sorted(f.quantity.args[0] for f in premises)
    if cited != sorted(parts):
        raise SchemaMismatchError(
            f"Premises cover {cited}, but {target} is the sum of {sorted(parts)}."
        )
    if not _pairwise_disjoint(trace, parts):
        raise SchemaMismatchError(
            f"Summands of {target} are not disjointly supported; "
            "# is only known to be + for disjoint supports."
        )
    return parts


# ================ Spectral invariant axioms ================


def _normalization(trace, premises, params):
    target = params.get("target", "0")
    ham = trace.hamiltonian(target)
    if ham.constant is None or not same_expr(ham.constant, sp.Integer(0)):
        raise SchemaMismatchError(f"{target} is not declared as the zero function.")
    return c_of(target), Interval.point(0)


NORMALIZATION = AxiomRule(
    name="normalization",
    description="c(0) = 0",
    apply=_normalization,
    arity=0,
)


def _monotonicity(trace, premises, params):
    (fact,) = premises
    _expect(fact, "c")
    target = _param(params, "target")
    other = fact.quantity.args[0]
    if (target, other) in trace.orderings:
        return c_of(target), Interval(-sp.oo, fact.interval.hi)
    if (other, target) in trace.orderings:
        return c_of(target), Interval(fact.interval.lo, sp.oo)
    raise SchemaMismatchError(f"No declared ordering between {target} and {other}.")


MONOTONICITY = AxiomRule(
    name="monotonicity",
    description="H <= G implies c(H) <= c(G)",
    apply=_monotonicity,
    arity=1,
)


def _triangle(trace, premises, params):
    target = _param(params, "target")
    _check_sum(trace, target, premises, "c")
    total = sum((_require_upper(f) for f in premises), sp.Integer(0))
    return c_of(target), Interval(-sp.oo, total)


TRIANGLE = AxiomRule(
    name="triangle",
    description="c(H # G) <= c(H) + c(G), with # = + for disjoint supports",
    apply=_triangle,
)


def _continuity(trace, premises, params):
    perturbed_fact, norm_fact = premises
    _expect(perturbed_fact, "c")
    target = _param(params, "target")
    perturbation = _param(params, "perturbation")
    _expect(norm_fact, "norm", perturbation)

    perturbed = perturbed_fact.quantity.args[0]
    if trace.leaves(perturbed) != sorted(trace.leaves(target) + trace.leaves(perturbation)):
        raise SchemaMismatchError(f"{perturbed} is not {target} + {perturbation}.")

    bound = _require_upper(norm_fact)
    interval = perturbed_fact.interval
    return c_of(target), Interval(interval.lo - bound, interval.hi + bound)


CONTINUITY = AxiomRule(
    name="continuity",
    description="|c(H) - c(G)| <= ||H - G||_inf",
    apply=_continuity,
    arity=2,
)


def _energy_capacity(trace, premises, params):
    target = _param(params, "target")
    support = trace.hamiltonian(target).support
    if support is None or len(support) != 1:
        raise SchemaMismatchError(f"{target} must be supported in a single ball.")
    (ball_id,) = support
    energy = trace.ball(ball_id).energy
    return c_of(target), Interval(-energy, energy)


ENERGY_CAPACITY = AxiomRule(
    name="energy_capacity",
    description="|c(H)| <= E(supp H)",
    apply=_energy_capacity,
    arity=0,
)


def _union_energy_bound(trace, premises, params):
    target = _param(params, "target")
    _check_sum(trace, target, premises, "c")
    lo = sum((f.interval.lo for f in premises), sp.Integer(0))
    hi = sum((_require_upper(f) for f in premises), sp.Integer(0))
    return c_of(target), Interval(lo, hi)


UNION_ENERGY_BOUND = AxiomRule(
    name="union_energy_bound",
    description="|c(H_1 + ... + H_k)| <= E(U_1) + ... + E(U_k) for disjoint supports",
    apply=_union_energy_bound,
)


def _m_fold_triangle(trace, premises, params):
    (fact,) = premises
    _expect(fact, "c")
    target = _param(params, "target")
    base = fact.quantity.args[0]
    ham = trace.hamiltonian(target)
    if ham.iterate_of is None or ham.iterate_of[0] != base:
        raise SchemaMismatchError(f"{target} is not declared as an iterate of {base}.")
    m = ham.iterate_of[1]
    return c_of(target), Interval(-sp.oo, m * _require_upper(fact))


M_FOLD_TRIANGLE = AxiomRule(
    name="m_fold_triangle",
    description="c(H^{#m}) <= m c(H)",
    apply=_m_fold_triangle,
    arity=1,
)


def _nonneg_lemma(trace, premises, params):
    upper_fact, lower_fact = premises
    target = _param(params, "target")
    ham = trace.hamiltonian(upper_fact.quantity.args[0])
    if ham.iterate_of is None or ham.iterate_of[0] != target:
        raise SchemaMismatchError(
            f"{upper_fact.quantity} is not about an iterate of {target}."
        )
    _expect(lower_fact, "c", upper_fact.quantity.args[0])
    if lower_fact.hypothetical:
        raise SchemaMismatchError(f"Energy premise {lower_fact.fact_id} is itself hypothetical.")

    # c(H^m) <= -m delta < -E <= c(H^m) rules out c(H) <= -delta
    if not (_require_upper(upper_fact) - lower_fact.interval.lo).is_negative:
        raise SchemaMismatchError(
            f"No contradiction: {upper_fact.interval.hi} is not below {lower_fact.interval.lo}."
        )
    return c_of(target), Interval(0, sp.oo)


NONNEG_LEMMA = AxiomRule(
    name="nonneg_lemma",
    description="c <= E on all H supported in U implies c(H) >= 0",
    apply=_nonneg_lemma,
    arity=2,
    discharges=True,
)


def _assumption(trace, premises, params):
    quantity = Quantity(_param(params, "kind"), tuple(_param(params, "args")))
    return quantity, Interval(to_expr(params.get("lo", -sp.oo)), to_expr(params.get("hi", sp.oo)))


ASSUMPTION = AxiomRule(
    name="assumption",
    description="A declared hypothesis, e.g. c(H) <= -delta inside a contradiction",
    apply=_assumption,
    arity=0,
    hypothesis=True,
)


def _instantiate(trace, premises, params):
    (fact,) = premises
    target = _param(params, "target")
    source = fact.quantity.args[0]
    if trace.leaves(target) != trace.leaves(source):
        raise SchemaMismatchError(f"{target} and {source} are different Hamiltonians.")
    if fact.quantity.kind == "c_family":
        # c(sF) for all s > 0 includes s = 1
        return c_of(target), fact.interval
    return Quantity(fact.quantity.kind, (target,) + fact.quantity.args[1:]), fact.interval


INSTANTIATE = AxiomRule(
    name="instantiate",
    description="Transfers a fact to an identical Hamiltonian or to the s = 1 instance",
    apply=_instantiate,
    arity=1,
)


def _intersect(trace, premises, params):
    first, second = premises
    if first.quantity != second.quantity:
        raise SchemaMismatchError(
            f"Cannot intersect facts about {first.quantity} and {second.quantity}."
        )
    return first.quantity, first.interval.intersect(second.interval)


INTERSECT = AxiomRule(
    name="intersect",
    description="Two bounds on one quantity combine",
    apply=_intersect,
    arity=2,
)


# ================ Killers ================


def _killer_pair(trace, target):
    ham = trace.hamiltonian(target)
    if len(ham.parts) != 2:
        raise SchemaMismatchError(f"{target} must be declared as H_i + K_i.")
    killers = [p for p in ham.parts if "killer" in trace.hamiltonian(p).roles]
    if len(killers) != 1:
        raise SchemaMismatchError(f"{target} must contain exactly one killer.")
    (killer,) = killers
    (other,) = [p for p in ham.parts if p != killer]
    k_support = trace.hamiltonian(killer).support
    h_support = trace.hamiltonian(other).support
    if k_support is None or len(k_support) != 1 or h_support != k_support:
        raise SchemaMismatchError(f"{other} and {killer} must share one ball.")
    (ball_id,) = k_support
    return trace.ball(ball_id)


def _killer_theorem(trace, premises, params):
    target = _param(params, "target")
    ball = _killer_pair(trace, target)
    if trace.lam is None:
        raise SchemaMismatchError("The killer theorem needs the monotonicity constant.")
    if not (ball.energy - sp.Abs(trace.lam) / 2).is_negative:
        raise SchemaMismatchError(
            f"Ball {ball.ball_id}: E = {ball.energy} is not below |lambda|/2."
        )
    return c_of(target), Interval.point(0)


KILLER_THEOREM = AxiomRule(
    name="killer_theorem",
    description="c(H + K_eps) = 0 for H supported in B_{r-4eps}, E < |lambda|/2",
    apply=_killer_theorem,
    arity=0,
)


def _killer_certificate(trace, premises, params):
    target = _param(params, "target")
    ball = _killer_pair(trace, target)
    if _param(params, "status") != "CERTIFIED":
        raise SchemaMismatchError(f"Certificate for {target} is not CERTIFIED.")
    r = to_expr(_param(params, "r"))
    if not same_expr(r, ball.radius):
        raise SchemaMismatchError(f"Certificate radius does not match ball {ball.ball_id}.")
    if not same_expr(to_expr(_param(params, "E")), ball.energy):
        raise SchemaMismatchError(f"Certificate energy does not match ball {ball.ball_id}.")
    eps = to_expr(_param(params, "eps"))
    if not (eps.is_positive and (r / 4 - eps).is_positive):
        raise SchemaMismatchError(f"Certificate shell width {eps} is not in (0, r/4).")
    lam = params.get("lambda")
    if trace.lam is not None and lam is not None and not same_expr(to_expr(lam), trace.lam):
        raise SchemaMismatchError(f"Certificate lambda {lam} does not match {trace.lam}.")
    return c_of(target), Interval.point(0)


KILLER_CERTIFICATE = AxiomRule(
    name="killer_certificate",
    description="c(H + K_eps) = 0 imported from a CERTIFIED certificate",
    apply=_killer_certificate,
    arity=0,
)


def _sup_norm(trace, premises, params):
    target = _param(params, "target")
    if "killer" not in trace.hamiltonian(target).roles:
        raise SchemaMismatchError(f"{target} is not a killer.")
    value = to_expr(sup_norm(make_killer(_param(params, "r"), _param(params, "eps"))))
    return Quantity("norm", (target,)), Interval.point(value)


SUP_NORM = AxiomRule(
    name="sup_norm",
    description="||K_eps||_inf = pi r^2, computed from the killer profile",
    apply=_sup_norm,
    arity=0,
)


def _disjoint_norm(trace, premises, params):
    target = _param(params, "target")
    _check_sum(trace, target, premises, "norm")
    lo = sp.Max(*[f.interval.lo for f in premises])
    hi = sp.Max(*[_require_upper(f) for f in premises])
    return Quantity("norm", (target,)), Interval(lo, hi)


DISJOINT_NORM = AxiomRule(
    name="disjoint_norm",
    description="The sup norm of a disjointly supported sum is the max of the norms",
    apply=_disjoint_norm,
)


# ================ Partial quasi-state ================


def _theorem_bound_family(trace, premises, params):
    family = _param(params, "family")
    ham = trace.hamiltonian(family)
    if not ham.support:
        raise SchemaMismatchError(f"{family} has no declared support in a union of balls.")
    if ham.parts and not _pairwise_disjoint(trace, ham.parts):
        raise SchemaMismatchError(f"Summands of {family} are not disjointly supported.")

    balls = [trace.ball(ball_id) for ball_id in sorted(ham.support)]
    if not all(ball.radius.is_positive for ball in balls):
        raise SchemaMismatchError(f"{family} is supported in a ball of non-positive radius.")
    if trace.lam is not None:
        heavy = [b.ball_id for b in balls if not (b.energy - sp.Abs(trace.lam) / 2).is_negative]
        if heavy:
            raise SchemaMismatchError(f"Balls {heavy} have E >= |lambda|/2.")

    # sF stays supported in the same balls, so the ball bound holds for every s
    expected = sp.pi * sp.Max(*[ball.radius for ball in balls]) ** 2
    bound = to_expr(_param(params, "bound"))
    if not same_expr(bound, expected):
        raise SchemaMismatchError(
            f"Bound {sp.sstr(bound)} for {family} is not pi r^2 = {sp.sstr(expected)}."
        )
    return Quantity("c_family", (family,)), Interval(0, expected)


THEOREM_BOUND_FAMILY = AxiomRule(
    name="theorem_bound_family",
    description="0 <= c(sF) <= pi r^2 for all s > 0, r the largest radius of supp F",
    apply=_theorem_bound_family,
    arity=0,
)


def _zeta_limit(trace, premises, params):
    (fact,) = premises
    _expect(fact, "c_family")
    bound = _require_upper(fact)
    if not bound.is_finite or fact.interval.lo.is_nonnegative is not True:
        raise SchemaMismatchError(f"{fact.fact_id} must bound c(sF) in [0, B].")
    # zeta(F) = lim c(kF)/k lies in [0, lim B/k]
    k = sp.Symbol("k", positive=True)
    upper = sp.limit(bound / k, k, sp.oo)
    return Quantity("zeta", fact.quantity.args), Interval(0, upper)


ZETA_LIMIT = AxiomRule(
    name="zeta_limit",
    description="zeta(F) = lim c(kF)/k vanishes when c(sF) is uniformly bounded",
    apply=_zeta_limit,
    arity=1,
)


def _zeta_normalization(trace, premises, params):
    target = _param(params, "target")
    constant = trace.hamiltonian(target).constant
    if constant is None:
        raise SchemaMismatchError(f"{target} is not declared as a constant.")
    return Quantity("zeta", (target,)), Interval.point(constant)


ZETA_NORMALIZATION = AxiomRule(
    name="zeta_normalization",
    description="zeta(C) = C for constants",
    apply=_zeta_normalization,
    arity=0,
)


def _zeta_monotonicity(trace, premises, params):
    (fact,) = premises
    _expect(fact, "zeta")
    target = _param(params, "target")
    other = fact.quantity.args[0]
    if (target, other) in trace.orderings:
        return Quantity("zeta", (target,)), Interval(-sp.oo, fact.interval.hi)
    if (other, target) in trace.orderings:
        return Quantity("zeta", (target,)), Interval(fact.interval.lo, sp.oo)
    raise SchemaMismatchError(f"No declared ordering between {target} and {other}.")


ZETA_MONOTONICITY = AxiomRule(
    name="zeta_monotonicity",
    description="F <= G implies zeta(F) <= zeta(G)",
    apply=_zeta_monotonicity,
    arity=1,
)


def _s_bound(trace, premises, params):
    (fact,) = premises
    _expect(fact, "c_family")
    left = _param(params, "left")
    right = fact.quantity.args[0]
    # S(F, G) = sup_s min{c(sF), c(-sG)} is at most sup_s c(sG)
    return Quantity("S", (left, right)), Interval(0, _require_upper(fact))


S_BOUND = AxiomRule(
    name="s_bound",
    description="S(G_k, F_{k+1}) <= pi r^2",
    apply=_s_bound,
    arity=1,
)


def _bracket_by_nu(trace, premises, params):
    left, right = _param(params, "left"), _param(params, "right")
    for hid in (left, right):
        if "partition_sum" not in trace.hamiltonian(hid).roles:
            raise SchemaMismatchError(
                f"{hid} is not a sum of partition members with coefficients in [-1, 1]."
            )
    return Quantity("bracket", (left, right)), Interval(0, NU)


BRACKET_BY_NU = AxiomRule(
    name="bracket_by_nu",
    description="||{F, G}||_inf <= nu_c for sums of partition members",
    apply=_bracket_by_nu,
    arity=0,
)


def _pb_inequality(trace, premises, params):
    s_fact, bracket_fact = premises
    _expect(s_fact, "S")
    _expect(bracket_fact, "bracket", *s_fact.quantity.args)
    bound = sp.sqrt(2 * _require_upper(s_fact) * _require_upper(bracket_fact))
    return Quantity("Pi", s_fact.quantity.args), Interval(0, bound)


PB_INEQUALITY = AxiomRule(
    name="pb_inequality",
    description="Pi(F, G) <= sqrt(2 S(F, G) ||{F, G}||_inf)",
    apply=_pb_inequality,
    arity=2,
)


def _telescope(trace, premises, params):
    prefix_fact, member_fact, pi_fact = premises
    _expect(prefix_fact, "zeta")
    _expect(member_fact, "zeta")
    prefix, member = prefix_fact.quantity.args[0], member_fact.quantity.args[0]
    _expect(pi_fact, "Pi", prefix, member)

    target = _param(params, "target")
    if trace.leaves(target) != sorted(trace.leaves(prefix) + trace.leaves(member)):
        raise SchemaMismatchError(f"{target} is not {prefix} + {member}.")

    # zeta(F + G) <= zeta(F) + zeta(G) + Pi(F, G)
    hi = _require_upper(prefix_fact) + _require_upper(member_fact) + _require_upper(pi_fact)
    return Quantity("zeta", (target,)), Interval(-sp.oo, sp.simplify(hi))


TELESCOPE = AxiomRule(
    name="telescope",
    description="zeta(G_{k+1}) <= zeta(G_k) + zeta(F_{k+1}) + Pi(G_k, F_{k+1})",
    apply=_telescope,
    arity=3,
)


def _solve_nu(trace, premises, params):
    upper_fact, exact_fact = premises
    _expect(upper_fact, "zeta")
    _expect(exact_fact, "zeta", *upper_fact.quantity.args)
    value = exact_fact.interval.lo
    if not same_expr(value, exact_fact.interval.hi):
        raise SchemaMismatchError(f"{exact_fact.fact_id} must pin zeta to a value.")

    # value <= hi(nu) with hi increasing in nu
    solutions = [s for s in sp.solve(sp.Eq(_require_upper(upper_fact), value), NU) if s.is_positive]
    if len(solutions) != 1:
        raise SchemaMismatchError("Cannot solve the telescoped bound for nu_c.")
    return Quantity("nu", ("partition",)), Interval(sp.simplify(solutions[0]), sp.oo)


SOLVE_NU = AxiomRule(
    name="solve_nu",
    description="1 = zeta(G_{d+1}) <= d sqrt(2 pi r^2 nu_c) gives nu_c >= 1/(2 d^2 pi r^2)",
    apply=_solve_nu,
    arity=2,
)


def _pb_infimum(trace, premises, params):
    (fact,) = premises
    _expect(fact, "nu", "partition")
    return Quantity("pb", (_param(params, "cover"),)), Interval(fact.interval.lo, sp.oo)


PB_INFIMUM = AxiomRule(
    name="pb_infimum",
    description="pb(U) is the infimum of nu_c over subordinate partitions",
    apply=_pb_infimum,
    arity=1,
)


# Collect all rules defined above
RULES = {
    item.name: item for item in list(globals().values()) if isinstance(item, AxiomRule)
}


def get_rule(name: str) -> AxiomRule:
    if name not in RULES:
        raise SchemaMismatchError(
            f"Unknown rule '{name}'. Known rules: {', '.join(sorted(RULES))}."
        )
    return RULES[name]
