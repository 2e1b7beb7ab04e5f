"""Unit tests for the spectral invariant bound calculus."""
from __future__ import annotations

import random
from dataclasses import replace
from fractions import Fraction

import pytest
import sympy as sp

from speckill.calculus.derivations import (
    apply_axiom,
    audit,
    derive_nonneg,
    derive_theorem_bound,
    interval_summary,
    pb_lower_bound,
    smallest_fold,
    zeta_of_capped_family,
)
from speckill.calculus.rules import RULES, get_rule
from speckill.calculus.utils.fact_infra import (
    BoundTrace,
    Interval,
    Quantity,
    c_of,
    to_expr,
)
from speckill.certify.certifier import certify
from speckill.errors import (
    InvalidParameterError,
    MissingPremiseError,
    SchemaMismatchError,
    TheoremPreconditionError,
)

THREE_BALLS = [(Fraction(1, 5), Fraction(2, 5)), (Fraction(3, 10), Fraction(2, 5)), ("0.25", "0.4")]


class TestFactInfra:
    """Tests for intervals, expressions and traces."""

    def test_to_expr_is_exact(self):
        """Decimal strings and floats become rationals."""
        assert to_expr("0.35") == sp.Rational(7, 20)
        assert to_expr(0.35) == sp.Rational(7, 20)
        assert to_expr(Fraction(-1, 3)) == sp.Rational(-1, 3)

    def test_empty_interval_rejected(self):
        """lo > hi is a schema error."""
        with pytest.raises(SchemaMismatchError):
            Interval(1, 0)

    def test_intersect(self):
        """Intersections take the inner endpoints."""
        joined = Interval(0, sp.oo).intersect(Interval(-sp.pi, sp.pi / 2))
        assert joined.equals(Interval(0, sp.pi / 2))
        assert str(joined) == "[0, pi/2]"

    def test_declare_rejects_unknown_ball(self):
        """Supports must name declared balls."""
        trace = BoundTrace()
        with pytest.raises(SchemaMismatchError):
            trace.declare("H", support=["U1"])

    def test_unknown_fact(self):
        """Citing a missing fact is a missing premise."""
        with pytest.raises(MissingPremiseError):
            BoundTrace().get("f1")


class TestRules:
    """Tests for the rule registry and individual rules."""

    def test_registry(self):
        """Every rule is collected under its own name."""
        assert {"energy_capacity", "nonneg_lemma", "telescope", "solve_nu"} <= set(RULES)
        assert all(name == rule.name for name, rule in RULES.items())

    def test_unknown_rule(self):
        """Unknown names raise a schema error."""
        with pytest.raises(SchemaMismatchError):
            get_rule("no_such_rule")

    def test_arity_is_checked(self):
        """Premise counts must match the rule."""
        trace = BoundTrace()
        trace.declare_ball("U", 0, 1)
        trace.declare("H", support=["U"])
        fact = apply_axiom(trace, "energy_capacity", params={"target": "H"})
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "intersect", [fact.fact_id])

    def test_energy_capacity(self):
        """|c(H)| <= E for H supported in one ball."""
        trace = BoundTrace()
        trace.declare_ball("U", Fraction(1, 5), Fraction(2, 5))
        trace.declare("H", support=["U"])
        fact = apply_axiom(trace, "energy_capacity", params={"target": "H"})
        assert fact.quantity == c_of("H")
        assert fact.interval.equals(Interval(sp.Rational(-2, 5), sp.Rational(2, 5)))

    def test_triangle_needs_disjoint_supports(self):
        """The sum rule refuses overlapping summands."""
        trace = BoundTrace()
        trace.declare_ball("U", 0, 1)
        trace.declare("A", support=["U"])
        trace.declare("B", support=["U"])
        trace.declare("S", support=["U"], parts=["A", "B"])
        a = apply_axiom(trace, "energy_capacity", params={"target": "A"})
        b = apply_axiom(trace, "energy_capacity", params={"target": "B"})
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "triangle", [a.fact_id, b.fact_id], {"target": "S"})

    def test_normalization(self):
        """c(0) = 0 only for a declared zero function."""
        trace = BoundTrace()
        trace.declare("0", constant=0)
        trace.declare("C", constant=Fraction(1, 2))
        fact = apply_axiom(trace, "normalization", params={"target": "0"})
        assert fact.interval.equals(Interval.point(0))
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "normalization", params={"target": "C"})

    def test_monotonicity(self):
        """H <= G transfers the upper bound of c(G) to c(H)."""
        trace = BoundTrace()
        trace.declare_ball("U", Fraction(1, 5), Fraction(2, 5))
        trace.declare("H", support=["U"])
        trace.declare("G", support=["U"])
        upper = apply_axiom(trace, "energy_capacity", params={"target": "G"})
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "monotonicity", [upper.fact_id], {"target": "H"})

        trace.declare_order("H", "G")
        fact = apply_axiom(trace, "monotonicity", [upper.fact_id], {"target": "H"})
        assert fact.quantity == c_of("H")
        assert fact.interval.equals(Interval(-sp.oo, sp.Rational(2, 5)))
        assert audit(trace).ok

    def test_zeta_monotonicity(self):
        """F <= C with C constant gives zeta(F) <= C."""
        trace = BoundTrace()
        trace.declare("F")
        trace.declare("C", constant=Fraction(1, 2))
        trace.declare_order("F", "C")
        const = apply_axiom(trace, "zeta_normalization", params={"target": "C"})
        fact = apply_axiom(trace, "zeta_monotonicity", [const.fact_id], {"target": "F"})
        assert fact.quantity == Quantity("zeta", ("F",))
        assert fact.interval.equals(Interval(-sp.oo, sp.Rational(1, 2)))

    def test_family_bound_needs_ball_support(self):
        """A family with no declared balls has no ball bound to inherit."""
        trace = BoundTrace()
        trace.declare("F1")
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "theorem_bound_family", params={"family": "F1", "bound": "1/1000"})

    def test_family_bound_is_largest_ball_area(self):
        """Only pi r^2 for the largest supporting ball is accepted."""
        trace = BoundTrace()
        trace.declare_ball("B1", Fraction(1, 5), Fraction(2, 5))
        trace.declare_ball("B2", Fraction(1, 10), Fraction(2, 5))
        trace.declare("F1", support=["B1", "B2"])
        for bound in ("1/1000", sp.pi / 100):
            with pytest.raises(SchemaMismatchError):
                apply_axiom(trace, "theorem_bound_family", params={"family": "F1", "bound": bound})

        fact = apply_axiom(
            trace, "theorem_bound_family", params={"family": "F1", "bound": sp.pi / 25}
        )
        assert fact.interval.equals(Interval(0, sp.pi / 25))
        assert audit(trace).ok

    def test_family_bound_needs_disjoint_parts(self):
        """Summands sharing a ball are not a disjoint family."""
        trace = BoundTrace()
        trace.declare_ball("B", Fraction(1, 5), Fraction(2, 5))
        trace.declare("A", support=["B"])
        trace.declare("C", support=["B"])
        trace.declare("F", support=["B"], parts=["A", "C"])
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "theorem_bound_family", params={"family": "F", "bound": sp.pi / 25})

    def test_family_bound_energy_precondition(self):
        """With lambda known, every ball needs E < |lambda|/2."""
        trace = BoundTrace(lam=-1)
        trace.declare_ball("B", Fraction(1, 5), Fraction(1, 2))
        trace.declare("F", support=["B"])
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "theorem_bound_family", params={"family": "F", "bound": sp.pi / 25})

    def test_assumption_is_hypothetical(self):
        """Assumptions and the facts built on them carry the hypothesis flag."""
        trace = BoundTrace()
        trace.declare_ball("U", 0, Fraction(2, 5))
        trace.declare("H", support=["U"])
        trace.declare("H^2", support=["U"], iterate_of=("H", 2))
        premise = apply_axiom(trace, "energy_capacity", params={"target": "H"})
        hypothesis = apply_axiom(trace, "assumption", params={"kind": "c", "args": ["H"], "hi": -1})
        folded = apply_axiom(trace, "m_fold_triangle", [hypothesis.fact_id], {"target": "H^2"})

        assert (premise.hypothetical, hypothesis.hypothetical, folded.hypothetical) == (
            False,
            True,
            True,
        )
        assert trace.find(c_of("H")) is premise
        assert trace.find(c_of("H^2")) is None

        report = audit(trace)
        assert report.mismatches == []
        assert report.undischarged == [hypothesis.fact_id, folded.fact_id]
        assert not report.ok

    def test_intersect_needs_same_quantity(self):
        """Bounds on different quantities cannot be combined."""
        trace = BoundTrace()
        trace.declare_ball("U", 0, 1)
        trace.declare("A", support=["U"])
        trace.declare("B", support=["U"])
        a = apply_axiom(trace, "energy_capacity", params={"target": "A"})
        b = apply_axiom(trace, "energy_capacity", params={"target": "B"})
        with pytest.raises(SchemaMismatchError):
            apply_axiom(trace, "intersect", [a.fact_id, b.fact_id])


class TestNonnegativity:
    """Tests for derive_nonneg."""

    def test_fresh_trace(self):
        """c(H) lands in [0, E]."""
        trace = derive_nonneg(energy=Fraction(2, 5))
        assert trace.final.quantity == c_of("H")
        assert trace.final.interval.equals(Interval(0, sp.Rational(2, 5)))
        assert any(f.rule == "nonneg_lemma" for f in trace.facts)
        assert audit(trace).ok

    def test_zero_energy(self):
        """E = 0 pins c(H) to zero."""
        trace = derive_nonneg(energy=0)
        assert trace.final.interval.equals(Interval.point(0))

    def test_missing_premise(self):
        """Without E or a trace there is nothing to argue from."""
        with pytest.raises(MissingPremiseError):
            derive_nonneg()

    def test_hypothesis_is_discharged(self):
        """Only the hypothesis and its fold are hypothetical, and both are closed."""
        trace = derive_nonneg(energy=Fraction(2, 5))
        assert [f.rule for f in trace.facts if f.hypothetical] == ["assumption", "m_fold_triangle"]
        assert not trace.final.hypothetical
        assert audit(trace).undischarged == []

    def test_hypothesis_is_not_a_premise(self):
        """A trace whose only c(H) fact is a hypothesis has no energy premise."""
        trace = BoundTrace()
        trace.declare_ball("U", 0, Fraction(2, 5))
        trace.declare("H", support=["U"])
        apply_axiom(trace, "assumption", params={"kind": "c", "args": ["H"], "lo": -1, "hi": 1})
        with pytest.raises(MissingPremiseError):
            derive_nonneg(trace=trace, target="H")

    def test_hypothesis_flag_is_audited(self):
        """Clearing the flag on the hypothesis is reported."""
        trace = derive_nonneg(energy=Fraction(2, 5))
        hypothesis = next(f for f in trace.facts if f.rule == "assumption")
        index = trace.position(hypothesis.fact_id)
        trace.facts[index] = replace(hypothesis, hypothetical=False)
        report = audit(trace)
        assert report.mismatches[0].startswith(f"{hypothesis.fact_id}: hypothesis flag")

    def test_smallest_fold(self):
        """m is the least integer with m delta > 2E."""
        assert smallest_fold(sp.Rational(1, 5), sp.Rational(2, 5)) == 5
        assert smallest_fold(sp.Integer(1), sp.Integer(0)) == 1


class TestTheoremBound:
    """Tests for derive_theorem_bound."""

    def test_three_balls(self, monotone_model):
        """Radii 0.2, 0.3, 0.25 give c(H) in [0, 0.09 pi]."""
        trace = derive_theorem_bound(THREE_BALLS, monotone_model)
        assert trace.final.quantity == c_of("H")
        assert trace.final.interval.equals(Interval(0, sp.Rational(9, 100) * sp.pi))
        assert any(f.rule == "nonneg_lemma" for f in trace.facts)

    def test_audit_passes(self, monotone_model):
        """Every fact replays exactly."""
        report = audit(derive_theorem_bound(THREE_BALLS, monotone_model))
        assert report.ok
        assert report.checked > 10

    def test_audit_catches_tampering(self, monotone_model):
        """A widened interval is reported."""
        trace = derive_theorem_bound(THREE_BALLS, monotone_model)
        index = trace.position(trace.final.fact_id)
        trace.facts[index] = replace(trace.final, interval=Interval(0, sp.pi))
        report = audit(trace)
        assert not report.ok
        assert report.mismatches[0].startswith(trace.final.fact_id)

    def test_energy_precondition(self, monotone_model):
        """Balls with E >= |lambda|/2 are listed."""
        balls = [(Fraction(1, 5), Fraction(2, 5)), (Fraction(1, 5), Fraction(1, 2))]
        with pytest.raises(TheoremPreconditionError) as exc:
            derive_theorem_bound(balls, monotone_model)
        assert exc.value.ball_ids == ["U2"]

    def test_no_balls(self, monotone_model):
        """An empty union is rejected."""
        with pytest.raises(InvalidParameterError):
            derive_theorem_bound([], monotone_model)

    def test_certificate_replaces_theorem(self, monotone_model, scenario_input):
        """A CERTIFIED certificate supplies c(H1 + K1) = 0."""
        cert = certify(scenario_input)
        trace = derive_theorem_bound(
            [(scenario_input.r, Fraction(2, 5))], monotone_model, certificates={0: cert}
        )
        rules = [f.rule for f in trace.facts]
        assert "killer_certificate" in rules
        assert "killer_theorem" not in rules
        assert trace.final.interval.equals(Interval(0, sp.Rational(49, 400) * sp.pi))
        assert audit(trace).ok

    def test_certificate_must_match_ball(self, monotone_model, scenario_input):
        """Certificates for another energy, shell width or lambda are rejected."""
        cert = certify(scenario_input)
        ball = [(scenario_input.r, Fraction(2, 5))]
        trace = derive_theorem_bound(ball, monotone_model, certificates={0: cert})
        fact = next(f for f in trace.facts if f.rule == "killer_certificate")
        assert fact.params["digest"] == cert.digest()

        rule = get_rule("killer_certificate")
        for key, value in (("E", "1/5"), ("eps", "7/80"), ("eps", "0"), ("lambda", "-2")):
            with pytest.raises(SchemaMismatchError):
                rule(trace, [], dict(fact.params, **{key: value}))

        with pytest.raises(SchemaMismatchError):
            derive_theorem_bound(
                [(scenario_input.r, Fraction(1, 5))], monotone_model, certificates={0: cert}
            )

    def test_interval_summary(self, monotone_model):
        """Summaries carry the quantity and float endpoints."""
        summary = interval_summary(derive_theorem_bound(THREE_BALLS, monotone_model).final)
        assert summary["quantity"] == "c(H)"
        assert summary["hi"]["value"] == pytest.approx(0.09 * 3.141592653589793)


class TestZeta:
    """Tests for zeta_of_capped_family."""

    def test_bounded_family_has_zero_zeta(self):
        """0 <= c(sF) <= B for all s forces zeta(F) = 0."""
        fact = zeta_of_capped_family(sp.pi / 4)
        assert fact.quantity == Quantity("zeta", ("F",))
        assert fact.interval.equals(Interval.point(0))

    def test_missing_bound(self):
        """A bound or a trace is required."""
        with pytest.raises(MissingPremiseError):
            zeta_of_capped_family()

    def test_nonpositive_bound(self):
        """B must be the area of an actual ball."""
        with pytest.raises(InvalidParameterError):
            zeta_of_capped_family(0)


class TestPbLowerBound:
    """Tests for pb_lower_bound."""

    def test_constant(self):
        """bound * pi r^2 * 2 d^2 is exactly one."""
        rng = random.Random(11)
        for d in range(1, 11):
            r = sp.Rational(rng.randint(1, 99), 100)
            bound, _ = pb_lower_bound(d, r)
            assert sp.simplify(bound * sp.pi * r**2 * 2 * d**2) == 1

    def test_trace_audits(self):
        """The telescoping trace replays exactly."""
        bound, trace = pb_lower_bound(3, "0.2")
        assert audit(trace).ok
        assert trace.final.quantity == Quantity("pb", ("U",))
        assert float(bound) == pytest.approx(1 / (18 * 3.141592653589793 * 0.04))

    @pytest.mark.parametrize("d,r", [(0, "0.2"), (2, 0), (1.5, "0.2")])
    def test_rejects_bad_input(self, d, r):
        """d >= 1 and r > 0 are required."""
        with pytest.raises(InvalidParameterError):
            pb_lower_bound(d, r)

    def test_audit_rejects_unfounded_family_bound(self):
        """A family bound below pi r^2 does not replay."""
        _, trace = pb_lower_bound(2, "0.2")
        fact = next(f for f in trace.facts if f.rule == "theorem_bound_family")
        index = trace.position(fact.fact_id)
        trace.facts[index] = replace(
            fact,
            interval=Interval(0, sp.Rational(1, 1000)),
            params=dict(fact.params, bound="1/1000"),
        )
        report = audit(trace)
        assert not report.ok
        assert report.mismatches[0].startswith(f"{fact.fact_id}: Bound 1/1000")

    def test_families_are_ball_supported(self):
        """Every family rests on a declared ball of radius r."""
        _, trace = pb_lower_bound(3, "0.2")
        for j in range(1, 5):
            assert trace.hamiltonian(f"F{j}").support == frozenset({f"B{j}"})
            assert trace.ball(f"B{j}").radius == sp.Rational(1, 5)
