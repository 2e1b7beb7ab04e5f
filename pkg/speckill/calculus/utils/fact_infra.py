"""
fact_infra.py

Infrastructure for the bound calculus: symbolic intervals, quantities,
declared Hamiltonians and the append-only trace of derived facts.

Interval endpoints are sympy expressions so that pi r^2, 1/pi or
sqrt(2 pi r^2 nu) stay exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import sympy as sp

from speckill.errors import MissingPremiseError, SchemaMismatchError
from speckill.radial.utils.pi_rational import PiRational

logger = logging.getLogger(__name__)

# Positive symbol for the Poisson non-commutativity of a partition
NU = sp.Symbol("nu_c", positive=True)


def to_expr(value: Any) -> sp.Expr:
    """
    Converts ints, Fractions, PiRationals, strings and sympy objects to an
    exact sympy expression.
    """
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, PiRational):
        return to_expr(value.rat) + to_expr(value.pi) * sp.pi
    if isinstance(value, Fraction):
        return sp.Rational(value.numerator, value.denominator)
    if isinstance(value, bool):
        raise TypeError("Booleans are not numbers here")
    if isinstance(value, int):
        return sp.Integer(value)
    if isinstance(value, float):
        return to_expr(Fraction(repr(value)))
    if isinstance(value, str):
        return sp.nsimplify(sp.sympify(value), rational=True)
    raise TypeError(f"Cannot convert {type(value).__name__} to an expression")


def same_expr(a: sp.Expr, b: sp.Expr) -> bool:
    """
    Exact symbolic equality, with infinities compared directly.
    """
    if a.is_infinite or b.is_infinite:
        return a == b
    return sp.simplify(a - b) == 0


def expr_json(expr: sp.Expr) -> Dict[str, Any]:
    data: Dict[str, Any] = {"expr": sp.sstr(expr)}
    if expr.is_number and expr.is_finite:
        data["value"] = float(expr)
    return data


@dataclass(frozen=True)
class Interval:
    """
    A closed interval [lo, hi] with sympy endpoints (possibly -oo/oo).
    """

    lo: sp.Expr = -sp.oo
    hi: sp.Expr = sp.oo

    def __post_init__(self):
        object.__setattr__(self, "lo", to_expr(self.lo))
        object.__setattr__(self, "hi", to_expr(self.hi))
        gap = self.hi - self.lo
        if gap.is_negative:
            raise SchemaMismatchError(f"Empty interval [{self.lo}, {self.hi}].")

    @classmethod
    def point(cls, value: Any) -> "Interval":
        return cls(value, value)

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(sp.Max(self.lo, other.lo), sp.Min(self.hi, other.hi))

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def equals(self, other: "Interval") -> bool:
        return same_expr(self.lo, other.lo) and same_expr(self.hi, other.hi)

    @property
    def bounded_above(self) -> bool:
        return not self.hi.is_infinite

    def to_json(self) -> Dict[str, Any]:
        return {"lo": expr_json(self.lo), "hi": expr_json(self.hi)}

    def __str__(self) -> str:
        return f"[{sp.sstr(self.lo)}, {sp.sstr(self.hi)}]"


@dataclass(frozen=True)
class Quantity:
    """
    A quantity a fact bounds, e.g. c(H), zeta(F), Pi(G_1, F_2), norm(K).

    Kinds: c, c_family (c(sF) for all s > 0), zeta, Pi, S, bracket, norm, nu,
    pb.
    """

    kind: str
    args: Tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.kind}({', '.join(self.args)})"


def c_of(hamiltonian: str) -> Quantity:
    return Quantity("c", (hamiltonian,))


@dataclass(frozen=True)
class DeclaredBall:
    """A ball U_i of the disjoint union with radius and displacement energy."""

    ball_id: str
    radius: sp.Expr
    energy: sp.Expr


@dataclass(frozen=True)
class AbstractHamiltonian:
    """
    An opaque Hamiltonian known only through its metadata.

    Attributes:
        hid (str): Identifier.
        support (Optional[FrozenSet[str]]): Ball ids of its support, None for
            global support.
        roles (FrozenSet[str]): Tags such as killer, restriction, sum, prefix.
        parts (Tuple[str, ...]): Summands, if declared as a sum.
        iterate_of (Optional[Tuple[str, int]]): (base, m) if H = base^{#m}.
        constant (Optional[sp.Expr]): Value if H is a constant function.
        bounds (Optional[Interval]): A known interval for c(H).
        norm_bound (Optional[sp.Expr]): A known bound on the sup norm.
    """

    hid: str
    support: Optional[FrozenSet[str]] = None
    roles: FrozenSet[str] = frozenset()
    parts: Tuple[str, ...] = ()
    iterate_of: Optional[Tuple[str, int]] = None
    constant: Optional[sp.Expr] = None
    bounds: Optional[Interval] = None
    norm_bound: Optional[sp.Expr] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "id": self.hid,
            "support": "global" if self.support is None else sorted(self.support),
            "roles": sorted(self.roles),
            "parts": list(self.parts),
            "iterate_of": list(self.iterate_of) if self.iterate_of else None,
            "constant": None if self.constant is None else sp.sstr(self.constant),
            "bounds": None if self.bounds is None else self.bounds.to_json(),
            "norm_bound": None if self.norm_bound is None else sp.sstr(self.norm_bound),
        }


@dataclass(frozen=True)
class BoundFact:
    """
    One derived interval with its provenance.

    Attributes:
        fact_id (str): Identifier, unique within a trace.
        quantity (Quantity): What is bounded.
        interval (Interval): The bound.
        rule (str): Name of the rule that produced it.
        premises (Tuple[str, ...]): Ids of the premise facts.
        params (Dict[str, Any]): Rule parameters (JSON-friendly).
        hypothetical (bool): True for an assumption made inside a proof by
            contradiction, and for every fact resting on one until a
            discharging rule closes the argument.
    """

    fact_id: str
    quantity: Quantity
    interval: Interval
    rule: str
    premises: Tuple[str, ...] = ()
    params: Dict[str, Any] = field(default_factory=dict, hash=False, compare=False)
    hypothetical: bool = False

    def to_json(self) -> Dict[str, Any]:
        return {
            "fact_id": self.fact_id,
            "quantity": str(self.quantity),
            "interval": self.interval.to_json(),
            "rule": self.rule,
            "premises": list(self.premises),
            "params": {k: _param_json(v) for k, v in self.params.items()},
            "hypothetical": self.hypothetical,
        }


def _param_json(value: Any) -> Any:
    if isinstance(value, sp.Basic):
        return sp.sstr(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_param_json(v) for v in value]
    return value


class BoundTrace:
    """
    Declarations plus an append-only list of facts. Facts may only cite
    earlier facts, so traces are acyclic by construction.
    """

    def __init__(self, lam: Optional[Any] = None):
        """
        Creates an empty trace.

        Args:
            lam: Monotonicity constant of the ambient manifold, if known.
        """
        self.lam = None if lam is None else to_expr(lam)
        self.balls: Dict[str, DeclaredBall] = {}
        self.hamiltonians: Dict[str, AbstractHamiltonian] = {}
        self.orderings: set = set()
        self.facts: List[BoundFact] = []
        self._index: Dict[str, int] = {}

    # ------------------------------------------------------------------
    # Declarations
    # ------------------------------------------------------------------

    def declare_ball(self, ball_id: str, radius: Any, energy: Any) -> DeclaredBall:
        ball = DeclaredBall(ball_id, to_expr(radius), to_expr(energy))
        self.balls[ball_id] = ball
        return ball

    def declare(self, hid: str, **kwargs) -> AbstractHamiltonian:
        """
        Declares a Hamiltonian. Support ids must reference declared balls and
        parts must reference declared Hamiltonians.
        """
        support = kwargs.pop("support", None)
        if support is not None:
            support = frozenset(support)
            unknown = support - set(self.balls)
            if unknown:
                raise SchemaMismatchError(f"{hid}: undeclared balls {sorted(unknown)}.")
        parts = tuple(kwargs.pop("parts", ()))
        missing = [p for p in parts if p not in self.hamiltonians]
        if missing:
            raise SchemaMismatchError(f"{hid}: undeclared parts {missing}.")
        roles = frozenset(kwargs.pop("roles", ()))
        constant = kwargs.pop("constant", None)
        if constant is not None:
            constant = to_expr(constant)

        ham = AbstractHamiltonian(
            hid=hid,
            support=support,
            roles=roles,
            parts=parts,
            constant=constant,
            **kwargs,
        )
        self.hamiltonians[hid] = ham
        return ham

    def declare_order(self, lower: str, upper: str) -> None:
        """
        Records the pointwise inequality lower <= upper.
        """
        self.orderings.add((lower, upper))

    def hamiltonian(self, hid: str) -> AbstractHamiltonian:
        if hid not in self.hamiltonians:
            raise SchemaMismatchError(f"Undeclared Hamiltonian {hid}.")
        return self.hamiltonians[hid]

    def ball(self, ball_id: str) -> DeclaredBall:
        if ball_id not in self.balls:
            raise SchemaMismatchError(f"Undeclared ball {ball_id}.")
        return self.balls[ball_id]

    def leaves(self, hid: str) -> List[str]:
        """
        Expands a declared sum into its non-sum summands.
        """
        ham = self.hamiltonian(hid)
        if not ham.parts:
            return [hid]
        result = []
        for part in ham.parts:
            result.extend(self.leaves(part))
        return sorted(result)

    # ------------------------------------------------------------------
    # Facts
    # ------------------------------------------------------------------

    def add(self, fact: BoundFact) -> BoundFact:
        if fact.fact_id in self._index:
            raise SchemaMismatchError(f"Duplicate fact id {fact.fact_id}.")
        for premise in fact.premises:
            if premise not in self._index:
                raise MissingPremiseError(
                    f"Fact {fact.fact_id} cites unknown or later fact {premise}."
                )
        self._index[fact.fact_id] = len(self.facts)
        self.facts.append(fact)
        logger.debug("%s: %s in %s by %s", fact.fact_id, fact.quantity, fact.interval, fact.rule)
        return fact

    def get(self, fact_id: str) -> BoundFact:
        if fact_id not in self._index:
            raise MissingPremiseError(f"Unknown fact {fact_id}.")
        return self.facts[self._index[fact_id]]

    def position(self, fact_id: str) -> int:
        return self._index[fact_id]

    def find(self, quantity: Quantity) -> Optional[BoundFact]:
        """
        Returns the most recent established fact about a quantity, if any.
        Hypothetical facts are never returned.
        """
        for fact in reversed(self.facts):
            if fact.quantity == quantity and not fact.hypothetical:
                return fact
        return None

    def next_id(self) -> str:
        return f"f{len(self.facts) + 1}"

    @property
    def final(self) -> Optional[BoundFact]:
        return self.facts[-1] if self.facts else None

    def to_json(self) -> Dict[str, Any]:
        return {
            "lambda": None if self.lam is None else sp.sstr(self.lam),
            "balls": [
                {"id": b.ball_id, "r": expr_json(b.radius), "E": expr_json(b.energy)}
                for b in self.balls.values()
            ],
            "hamiltonians": [h.to_json() for h in self.hamiltonians.values()],
            "orderings": [list(pair) for pair in sorted(self.orderings)],
            "facts": [f.to_json() for f in self.facts],
            "final": None if self.final is None else self.final.fact_id,
        }


RuleFn = Callable[[BoundTrace, Sequence[BoundFact], Dict[str, Any]], Tuple[Quantity, Interval]]


@dataclass(frozen=True)
class AxiomRule:
    """
    A named inference rule. `apply` checks the premises against the rule's
    schema and returns the implied (quantity, interval), raising
    SchemaMismatchError otherwise.

    `hypothesis` rules introduce hypothetical facts; `discharges` rules
    conclude an established fact from hypothetical premises.
    """

    name: str
    description: str
    apply: RuleFn
    arity: Optional[int] = None
    hypothesis: bool = False
    discharges: bool = False

    def concludes_hypothetically(self, premises: Sequence[BoundFact]) -> bool:
        if self.hypothesis:
            return True
        return not self.discharges and any(p.hypothetical for p in premises)

    def __call__(self, trace: BoundTrace, premises: Sequence[BoundFact], params: Dict[str, Any]):
        if self.arity is not None and len(premises) != self.arity:
            raise SchemaMismatchError(
                f"Rule {self.name} takes {self.arity} premises, got {len(premises)}."
            )
        return self.apply(trace, premises, params)


@dataclass
class AuditReport:
    """Mismatches and open hypotheses found while replaying a trace."""

    checked: int = 0
    mismatches: List[str] = field(default_factory=list)
    undischarged: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.undischarged

    def to_json(self) -> Dict[str, Any]:
        return {
            "ok": self.ok,
            "checked": self.checked,
            "mismatches": list(self.mismatches),
            "undischarged": list(self.undischarged),
        }
