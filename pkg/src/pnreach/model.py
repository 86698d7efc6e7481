"""Core semantic types: Petri nets, markings, linear formulas, queries.

Everything in this module is immutable after construction and safe to share
across concurrent checker tasks.  Markings are stored sparsely: a place
absent from the token map holds zero tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Union


class ModelError(Exception):
    """Invalid model construction or usage."""


class EvaluationError(ModelError):
    """A formula mentions a place the marking does not assign."""


class FiringError(ModelError):
    """Transition not enabled, or unknown transition."""


# ---------------------------------------------------------------------------
# Markings


class Marking:
    """Sparse assignment of non-negative token counts to places.

    The optional ``domain`` records which places the marking assigns (all of
    them implicitly at zero when absent from ``tokens``).  Reading a place
    outside the domain raises :class:`EvaluationError`.  Equality and hashing
    consider only the non-zero token map, so ``Marking({"p": 1})`` equals a
    net-built marking with the same tokens and a wider domain.
    """

    __slots__ = ("_tokens", "_domain")

    def __init__(self, tokens: Mapping[str, int], domain: Iterable[str] | None = None):
        dom = frozenset(tokens) if domain is None else frozenset(domain)
        clean: dict[str, int] = {}
        for place, count in tokens.items():
            if not isinstance(count, int) or isinstance(count, bool):
                raise ModelError(f"token count for place '{place}' must be an integer")
            if count < 0:
                raise ModelError(f"negative token count for place '{place}'")
            if place not in dom:
                raise ModelError(f"place '{place}' is outside the marking domain")
            if count:
                clean[place] = count
        self._tokens = clean
        self._domain = dom

    @property
    def domain(self) -> frozenset[str]:
        return self._domain

    def tokens(self, place: str) -> int:
        """Token count of ``place``; 0 when unmarked."""
        if place not in self._domain:
            raise EvaluationError(f"place '{place}' is not assigned by this marking")
        return self._tokens.get(place, 0)

    def nonzero(self) -> tuple[tuple[str, int], ...]:
        return tuple(sorted(self._tokens.items()))

    def as_dict(self) -> dict[str, int]:
        return dict(self._tokens)

    def total(self) -> int:
        return sum(self._tokens.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Marking):
            return NotImplemented
        return self._tokens == other._tokens

    def __hash__(self) -> int:
        return hash(frozenset(self._tokens.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}: {n}" for p, n in self.nonzero())
        return f"Marking({{{inner}}})"


# ---------------------------------------------------------------------------
# Linear formulas


@dataclass(frozen=True)
class LinearExpr:
    """Integer linear expression: ``constant + sum(coeff * place)``.

    ``terms`` is kept sorted by place with merged coefficients and no zero
    coefficients, so structural equality coincides with syntactic equality
    of the normal form.
    """

    constant: int = 0
    terms: tuple[tuple[int, str], ...] = ()

    @staticmethod
    def build(constant: int = 0, terms: Iterable[tuple[int, str]] = ()) -> "LinearExpr":
        merged: dict[str, int] = {}
        for coeff, place in terms:
            merged[place] = merged.get(place, 0) + coeff
        normal = tuple(
            (coeff, place) for place, coeff in sorted(merged.items()) if coeff
        )
        return LinearExpr(constant, normal)

    @staticmethod
    def of_const(value: int) -> "LinearExpr":
        return LinearExpr(value, ())

    @staticmethod
    def of_place(place: str, coeff: int = 1) -> "LinearExpr":
        return LinearExpr.build(0, [(coeff, place)])

    @staticmethod
    def of_places(places: Iterable[str]) -> "LinearExpr":
        return LinearExpr.build(0, [(1, p) for p in places])

    def places(self) -> frozenset[str]:
        return frozenset(p for _, p in self.terms)

    def shifted(self, delta: int) -> "LinearExpr":
        return LinearExpr(self.constant + delta, self.terms)

    def evaluate(self, marking: Marking) -> int:
        return self.constant + sum(c * marking.tokens(p) for c, p in self.terms)

    def __add__(self, other: "LinearExpr | int") -> "LinearExpr":
        if isinstance(other, int):
            return self.shifted(other)
        return LinearExpr.build(
            self.constant + other.constant, self.terms + other.terms
        )

    def __sub__(self, other: "LinearExpr | int") -> "LinearExpr":
        if isinstance(other, int):
            return self.shifted(-other)
        negated = tuple((-c, p) for c, p in other.terms)
        return LinearExpr.build(self.constant - other.constant, self.terms + negated)


COMPARISON_OPS = ("=", "<=", ">=")


@dataclass(frozen=True)
class Atom:
    """Comparison between two linear expressions; op is one of =, <=, >=."""

    lhs: LinearExpr
    op: str
    rhs: LinearExpr

    def __post_init__(self) -> None:
        if self.op not in COMPARISON_OPS:
            raise ModelError(f"unsupported comparison operator '{self.op}'")

    def places(self) -> frozenset[str]:
        return self.lhs.places() | self.rhs.places()


def compare(lhs: LinearExpr | int, op: str, rhs: LinearExpr | int) -> Atom:
    """Build an atom, rewriting strict comparisons into the =, <=, >= alphabet.

    Over integers ``a < b`` is ``a <= b - 1`` and ``a > b`` is ``a >= b + 1``.
    """
    if isinstance(lhs, int):
        lhs = LinearExpr.of_const(lhs)
    if isinstance(rhs, int):
        rhs = LinearExpr.of_const(rhs)
    if op == "<":
        return Atom(lhs, "<=", rhs.shifted(-1))
    if op == ">":
        return Atom(lhs, ">=", rhs.shifted(1))
    return Atom(lhs, op, rhs)


@dataclass(frozen=True)
class BoolConst:
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"


@dataclass(frozen=True)
class And:
    operands: tuple["BoolExpr", ...]


@dataclass(frozen=True)
class Or:
    operands: tuple["BoolExpr", ...]


BoolExpr = Union[BoolConst, Atom, Not, And, Or]


def conj(operands: Iterable[BoolExpr]) -> BoolExpr:
    """N-ary conjunction with flattening and constant folding."""
    flat: list[BoolExpr] = []
    for op in operands:
        if isinstance(op, BoolConst):
            if not op.value:
                return FALSE
            continue
        if isinstance(op, And):
            flat.extend(op.operands)
        else:
            flat.append(op)
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(operands: Iterable[BoolExpr]) -> BoolExpr:
    """N-ary disjunction with flattening and constant folding."""
    flat: list[BoolExpr] = []
    for op in operands:
        if isinstance(op, BoolConst):
            if op.value:
                return TRUE
            continue
        if isinstance(op, Or):
            flat.extend(op.operands)
        else:
            flat.append(op)
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def places_of(expr: BoolExpr) -> frozenset[str]:
    if isinstance(expr, BoolConst):
        return frozenset()
    if isinstance(expr, Atom):
        return expr.places()
    if isinstance(expr, Not):
        return places_of(expr.operand)
    return frozenset().union(*(places_of(op) for op in expr.operands))


def evaluate(marking: Marking, expr: BoolExpr) -> bool:
    """Ground truth of ``expr`` with places substituted by their token counts."""
    if isinstance(expr, BoolConst):
        return expr.value
    if isinstance(expr, Atom):
        left = expr.lhs.evaluate(marking)
        right = expr.rhs.evaluate(marking)
        if expr.op == "=":
            return left == right
        if expr.op == "<=":
            return left <= right
        return left >= right
    if isinstance(expr, Not):
        return not evaluate(marking, expr.operand)
    if isinstance(expr, And):
        return all(evaluate(marking, op) for op in expr.operands)
    if isinstance(expr, Or):
        return any(evaluate(marking, op) for op in expr.operands)
    raise ModelError(f"not a boolean expression: {expr!r}")


def push_negations(expr: BoolExpr, negate: bool = False) -> BoolExpr:
    """Negation normal form with negation folded into atoms.

    The result contains no :class:`Not` nodes: negated atoms are rewritten
    over the integers (``not (a <= b)`` becomes ``a >= b + 1``; a negated
    equality splits into a disjunction of the two strict sides).
    """
    if isinstance(expr, BoolConst):
        return BoolConst(expr.value != negate)
    if isinstance(expr, Atom):
        if not negate:
            return expr
        if expr.op == "<=":
            return Atom(expr.lhs, ">=", expr.rhs.shifted(1))
        if expr.op == ">=":
            return Atom(expr.lhs, "<=", expr.rhs.shifted(-1))
        return Or(
            (
                Atom(expr.lhs, "<=", expr.rhs.shifted(-1)),
                Atom(expr.lhs, ">=", expr.rhs.shifted(1)),
            )
        )
    if isinstance(expr, Not):
        return push_negations(expr.operand, not negate)
    if isinstance(expr, And):
        parts = tuple(push_negations(op, negate) for op in expr.operands)
        return disj(parts) if negate else conj(parts)
    if isinstance(expr, Or):
        parts = tuple(push_negations(op, negate) for op in expr.operands)
        return conj(parts) if negate else disj(parts)
    raise ModelError(f"not a boolean expression: {expr!r}")


# ---------------------------------------------------------------------------
# Nets


class PetriNet:
    """Generalized Petri net: weighted pre/post arcs, no bounds on markings.

    ``pre`` and ``post`` map each transition to a sparse ``place -> weight``
    mapping (absent pairs have weight 0).  Place and transition identifiers
    must be disjoint and duplicate-free.
    """

    __slots__ = ("name", "places", "transitions", "_pre", "_post", "initial_marking",
                 "_place_set", "_transition_set")

    def __init__(
        self,
        name: str,
        places: Iterable[str],
        transitions: Iterable[str],
        pre: Mapping[str, Mapping[str, int]],
        post: Mapping[str, Mapping[str, int]],
        initial_marking: Mapping[str, int],
    ):
        self.name = name
        self.places = tuple(places)
        self.transitions = tuple(transitions)
        self._place_set = frozenset(self.places)
        self._transition_set = frozenset(self.transitions)
        if len(self._place_set) != len(self.places):
            raise ModelError("duplicate place identifier")
        if len(self._transition_set) != len(self.transitions):
            raise ModelError("duplicate transition identifier")
        overlap = self._place_set & self._transition_set
        if overlap:
            raise ModelError(f"identifier used for both place and transition: {sorted(overlap)}")

        def clean_arcs(arcs: Mapping[str, Mapping[str, int]], side: str) -> dict[str, dict[str, int]]:
            out: dict[str, dict[str, int]] = {t: {} for t in self.transitions}
            for t, row in arcs.items():
                if t not in self._transition_set:
                    raise ModelError(f"{side} arcs reference unknown transition '{t}'")
                for p, w in row.items():
                    if p not in self._place_set:
                        raise ModelError(f"{side} arc of '{t}' references unknown place '{p}'")
                    if not isinstance(w, int) or isinstance(w, bool) or w < 0:
                        raise ModelError(f"{side} arc weight ({t}, {p}) must be a non-negative integer")
                    if w:
                        out[t][p] = w
            return out

        self._pre = clean_arcs(pre, "pre")
        self._post = clean_arcs(post, "post")
        for p in initial_marking:
            if p not in self._place_set:
                raise ModelError(f"initial marking assigns unknown place '{p}'")
        self.initial_marking = Marking(initial_marking, domain=self.places)

    def pre(self, transition: str) -> Mapping[str, int]:
        return MappingProxyType(self._pre[transition])

    def post(self, transition: str) -> Mapping[str, int]:
        return MappingProxyType(self._post[transition])

    def pre_weight(self, transition: str, place: str) -> int:
        return self._pre[transition].get(place, 0)

    def post_weight(self, transition: str, place: str) -> int:
        return self._post[transition].get(place, 0)

    def has_place(self, place: str) -> bool:
        return place in self._place_set

    def has_transition(self, transition: str) -> bool:
        return transition in self._transition_set

    def incidence(self, place: str, transition: str) -> int:
        """Net token effect of ``transition`` on ``place`` (post minus pre)."""
        return self.post_weight(transition, place) - self.pre_weight(transition, place)

    def __repr__(self) -> str:
        return (f"PetriNet({self.name!r}, |P|={len(self.places)}, "
                f"|T|={len(self.transitions)})")


def is_enabled(net: PetriNet, marking: Marking, transition: str) -> bool:
    if not net.has_transition(transition):
        raise FiringError(f"unknown transition '{transition}'")
    return all(marking.tokens(p) >= w for p, w in net.pre(transition).items())


def fire(net: PetriNet, marking: Marking, transition: str) -> Marking:
    """Fire ``transition``: result(p) = m(p) - pre(t, p) + post(t, p)."""
    if not net.has_transition(transition):
        raise FiringError(f"unknown transition '{transition}'")
    if not is_enabled(net, marking, transition):
        raise FiringError(f"transition '{transition}' not enabled")
    out = marking.as_dict()
    for p, w in net.pre(transition).items():
        out[p] = out.get(p, 0) - w
    for p, w in net.post(transition).items():
        out[p] = out.get(p, 0) + w
    return Marking(out, domain=net.places)


def enabled_transitions(net: PetriNet, marking: Marking) -> frozenset[str]:
    """All transitions fireable at ``marking``; empty set means deadlock."""
    return frozenset(t for t in net.transitions if is_enabled(net, marking, t))


def fireable_expr(net: PetriNet, transition: str) -> BoolExpr:
    """Fireability of a transition as a token predicate: and(p >= pre(t, p))."""
    if not net.has_transition(transition):
        raise ModelError(f"unknown transition '{transition}'")
    return conj(
        compare(LinearExpr.of_place(p), ">=", w)
        for p, w in sorted(net.pre(transition).items())
    )


def deadlock_expr(net: PetriNet) -> BoolExpr:
    """Deadlock as a token predicate: no transition is fireable."""
    return conj(
        push_negations(Not(fireable_expr(net, t))) for t in net.transitions
    )


# ---------------------------------------------------------------------------
# Reduction systems


@dataclass(frozen=True)
class ReductionSystem:
    """Linear equations relating an original net's places to a reduced net's.

    ``aux_places`` holds variables introduced by agglomerations that were
    later removed again; they belong to neither net but may appear in
    equations (existentially, on the reduced side).
    """

    original_places: frozenset[str]
    reduced_places: frozenset[str]
    equations: tuple[Atom, ...]
    aux_places: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        known = self.original_places | self.reduced_places | self.aux_places
        for eq in self.equations:
            if eq.op != "=":
                raise ModelError("reduction equations must be equalities")
            unknown = eq.places() - known
            if unknown:
                raise ModelError(
                    f"equation mentions undeclared variable(s): {sorted(unknown)}"
                )

    @staticmethod
    def identity(places: Iterable[str]) -> "ReductionSystem":
        ps = frozenset(places)
        return ReductionSystem(ps, ps, ())


# ---------------------------------------------------------------------------
# Queries and traces


@dataclass(frozen=True)
class Query:
    """A reachability query: EF body (reachable?) or AG body (invariant?)."""

    id: str
    quantifier: str  # "EF" or "AG"
    body: BoolExpr

    def __post_init__(self) -> None:
        if self.quantifier not in ("EF", "AG"):
            raise ModelError(f"unsupported quantifier '{self.quantifier}'")


@dataclass(frozen=True)
class NormalizedGoal:
    """A query rewritten to the form "is goal reachable?".

    ``answer_if_reachable`` is the query verdict when the goal is reachable;
    its negation is the verdict when the goal is unreachable.  The goal is in
    negation normal form with negation folded into atoms.
    """

    goal: BoolExpr
    answer_if_reachable: bool

    @property
    def answer_if_unreachable(self) -> bool:
        return not self.answer_if_reachable


def normalize(query: Query) -> NormalizedGoal:
    """Rewrite EF F / AG F into a reachability goal via AG F = not EF not F."""
    if query.quantifier == "EF":
        return NormalizedGoal(push_negations(query.body), True)
    return NormalizedGoal(push_negations(Not(query.body)), False)


@dataclass(frozen=True)
class Trace:
    """A firing sequence with the markings it traverses, starting from m0.

    ``markings`` has one more entry than ``transitions``: markings[i] is the
    marking before transitions[i], markings[-1] the final marking.
    """

    transitions: tuple[str, ...]
    markings: tuple[Marking, ...]

    @staticmethod
    def replay(net: PetriNet, transitions: Iterable[str]) -> "Trace":
        """Build a trace by firing ``transitions`` from the initial marking."""
        markings = [net.initial_marking]
        seq = tuple(transitions)
        for t in seq:
            markings.append(fire(net, markings[-1], t))
        return Trace(seq, tuple(markings))

    @property
    def final_marking(self) -> Marking:
        return self.markings[-1]

    def validate(self, net: PetriNet) -> None:
        """Check every step fires legally and matches the stored markings."""
        if len(self.markings) != len(self.transitions) + 1:
            raise ModelError("trace marking count does not match transition count")
        if self.markings[0] != net.initial_marking:
            raise ModelError("trace does not start at the initial marking")
        current = net.initial_marking
        for i, t in enumerate(self.transitions):
            current = fire(net, current, t)
            if current != self.markings[i + 1]:
                raise ModelError(f"trace marking mismatch after step {i}")
